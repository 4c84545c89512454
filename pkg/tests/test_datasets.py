
import gzip

import numpy as np
import pandas as pd
import pytest

from src.data.data_loader import (
    IDX_IMAGES_MAGIC,
    IDX_LABELS_MAGIC,
    BenchmarkDataLoader,
    load_mnist,
    load_sonar,
    load_wbcd,
    read_idx,
)
from src.data.preprocessor import DatasetPreprocessor, classification_error, encode_one_vs_rest
from src.utils.exceptions import DatasetFormatError
from src.utils.random_streams import make_stream


def _sonar_frame(n_rows=208, n_mines=111):
    rng = make_stream(100)
    frame = pd.DataFrame(rng.uniform(0.0, 1.0, (n_rows, 60)).round(4))
    frame[60] = ["M"] * n_mines + ["R"] * (n_rows - n_mines)
    return frame


def _wbcd_frame(n_rows=569, n_malignant=212):
    rng = make_stream(101)
    frame = pd.DataFrame(rng.uniform(0.0, 30.0, (n_rows, 30)).round(5))
    frame.insert(0, "diagnosis", ["M"] * n_malignant + ["B"] * (n_rows - n_malignant))
    frame.insert(0, "id", np.arange(842302, 842302 + n_rows))
    return frame


@pytest.fixture
def sonar_file(tmp_path):
    path = tmp_path / "sonar.all-data"
    _sonar_frame().to_csv(path, header=False, index=False)
    return path


@pytest.fixture
def wbcd_file(tmp_path):
    path = tmp_path / "wdbc.data"
    _wbcd_frame().to_csv(path, header=False, index=False)
    return path


def _write_idx(path, magic, array, compress=False):
    header = np.array([magic, *array.shape], dtype=">u4").tobytes()
    data = header + np.asarray(array, dtype=np.uint8).tobytes()
    opener = gzip.open if compress else open
    with opener(path, "wb") as f:
        f.write(data)


@pytest.fixture
def mnist_dir(tmp_path):
    directory = tmp_path / "mnist"
    directory.mkdir()
    rng = make_stream(102)
    train_images = rng.integers(0, 256, (6, 28, 28))
    train_images[0] = 0
    train_images[1] = 255
    _write_idx(directory / "train-images-idx3-ubyte", IDX_IMAGES_MAGIC, train_images)
    _write_idx(directory / "train-labels-idx1-ubyte.gz", IDX_LABELS_MAGIC,
               np.array([3, 1, 4, 1, 5, 9]), compress=True)
    _write_idx(directory / "t10k-images-idx3-ubyte", IDX_IMAGES_MAGIC, rng.integers(0, 256, (4, 28, 28)))
    _write_idx(directory / "t10k-labels-idx1-ubyte", IDX_LABELS_MAGIC, np.array([2, 6, 5, 3]))
    return directory


def test_load_sonar(sonar_file):
    dataset = load_sonar(sonar_file, split_seed=0)
    assert dataset.features.shape == (208, 60)
    assert dataset.train_idx.size == 104 and dataset.test_idx.size == 104
    assert np.intersect1d(dataset.train_idx, dataset.test_idx).size == 0
    assert np.array_equal(np.union1d(dataset.train_idx, dataset.test_idx), np.arange(208))
    assert np.abs(dataset.features).max() <= 1.0
    assert set(np.unique(dataset.targets)) == {-1.0, 1.0}
    assert dataset.targets[0, 0] == 1.0 and dataset.targets[-1, 0] == -1.0
    test_mines = int((dataset.test_y == 1.0).sum())
    assert abs(test_mines - 55.5) <= 1


def test_split_is_seeded(sonar_file):
    first = load_sonar(sonar_file, split_seed=7)
    second = load_sonar(sonar_file, split_seed=7)
    other = load_sonar(sonar_file, split_seed=8)
    assert np.array_equal(first.test_idx, second.test_idx)
    assert not np.array_equal(first.test_idx, other.test_idx)


def test_normalization_uses_training_rows_only(sonar_file, tmp_path):
    dataset = load_sonar(sonar_file)
    frame = pd.read_csv(sonar_file, header=None)
    frame.iloc[dataset.test_idx[0], 0] = 1e6
    moved = tmp_path / "sonar_outlier.data"
    frame.to_csv(moved, header=False, index=False)
    shifted = load_sonar(moved)
    assert np.array_equal(shifted.train_x, dataset.train_x)
    assert shifted.test_x[0, 0] == 1.0


def test_normalization_is_idempotent(sonar_file):
    dataset = load_sonar(sonar_file)
    again = DatasetPreprocessor().fit(dataset.train_x).transform(dataset.train_x)
    assert np.allclose(again, dataset.train_x, atol=1e-12)


def test_load_wbcd(wbcd_file):
    dataset = load_wbcd(wbcd_file)
    assert dataset.features.shape == (569, 30)
    assert dataset.test_idx.size == 200 and dataset.train_idx.size == 369
    assert dataset.targets[0, 0] == 1.0 and dataset.targets[-1, 0] == -1.0


def test_truncated_row_is_rejected(tmp_path):
    lines = _sonar_frame().to_csv(header=False, index=False).splitlines()
    lines[10] = lines[10].rsplit(",", 1)[0]
    path = tmp_path / "sonar.all-data"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetFormatError):
        load_sonar(path)


def test_wrong_row_count_is_rejected(tmp_path):
    path = tmp_path / "sonar.all-data"
    _sonar_frame(n_rows=207).to_csv(path, header=False, index=False)
    with pytest.raises(DatasetFormatError):
        load_sonar(path)


def test_unknown_label_is_rejected(tmp_path):
    frame = _wbcd_frame()
    frame.loc[5, "diagnosis"] = "X"
    path = tmp_path / "wdbc.data"
    frame.to_csv(path, header=False, index=False)
    with pytest.raises(DatasetFormatError):
        load_wbcd(path)


def test_load_mnist(mnist_dir):
    dataset = load_mnist(mnist_dir, n_train=6, n_test=4)
    assert dataset.features.shape == (10, 784)
    assert dataset.features.dtype == np.float32
    assert np.all(dataset.features[0] == -1.0)
    assert np.all(dataset.features[1] == 1.0)
    assert dataset.targets.shape == (10, 10)
    assert np.argmax(dataset.targets[0]) == 3
    assert dataset.targets[0].sum() == -8.0
    assert np.array_equal(dataset.test_idx, np.arange(6, 10))


def test_idx_bad_magic(mnist_dir):
    with pytest.raises(DatasetFormatError):
        read_idx(mnist_dir / "t10k-labels-idx1-ubyte", IDX_IMAGES_MAGIC)


def test_idx_truncated_payload(tmp_path):
    path = tmp_path / "train-images-idx3-ubyte"
    header = np.array([IDX_IMAGES_MAGIC, 6, 28, 28], dtype=">u4").tobytes()
    path.write_bytes(header + bytes(100))
    with pytest.raises(DatasetFormatError):
        read_idx(path, IDX_IMAGES_MAGIC)


def test_mnist_count_mismatch(mnist_dir):
    with pytest.raises(DatasetFormatError):
        load_mnist(mnist_dir, n_train=60000, n_test=4)


def test_loader_resolves_files(tmp_path, sonar_file):
    loader = BenchmarkDataLoader(tmp_path)
    assert loader.available() == {"sonar": True, "wbcd": False, "mnist": False}
    assert loader.load("sonar").name == "sonar"
    assert loader.load("synthetic", split_seed=1).n_inputs == 8
    with pytest.raises(DatasetFormatError):
        loader.load("iris")
    with pytest.raises(FileNotFoundError):
        loader.load("wbcd")


def test_synthetic_dataset():
    dataset = BenchmarkDataLoader.generate_synthetic_data(n_samples=100, n_features=5, test_size=20, seed=2)
    assert dataset.features.shape == (100, 5)
    assert dataset.test_idx.size == 20
    assert dataset.with_train_subset(10).train_idx.size == 10
    again = BenchmarkDataLoader.generate_synthetic_data(n_samples=100, n_features=5, test_size=20, seed=2)
    assert np.array_equal(dataset.features, again.features)


def test_classification_error():
    rng = make_stream(103)
    targets = np.where(rng.random((10_000, 1)) < 0.5, -1.0, 1.0)
    assert classification_error(targets, targets) == 0.0
    assert classification_error(-targets, targets) == 100.0
    assert 47.0 <= classification_error(rng.uniform(-1, 1, (10_000, 1)), targets) <= 53.0
    assert classification_error(np.zeros((1, 1)), np.ones((1, 1))) == 0.0
    assert classification_error(np.array([1.0, -1.0, 1.0, -1.0]), np.array([1.0, 1.0, 1.0, -1.0])) == 25.0
    assert classification_error(np.array([0.3, -0.2]), np.array([[1.0], [1.0]])) == 50.0

    multi = encode_one_vs_rest(np.array([0, 2, 1]), 3)
    outputs = np.array([[0.9, -0.2, -0.5], [0.1, 0.3, 0.2], [-0.4, 0.8, -0.9]])
    assert classification_error(outputs, multi) == pytest.approx(100 / 3)
