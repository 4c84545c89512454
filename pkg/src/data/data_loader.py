"""
Data Loader for the Benchmark Datasets
Reads SONAR (Rocks vs Mines), WBCD (Wisconsin Diagnostic Breast Cancer) and
MNIST from their standard file layouts:

    <data_dir>/sonar.all-data      60 features + R/M label, 208 rows
    <data_dir>/wdbc.data           id, B/M diagnosis, 30 features, 569 rows
    <data_dir>/mnist/              train-images-idx3-ubyte[.gz], train-labels-idx1-ubyte[.gz],
                                   t10k-images-idx3-ubyte[.gz],  t10k-labels-idx1-ubyte[.gz]
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union
import gzip
import logging
import os

import numpy as np
import pandas as pd

from src.data.preprocessor import (
    DatasetPreprocessor,
    encode_bipolar,
    encode_one_vs_rest,
    stratified_split,
)
from src.utils.exceptions import DatasetFormatError
from src.utils.random_streams import make_stream

logger = logging.getLogger(__name__)

SONAR_ROWS, SONAR_FEATURES, SONAR_TEST = 208, 60, 104
WBCD_ROWS, WBCD_FEATURES, WBCD_TEST = 569, 30, 200
MNIST_TRAIN, MNIST_TEST, MNIST_PIXELS, MNIST_CLASSES = 60000, 10000, 28 * 28, 10

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

SONAR_LABELS = {"R": -1, "M": 1}
WBCD_LABELS = {"B": -1, "M": 1}

DEFAULT_SPLIT_SEED = 0


@dataclass(frozen=True)
class Dataset:
    """Normalized features, bipolar targets and a disjoint train/test split"""
    name: str
    features: np.ndarray
    targets: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray

    @property
    def n_inputs(self) -> int:
        return self.features.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.targets.shape[1]

    @property
    def train_x(self) -> np.ndarray:
        return self.features[self.train_idx]

    @property
    def train_y(self) -> np.ndarray:
        return self.targets[self.train_idx]

    @property
    def test_x(self) -> np.ndarray:
        return self.features[self.test_idx]

    @property
    def test_y(self) -> np.ndarray:
        return self.targets[self.test_idx]

    def with_train_subset(self, n: Optional[int]) -> "Dataset":
        """Keep the first n training samples (test split unchanged)"""
        if n is None or n >= self.train_idx.size:
            return self
        return Dataset(self.name, self.features, self.targets, self.train_idx[:n], self.test_idx)


def _read_csv(path: Path, n_rows: int, n_cols: int) -> pd.DataFrame:
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    try:
        df = pd.read_csv(path, header=None, skip_blank_lines=True)
    except pd.errors.ParserError as e:
        raise DatasetFormatError(f"{path}: {e}")
    if df.shape[1] != n_cols:
        raise DatasetFormatError(f"{path}: expected {n_cols} columns per row, found {df.shape[1]}")
    if df.isnull().values.any():
        bad = int(df.isnull().any(axis=1).to_numpy().argmax())
        raise DatasetFormatError(f"{path}: row {bad + 1} is truncated or has missing values")
    if len(df) != n_rows:
        raise DatasetFormatError(f"{path}: expected {n_rows} rows, found {len(df)}")
    logger.info(f"Loaded {len(df)} records from {path}")
    return df


def _numeric(df: pd.DataFrame, path: Path) -> np.ndarray:
    try:
        return df.to_numpy(dtype=float)
    except ValueError as e:
        raise DatasetFormatError(f"{path}: non-numeric feature value ({e})")


def _build(name: str, raw_features: np.ndarray, targets: np.ndarray, labels,
           test_size: int, split_seed: int) -> Dataset:
    train_idx, test_idx = stratified_split(labels, test_size, split_seed)
    features = DatasetPreprocessor().fit_transform_split(raw_features, train_idx)
    logger.info(f"{name}: {train_idx.size} train / {test_idx.size} test samples, "
                f"{features.shape[1]} features")
    return Dataset(name, features, targets, train_idx, test_idx)


def load_sonar(path: Union[str, Path], split_seed: int = DEFAULT_SPLIT_SEED) -> Dataset:
    """
    Load the UCI SONAR (Rocks vs Mines) CSV

    Args:
        path: sonar.all-data file
        split_seed: Seed of the stratified 104/104 split

    Returns:
        Dataset with a single bipolar target (R -> -1, M -> +1)
    """
    path = Path(path)
    df = _read_csv(path, SONAR_ROWS, SONAR_FEATURES + 1)
    labels = df.iloc[:, -1].astype(str).str.strip()
    targets = encode_bipolar(labels, SONAR_LABELS)
    raw = _numeric(df.iloc[:, :-1], path)
    return _build("sonar", raw, targets, labels, SONAR_TEST, split_seed)


def load_wbcd(path: Union[str, Path], split_seed: int = DEFAULT_SPLIT_SEED) -> Dataset:
    """
    Load the UCI Wisconsin Diagnostic Breast Cancer CSV

    Args:
        path: wdbc.data file (id, diagnosis, 30 features)
        split_seed: Seed of the stratified 369/200 split

    Returns:
        Dataset with a single bipolar target (B -> -1, M -> +1)
    """
    path = Path(path)
    df = _read_csv(path, WBCD_ROWS, WBCD_FEATURES + 2)
    labels = df.iloc[:, 1].astype(str).str.strip()
    targets = encode_bipolar(labels, WBCD_LABELS)
    raw = _numeric(df.iloc[:, 2:], path)
    return _build("wbcd", raw, targets, labels, WBCD_TEST, split_seed)


def _open_idx(path: Path) -> bytes:
    for candidate in (path, path.with_name(path.name + ".gz")):
        if candidate.exists():
            opener = gzip.open if candidate.suffix == ".gz" else open
            with opener(candidate, "rb") as f:
                return f.read()
    raise FileNotFoundError(f"idx file not found: {path}[.gz]")


def read_idx(path: Union[str, Path], magic: int) -> np.ndarray:
    """
    Parse a big-endian idx file

    Args:
        path: idx file (a .gz sibling is used when present)
        magic: Expected magic number

    Returns:
        uint8 array shaped by the header dimensions
    """
    path = Path(path)
    raw = _open_idx(path)
    n_dims = magic & 0xFF
    header_len = 4 * (1 + n_dims)
    if len(raw) < header_len:
        raise DatasetFormatError(f"{path}: file shorter than its idx header")
    header = np.frombuffer(raw, dtype=">u4", count=1 + n_dims)
    if int(header[0]) != magic:
        raise DatasetFormatError(f"{path}: bad magic 0x{int(header[0]):08x}, expected 0x{magic:08x}")
    dims = tuple(int(d) for d in header[1:])
    expected = int(np.prod(dims))
    payload = np.frombuffer(raw, dtype=np.uint8, offset=header_len)
    if payload.size != expected:
        raise DatasetFormatError(f"{path}: header promises {expected} bytes of data, found {payload.size}")
    return payload.reshape(dims)


def _mnist_pair(directory: Path, prefix: str, count: int):
    images = read_idx(directory / f"{prefix}-images-idx3-ubyte", IDX_IMAGES_MAGIC)
    labels = read_idx(directory / f"{prefix}-labels-idx1-ubyte", IDX_LABELS_MAGIC)
    if images.shape != (count, 28, 28):
        raise DatasetFormatError(f"{prefix} images have shape {images.shape}, expected ({count}, 28, 28)")
    if labels.shape != (count,):
        raise DatasetFormatError(f"{prefix} labels have shape {labels.shape}, expected ({count},)")
    if labels.max(initial=0) >= MNIST_CLASSES:
        raise DatasetFormatError(f"{prefix} labels contain a class outside 0..9")
    return images.reshape(count, MNIST_PIXELS), labels


def load_mnist(directory: Union[str, Path], n_train: int = MNIST_TRAIN,
               n_test: int = MNIST_TEST) -> Dataset:
    """
    Load MNIST from idx files

    Pixels map affinely from [0, 255] to [-1, 1]; targets are 10 bipolar
    outputs. The train/test split is the official one.

    Args:
        directory: Folder holding the four idx files
        n_train: Expected training image count
        n_test: Expected test image count

    Returns:
        Dataset with 784 inputs and 10 outputs
    """
    directory = Path(directory)
    train_images, train_labels = _mnist_pair(directory, "train", n_train)
    test_images, test_labels = _mnist_pair(directory, "t10k", n_test)
    pixels = np.concatenate([train_images, test_images]).astype(np.float32)
    features = pixels / np.float32(127.5) - np.float32(1.0)
    targets = encode_one_vs_rest(np.concatenate([train_labels, test_labels]), MNIST_CLASSES)
    logger.info(f"mnist: {n_train} train / {n_test} test images from {directory}")
    return Dataset("mnist", features, targets,
                   np.arange(n_train), np.arange(n_train, n_train + n_test))


class BenchmarkDataLoader:
    """Resolve dataset ids against a data directory"""

    def __init__(self, data_dir: Optional[Union[str, Path]] = None):
        self.data_dir = Path(data_dir or os.getenv("MTJ_DATA_DIR", "data/raw"))
        self.dataset_files = {
            "sonar": self.data_dir / "sonar.all-data",
            "wbcd": self.data_dir / "wdbc.data",
            "mnist": self.data_dir / "mnist",
        }

    def available(self) -> Dict[str, bool]:
        return {name: path.exists() for name, path in self.dataset_files.items()}

    def load(self, name: str, split_seed: int = DEFAULT_SPLIT_SEED, **kwargs) -> Dataset:
        """
        Load a dataset by id

        Args:
            name: sonar, wbcd, mnist or synthetic
            split_seed: Split seed (SONAR/WBCD)
            **kwargs: Passed to generate_synthetic_data for the synthetic id

        Returns:
            Dataset
        """
        if name == "sonar":
            return load_sonar(self.dataset_files["sonar"], split_seed)
        if name == "wbcd":
            return load_wbcd(self.dataset_files["wbcd"], split_seed)
        if name == "mnist":
            return load_mnist(self.dataset_files["mnist"])
        if name == "synthetic":
            return self.generate_synthetic_data(seed=split_seed, **kwargs)
        raise DatasetFormatError(f"unknown dataset '{name}'")

    @staticmethod
    def generate_synthetic_data(n_samples: int = 200, n_features: int = 8, test_size: int = 50,
                                seed: int = 0) -> Dataset:
        """
        Two Gaussian blobs, linearly separable in expectation, for smoke runs and tests

        Args:
            n_samples: Total samples
            n_features: Input width
            test_size: Test split size
            seed: Generation and split seed

        Returns:
            Dataset with a single bipolar target
        """
        rng = make_stream(seed, 0x5D)
        labels = np.where(np.arange(n_samples) % 2 == 0, "M", "R")
        centers = np.where(labels == "M", 1.0, -1.0)[:, None] * np.linspace(0.5, 1.5, n_features)[None, :]
        raw = centers + rng.normal(0.0, 0.8, size=(n_samples, n_features))
        targets = encode_bipolar(labels, SONAR_LABELS)
        return _build("synthetic", raw, targets, labels, test_size, seed)
