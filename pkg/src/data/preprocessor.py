"""
Data Preprocessor for Classification Datasets
Scales features into the write-mapping range [-1, 1], encodes labels as bipolar
targets and builds deterministic stratified splits
"""

from typing import Dict, Optional, Sequence, Tuple
import logging

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split
from sklearn.preprocessing import MinMaxScaler

from src.utils.exceptions import ContractViolation, DatasetFormatError

logger = logging.getLogger(__name__)

FEATURE_RANGE = (-1.0, 1.0)


class DatasetPreprocessor:
    """Normalize features with training-split statistics only"""

    def __init__(self):
        self.scaler: Optional[MinMaxScaler] = None

    def fit(self, train_features: np.ndarray) -> "DatasetPreprocessor":
        """
        Learn per-dimension minimum and maximum from the training split

        Args:
            train_features: Training samples x dims

        Returns:
            self
        """
        self.scaler = MinMaxScaler(feature_range=FEATURE_RANGE)
        self.scaler.fit(np.asarray(train_features, dtype=float))
        return self

    def transform(self, features: np.ndarray) -> np.ndarray:
        """
        Scale features into [-1, 1]

        Values outside the training range are clipped so |x| <= 1 always holds.

        Args:
            features: Samples x dims

        Returns:
            Scaled copy
        """
        if self.scaler is None:
            raise ContractViolation("DatasetPreprocessor.transform called before fit")
        scaled = self.scaler.transform(np.asarray(features, dtype=float))
        outside = int(np.sum(np.abs(scaled) > 1.0))
        if outside:
            logger.warning(f"Clipped {outside} feature values outside the training range")
        return np.clip(scaled, *FEATURE_RANGE)

    def fit_transform_split(self, features: np.ndarray, train_idx: np.ndarray) -> np.ndarray:
        """Fit on the training rows, then scale every row"""
        self.fit(features[train_idx])
        return self.transform(features)


def stratified_split(labels: Sequence, test_size: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Deterministic stratified train/test split

    Args:
        labels: Class label per sample
        test_size: Number of test samples
        seed: Split seed

    Returns:
        (train indices, test indices), both sorted
    """
    labels = np.asarray(labels)
    indices = np.arange(labels.size)
    train_idx, test_idx = train_test_split(
        indices, test_size=test_size, stratify=labels, random_state=int(seed) % (2 ** 32)
    )
    return np.sort(train_idx), np.sort(test_idx)


def encode_bipolar(labels: Sequence, mapping: Dict[str, int]) -> np.ndarray:
    """
    Single-output bipolar targets from string labels

    Args:
        labels: Label per sample
        mapping: Label -> -1 or +1

    Returns:
        Targets, shape (samples, 1)
    """
    labels = pd.Series(labels).astype(str).str.strip()
    unknown = sorted(set(labels) - set(mapping))
    if unknown:
        raise DatasetFormatError(f"unexpected labels {unknown}; expected {sorted(mapping)}")
    return labels.map(mapping).to_numpy(dtype=float).reshape(-1, 1)


def encode_one_vs_rest(labels: Sequence[int], n_classes: int) -> np.ndarray:
    """+1 at the class index, -1 elsewhere"""
    labels = np.asarray(labels, dtype=int)
    targets = -np.ones((labels.size, n_classes))
    targets[np.arange(labels.size), labels] = 1.0
    return targets


def _as_sample_matrix(values: np.ndarray) -> np.ndarray:
    # a flat vector holds one single-output sample per entry
    values = np.atleast_1d(np.asarray(values, dtype=float))
    return values.reshape(-1, 1) if values.ndim == 1 else values


def classification_error(outputs: np.ndarray, targets: np.ndarray) -> float:
    """
    Classification error in percent

    Single-output tasks compare signs, multi-output tasks compare argmax.

    Args:
        outputs: Network outputs, samples x outputs
        targets: Bipolar targets, same shape

    Returns:
        Error rate in percent
    """
    outputs = _as_sample_matrix(outputs)
    targets = _as_sample_matrix(targets)
    if outputs.shape != targets.shape:
        raise ContractViolation(f"outputs {outputs.shape} and targets {targets.shape} differ in shape")
    if outputs.shape[0] == 0:
        return 0.0
    if outputs.shape[1] == 1:
        wrong = np.where(outputs[:, 0] >= 0, 1.0, -1.0) != np.sign(targets[:, 0])
    else:
        wrong = np.argmax(outputs, axis=1) != np.argmax(targets, axis=1)
    return float(100.0 * np.mean(wrong))
