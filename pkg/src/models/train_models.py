"""
Training loops
In-situ stochastic training on crossbars plus the two software references:
real-valued gradient descent and offline stochastic training of binary weights.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Union
import logging

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field
from tqdm import tqdm

from src.crossbar.crossbar import Architecture
from src.crossbar.writes import write_phase
from src.data.data_loader import BenchmarkDataLoader, Dataset
from src.device.calibration import default_device_params
from src.models.mapping import MappingCoefficients
from src.models.network import (
    Network,
    error_norm,
    evaluate,
    init_crossbar_network,
    init_dense_network,
    rv_scales,
)
from src.models.scheduling import PhaseMode, check_supported, schedule_phases
from src.utils.exceptions import ContractViolation
from src.utils.random_streams import make_stream

logger = logging.getLogger(__name__)


class ReferenceMode(str, Enum):
    REAL_VALUED = "real_valued"
    OFFLINE_STOCHASTIC = "offline_stochastic"


class TrainConfig(BaseModel):
    """Learning-rule settings shared by all training loops"""
    eta: float = Field(0.7, ge=0.0, le=1.0, description="learning rate of the stochastic rule")
    epochs: int = Field(30, ge=0)
    p0: float = Field(0.05, gt=0, lt=1, description="switching probability floor of the write map")
    p_top: float = Field(0.7, gt=0, lt=1, description="switching probability at full drive")
    phase_mode: PhaseMode = PhaseMode.TWO_PHASE
    error_norm: str = Field("max_abs", pattern="^(max_abs|clip)$")
    coeff: MappingCoefficients = Field(default_factory=MappingCoefficients)
    rv_learning_rate: float = Field(0.01, gt=0, description="step size of real-valued training")
    progress: bool = False


@dataclass
class EpochRecord:
    epoch: int
    train_mse: float
    test_error: float
    flips: int = 0
    unintended_flips: int = 0


@dataclass
class TrainingTrace:
    """Per-epoch metrics of one training run"""
    records: List[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def to_frame(self) -> pd.DataFrame:
        columns = ["epoch", "train_mse", "test_error", "flips", "unintended_flips"]
        return pd.DataFrame([vars(r) for r in self.records], columns=columns)

    @property
    def final(self) -> Optional[EpochRecord]:
        return self.records[-1] if self.records else None


@dataclass
class ReferenceResult:
    network: Network
    trace: TrainingTrace

    @property
    def weights(self) -> List[np.ndarray]:
        return self.network.dense_weights()


def _epoch_order(dataset: Dataset, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(dataset.train_idx)


def train_insitu(net: Network, dataset: Dataset, config: TrainConfig,
                 rng: np.random.Generator) -> TrainingTrace:
    """
    Online in-situ training: forward, backward, schedule and write every layer per sample

    Args:
        net: Network whose layers are crossbars
        dataset: Normalized dataset
        config: Learning-rule settings
        rng: Stream for the sample order (each layer writes from its own stream)

    Returns:
        TrainingTrace with one record per epoch
    """
    if not net.on_crossbars:
        raise ContractViolation("train_insitu needs a network of crossbar layers")
    for layer in net.layers:
        check_supported(layer.xbar.arch, config.phase_mode)

    trace = TrainingTrace()
    features, targets = dataset.features, dataset.targets
    for epoch in tqdm(range(1, config.epochs + 1), desc="in-situ", disable=not config.progress):
        sq_error = 0.0
        flips = unintended = 0
        order = _epoch_order(dataset, rng)
        for idx in order:
            fwd = net.forward(features[idx])
            sq_error += float(np.mean((fwd.output - targets[idx]) ** 2))
            deltas = net.backward(fwd, targets[idx])
            # every layer's update uses errors computed before any write
            for layer, x_in, raw in zip(net.layers, fwd.inputs, deltas):
                delta = error_norm(raw, config.eta, config.p_top, config.error_norm)
                phases = schedule_phases(x_in, delta, layer.xbar.arch, config.phase_mode,
                                         config.coeff, layer.xbar.params)
                for phase in phases:
                    events = write_phase(layer.xbar, phase, layer.rng)
                    flips += events.n_flips
                    unintended += events.n_unintended

        _, test_error = evaluate(net, dataset.test_x, dataset.test_y)
        record = EpochRecord(epoch, sq_error / max(1, order.size), test_error, flips, unintended)
        trace.records.append(record)
        logger.info(f"epoch {epoch}: train_mse={record.train_mse:.4f} test_error={test_error:.2f}% "
                    f"flips={flips} unintended={unintended}")
    return trace


def _train_real_valued(net: Network, dataset: Dataset, config: TrainConfig,
                       rng: np.random.Generator) -> TrainingTrace:
    trace = TrainingTrace()
    features, targets = dataset.features, dataset.targets
    for epoch in tqdm(range(1, config.epochs + 1), desc="real-valued", disable=not config.progress):
        sq_error = 0.0
        order = _epoch_order(dataset, rng)
        for idx in order:
            fwd = net.forward(features[idx])
            sq_error += float(np.mean((fwd.output - targets[idx]) ** 2))
            deltas = net.backward(fwd, targets[idx])
            for layer, x_in, delta in zip(net.layers, fwd.inputs, deltas):
                layer.weights -= config.rv_learning_rate * np.outer(delta, x_in)
        _, test_error = evaluate(net, dataset.test_x, dataset.test_y)
        trace.records.append(EpochRecord(epoch, sq_error / max(1, order.size), test_error))
        logger.info(f"epoch {epoch}: train_mse={trace.records[-1].train_mse:.4f} "
                    f"test_error={test_error:.2f}%")
    return trace


def train_reference(shape: Sequence[int], dataset: Dataset, config: TrainConfig, mode: ReferenceMode,
                    rng: np.random.Generator,
                    scale_b: Union[float, Sequence[float], None] = None) -> ReferenceResult:
    """
    Software reference training

    REAL_VALUED runs dense gradient descent. OFFLINE_STOCHASTIC runs the in-situ
    rule on ideal devices with no circuit effects (an ideal 1T1R array), so the
    result holds only +/-b weights ready for deterministic programming.

    Args:
        shape: Layer widths, inputs first
        dataset: Normalized dataset
        config: Learning-rule settings
        mode: Which reference to train
        rng: Run stream
        scale_b: Binary weight magnitude(s) for OFFLINE_STOCHASTIC; None means 1/sqrt(fan_in)

    Returns:
        ReferenceResult with the trained network and its trace
    """
    mode = ReferenceMode(mode)
    if mode is ReferenceMode.REAL_VALUED:
        net = init_dense_network(shape, rng)
        trace = _train_real_valued(net, dataset, config, rng)
        logger.info(f"Real-valued reference {tuple(shape)}: binarization scales {rv_scales(net)}")
        return ReferenceResult(net, trace)

    ideal = default_device_params(0.0)
    seed = int(rng.integers(0, 2 ** 63))
    net = init_crossbar_network(shape, Architecture.ONE_T_ONE_R, ideal, scale_b, seed)
    offline = config.model_copy(update={"phase_mode": PhaseMode.TWO_PHASE})
    trace = train_insitu(net, dataset, offline, rng)
    return ReferenceResult(net, trace)


def main():
    """Example usage: in-situ training on synthetic data"""
    logging.basicConfig(level=logging.INFO)
    dataset = BenchmarkDataLoader().generate_synthetic_data(n_samples=200, n_features=8)
    config = TrainConfig(epochs=5, progress=True)
    params = default_device_params(0.0)

    rv = train_reference((dataset.n_inputs, 1), dataset, config, ReferenceMode.REAL_VALUED,
                         make_stream(0))
    print(f"Real-valued test error: {rv.trace.final.test_error:.2f}%")

    net = init_crossbar_network((dataset.n_inputs, 1), Architecture.ONE_T_ONE_R, params,
                                rv_scales(rv.network), seed=0)
    trace = train_insitu(net, dataset, config, make_stream(1))
    print(trace.to_frame())


if __name__ == "__main__":
    main()
