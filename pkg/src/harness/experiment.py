"""
Experiment orchestration: scenarios, replicates and sweeps

RV  - real-valued software baseline
DP  - offline stochastic training on ideal devices, then deterministic programming
ST  - in-situ stochastic training on the crossbar
DV  - ST with device variation
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.crossbar.crossbar import Crossbar
from src.crossbar.writes import program_deterministic
from src.data.data_loader import BenchmarkDataLoader, Dataset
from src.device.calibration import default_device_params
from src.harness.metrics import emit_metrics, plot_curves
from src.harness.presets import dataset_preset, resolve_shape
from src.harness.schemas import ExperimentConfig, ScaleSource, Scenario, SweepAxis, VARIATION_LEVELS
from src.models.network import CrossbarLayer, Network, evaluate, init_crossbar_network, rv_scales
from src.models.scheduling import PhaseMode
from src.models.train_models import ReferenceMode, TrainConfig, train_insitu, train_reference
from src.utils.exceptions import ConfigError
from src.utils.random_streams import make_stream, replicate_seeds

logger = logging.getLogger(__name__)

SUMMARY_METRICS = ("final_train_mse", "final_test_error", "corrupted_cells")


@dataclass
class ReplicateResult:
    replicate: int
    seed: int
    trace: pd.DataFrame
    final_train_mse: float
    final_test_error: float
    corrupted_cells: Optional[int] = None

    def record(self) -> Dict:
        out = {
            "replicate": self.replicate,
            "seed": self.seed,
            "final_train_mse": self.final_train_mse,
            "final_test_error": self.final_test_error,
        }
        if self.corrupted_cells is not None:
            out["corrupted_cells"] = self.corrupted_cells
        return out


@dataclass
class ExperimentSummary:
    config: ExperimentConfig
    replicates: List[ReplicateResult]
    aggregate: Dict[str, Dict[str, float]]
    paths: List[Path] = field(default_factory=list)

    @property
    def mean_test_error(self) -> float:
        return self.aggregate["final_test_error"]["mean"]

    def trace(self) -> pd.DataFrame:
        frames = [r.trace for r in self.replicates]
        return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()

    def to_dict(self) -> Dict:
        return {
            "run": self.config.run_name,
            "config": self.config.echo(),
            "aggregate": self.aggregate,
            "replicates": [r.record() for r in self.replicates],
        }


def train_config_for(config: ExperimentConfig) -> TrainConfig:
    preset = dataset_preset(config.dataset)
    return TrainConfig(eta=config.effective_eta, epochs=config.effective_epochs,
                       phase_mode=config.phase_mode, rv_learning_rate=preset.rv_learning_rate)


def load_dataset(config: ExperimentConfig, loader: Optional[BenchmarkDataLoader] = None) -> Dataset:
    loader = loader or BenchmarkDataLoader()
    dataset = loader.load(config.dataset, split_seed=config.split_seed)
    return dataset.with_train_subset(config.train_subset)


def _binary_scales(config: ExperimentConfig, shape: Tuple[int, ...], dataset: Dataset,
                   train_cfg: TrainConfig, seed: int) -> Optional[List[float]]:
    if config.scale_source is ScaleSource.FAN_IN:
        return None
    rv = train_reference(shape, dataset, train_cfg, ReferenceMode.REAL_VALUED, make_stream(seed, 2))
    return rv_scales(rv.network)


def _final(trace: pd.DataFrame, column: str) -> float:
    return float(trace[column].iloc[-1]) if len(trace) else float("nan")


def _with_ids(trace: pd.DataFrame, replicate: int, seed: int) -> pd.DataFrame:
    trace = trace.copy()
    trace.insert(0, "seed", seed)
    trace.insert(0, "replicate", replicate)
    return trace


def _program_offline_weights(offline: Network, config: ExperimentConfig, seed: int) -> Tuple[Network, int]:
    params = default_device_params(config.effective_variation)
    layers, corrupted = [], 0
    for k, source in enumerate(offline.layers):
        rng = make_stream(seed, 4, k)
        xbar = Crossbar.fabricate(source.xbar.rows, source.xbar.cols, params, config.scenario.arch, rng)
        report = program_deterministic(xbar, source.xbar.is_ap, rng)
        corrupted += report.corrupted_cells
        layers.append(CrossbarLayer(xbar=xbar, scale_b=source.scale_b, rng=rng))
    return Network(layers), corrupted


def run_replicate(config: ExperimentConfig, dataset: Dataset, replicate: int, seed: int) -> ReplicateResult:
    """
    Run one seeded replicate of a scenario

    Args:
        config: Experiment configuration
        dataset: Loaded dataset
        replicate: Replicate index
        seed: Replicate seed

    Returns:
        ReplicateResult with the per-epoch trace
    """
    shape = resolve_shape(config.shape, dataset.n_inputs, dataset.n_outputs)
    train_cfg = train_config_for(config)
    scenario = config.scenario
    corrupted = None

    if scenario is Scenario.RV:
        result = train_reference(shape, dataset, train_cfg, ReferenceMode.REAL_VALUED, make_stream(seed, 2))
        trace = result.trace.to_frame()
        test_error = _final(trace, "test_error")
    elif scenario.is_insitu:
        scales = _binary_scales(config, shape, dataset, train_cfg, seed)
        params = default_device_params(config.effective_variation)
        net = init_crossbar_network(shape, scenario.arch, params, scales, seed)
        trace = train_insitu(net, dataset, train_cfg, make_stream(seed, 3)).to_frame()
        test_error = _final(trace, "test_error")
    else:
        scales = _binary_scales(config, shape, dataset, train_cfg, seed)
        offline = train_reference(shape, dataset, train_cfg, ReferenceMode.OFFLINE_STOCHASTIC,
                                  make_stream(seed, 3), scale_b=scales)
        trace = offline.trace.to_frame()
        programmed, corrupted = _program_offline_weights(offline.network, config, seed)
        _, test_error = evaluate(programmed, dataset.test_x, dataset.test_y)
        logger.info(f"{scenario.value}: offline test error {_final(trace, 'test_error'):.2f}%, "
                    f"after programming {test_error:.2f}% ({corrupted} corrupted cells)")

    return ReplicateResult(replicate=replicate, seed=seed, trace=_with_ids(trace, replicate, seed),
                           final_train_mse=_final(trace, "train_mse"), final_test_error=test_error,
                           corrupted_cells=corrupted)


def aggregate_replicates(records: Sequence[Dict]) -> Dict[str, Dict[str, float]]:
    """
    Mean and standard deviation of every summary metric across replicates

    Args:
        records: One dict per replicate

    Returns:
        {metric: {"mean": ..., "std": ..., "n": ...}}
    """
    frame = pd.DataFrame(list(records))
    out = {}
    for metric in SUMMARY_METRICS:
        if metric not in frame:
            continue
        values = frame[metric].dropna().astype(float)
        out[metric] = {
            "mean": float(values.mean()) if len(values) else float("nan"),
            "std": float(values.std(ddof=1)) if len(values) > 1 else 0.0,
            "n": int(len(values)),
        }
    return out


def run_experiment(config: ExperimentConfig, dataset: Optional[Dataset] = None,
                   write: bool = True) -> ExperimentSummary:
    """
    Execute a scenario end to end, averaged over seeded replicates

    Args:
        config: Experiment configuration
        dataset: Pre-loaded dataset; loaded from MTJ_DATA_DIR when omitted
        write: Emit trace.csv and summary.json under out_dir/run_name

    Returns:
        ExperimentSummary
    """
    if dataset is None:
        dataset = load_dataset(config)
    if dataset_preset(config.dataset).long and config.train_subset is None:
        logger.warning(f"{config.dataset} runs on the full training set take hours; "
                       f"use train_subset for a quick run")
    seeds = replicate_seeds(config.seed, config.replicates)
    logger.info(f"Starting {config.run_name}: {config.replicates} replicate(s), n_jobs={config.n_jobs}")

    results = Parallel(n_jobs=config.n_jobs)(
        delayed(run_replicate)(config, dataset, k, s) for k, s in enumerate(seeds)
    )
    summary = ExperimentSummary(config=config, replicates=list(results),
                                aggregate=aggregate_replicates([r.record() for r in results]))
    if write:
        run_dir = Path(config.out_dir) / config.run_name
        summary.paths = emit_metrics(summary.trace(), summary.to_dict(), run_dir)
    logger.info(f"Finished {config.run_name}: test error "
                f"{summary.mean_test_error:.2f}% +/- {summary.aggregate['final_test_error']['std']:.2f}")
    return summary


def _sweep_configs(template: ExperimentConfig, axis: SweepAxis, values: Sequence) -> List[ExperimentConfig]:
    configs = []
    for value in values:
        if axis is SweepAxis.VARIATION:
            if not any(abs(float(value) - v) < 1e-12 for v in VARIATION_LEVELS):
                raise ConfigError(f"variation {value} is not one of {VARIATION_LEVELS}")
            update = {"variation": float(value)}
        else:
            update = {"phase_mode": PhaseMode(int(value))}
        fields = {**template.model_dump(), **update, "name": None}
        try:
            configs.append(ExperimentConfig(**fields))
        except ValueError as e:
            raise ConfigError(str(e))
    return configs


def sweep(template: ExperimentConfig, axis: SweepAxis, values: Sequence,
          dataset: Optional[Dataset] = None, write: bool = True) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Run one experiment per axis value with shared seeds

    Args:
        template: Base configuration
        axis: variation or phases
        values: Axis values (variation fractions or 2/4)
        dataset: Pre-loaded dataset
        write: Emit per-run files plus sweep.csv, curves.csv and curves.png

    Returns:
        (comparison table, per-epoch mean MSE curves)
    """
    axis = SweepAxis(axis)
    configs = _sweep_configs(template, axis, values)
    table_cols = [axis.value, "run", "mean_test_error", "std_test_error", "mean_train_mse"]
    if not configs:
        return pd.DataFrame(columns=table_cols), pd.DataFrame(columns=["label", "epoch", "train_mse"])
    if dataset is None:
        dataset = load_dataset(template)

    rows, curves = [], []
    for value, config in zip(values, configs):
        summary = run_experiment(config, dataset=dataset, write=write)
        rows.append({
            axis.value: value,
            "run": config.run_name,
            "mean_test_error": summary.mean_test_error,
            "std_test_error": summary.aggregate["final_test_error"]["std"],
            "mean_train_mse": summary.aggregate["final_train_mse"]["mean"],
        })
        trace = summary.trace()
        if len(trace):
            curve = trace.groupby("epoch", as_index=False)["train_mse"].mean()
            label = f"{int(value)}-phase" if axis is SweepAxis.PHASES else f"{float(value):.0%} variation"
            curve.insert(0, "label", label)
            curves.append(curve)

    table = pd.DataFrame(rows, columns=table_cols)
    curve_frame = pd.concat(curves, ignore_index=True) if curves else pd.DataFrame(
        columns=["label", "epoch", "train_mse"])
    if write:
        sweep_dir = Path(template.out_dir) / f"sweep_{axis.value}_{template.dataset}_{template.shape}_s{template.seed}"
        sweep_dir.mkdir(parents=True, exist_ok=True)
        table.to_csv(sweep_dir / "sweep.csv", index=False, float_format="%.10g")
        curve_frame.to_csv(sweep_dir / "curves.csv", index=False, float_format="%.10g")
        if len(curve_frame):
            plot_curves(curve_frame, sweep_dir / "curves.png",
                        title=f"{template.dataset} {template.shape}: training MSE by {axis.value}")
        logger.info(f"Sweep results in {sweep_dir}")
    return table, curve_frame
