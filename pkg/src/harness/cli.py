"""CLI entry point for the MTJ crossbar training simulator."""

from pathlib import Path
from typing import Optional
import json
import logging
import sys

import click
from dotenv import load_dotenv

from src.harness.schemas import ExperimentConfig, Scenario, SweepAxis, build_config
from src.utils.exceptions import ConfigError

logger = logging.getLogger(__name__)

SCENARIOS = [s.value for s in Scenario]
DATASETS = ["sonar", "wbcd", "mnist", "synthetic"]
DEVICE_CONFIG = "configs/device.yaml"


def _experiment_options(func):
    options = [
        click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
                     help="YAML experiment file; command-line options override it"),
        click.option("--scenario", type=click.Choice(SCENARIOS), help="Scenario code name"),
        click.option("--dataset", type=click.Choice(DATASETS), help="Dataset id"),
        click.option("--arch", "shape", help="Network shape preset (1L, 2L15, 2L100, 3L, ...)"),
        click.option("--phases", type=click.Choice(["2", "4"]), help="Write phases per update (1R)"),
        click.option("--variation", type=float, help="Resistance variation (0, 0.02, 0.05, 0.1, 0.2)"),
        click.option("--seed", type=int, help="Base seed (u64)"),
        click.option("--epochs", type=int, help="Training epochs (default: dataset preset)"),
        click.option("--eta", type=float, help="Learning rate (default: dataset preset)"),
        click.option("--replicates", type=int, help="Seeded replicates to average"),
        click.option("--train-subset", type=int, help="Use only the first N training samples"),
        click.option("--scale-source", type=click.Choice(["rv", "fan_in"]),
                     help="Binary weight magnitude from an RV run or 1/sqrt(fan_in)"),
        click.option("--jobs", "n_jobs", type=int, help="Parallel replicate workers"),
        click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Results directory"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _config_from_options(config_file: Optional[str], **options):
    fields = {k: v for k, v in options.items() if v is not None}
    if "phases" in fields:
        fields["phase_mode"] = int(fields.pop("phases"))
    if config_file:
        return ExperimentConfig.from_yaml(config_file, **fields)
    missing = [name for name in ("scenario", "dataset", "shape") if name not in fields]
    if missing:
        raise ConfigError(f"missing required option(s): {', '.join('--' + m for m in missing)}")
    return build_config(**fields)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging")
def main(verbose: bool):
    """In-situ stochastic training of binary networks on MTJ crossbars."""
    load_dotenv()
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


@main.command()
@_experiment_options
def train(config_file, **options):
    """Run one scenario and write trace.csv and summary.json."""
    from src.harness.experiment import run_experiment

    config = _config_from_options(config_file, **options)
    summary = run_experiment(config)
    click.echo(json.dumps({"run": config.run_name, "aggregate": summary.aggregate,
                           "files": [str(p) for p in summary.paths]}, indent=2))


@main.command()
@click.option("--axis", type=click.Choice([a.value for a in SweepAxis]), required=True,
              help="Swept quantity")
@click.option("--values", help="Comma-separated axis values (default: 0.02,0.05,0.1,0.2 or 2,4)")
@_experiment_options
def sweep(axis, values, config_file, **options):
    """Run one experiment per axis value with shared seeds."""
    from src.harness.experiment import sweep as run_sweep

    axis = SweepAxis(axis)
    if values is None:
        parsed = [0.02, 0.05, 0.10, 0.20] if axis is SweepAxis.VARIATION else [2, 4]
    elif values.strip() == "":
        parsed = []
    else:
        try:
            parsed = [float(v) if axis is SweepAxis.VARIATION else int(v) for v in values.split(",")]
        except ValueError:
            raise ConfigError(f"cannot parse --values '{values}'")
    template = _config_from_options(config_file, **options)
    table, _ = run_sweep(template, axis, parsed)
    click.echo(table.to_string(index=False) if len(table) else "empty sweep")


@main.command()
@click.option("--direction", type=click.Choice(["ap2p", "p2ap"]), help="Report one direction only")
@click.option("--eta", type=float, help="Slope of the desired probability (default: p_top)")
@click.option("--save", type=click.Path(dir_okay=False), help="Write calibrated parameters as YAML")
@click.option("--device-config", type=click.Path(exists=True, dir_okay=False),
              help="Device YAML with mapping coefficients and targets (default: configs/device.yaml)")
def calibrate(direction, eta, save, device_config):
    """Calibrate the switching model and report the linear-map fit."""
    from src.device.calibration import calibrate_device, calibrate_from_config, fit_report, load_device_config
    from src.device.params import SwitchDirection

    if device_config is None and Path(DEVICE_CONFIG).exists():
        device_config = DEVICE_CONFIG
    if device_config:
        anchors, _ = load_device_config(device_config)
        params = calibrate_from_config(device_config)
    else:
        anchors, params = None, calibrate_device()
    report = fit_report(params, anchors, eta=eta)
    directions = [SwitchDirection(direction)] if direction else list(SwitchDirection)
    out = {}
    for d in directions:
        rows = report[report["direction"] == d.value]
        out[d.value] = {
            "ic0_A": params.ic0[d],
            "delta": params.delta[d],
            "tau0_s": params.tau0[d],
            "max_abs_fit_error": float(rows["abs_error"].max()),
        }
    click.echo(json.dumps(out, indent=2))
    if save:
        params.to_yaml(Path(save))


def _fail(error: Exception, code: int):
    click.echo(json.dumps({"error": type(error).__name__, "message": str(error)}), err=True)
    sys.exit(code)


def run(argv=None):
    """Console entry: JSON errors on stderr, exit 2 for usage errors, 1 otherwise"""
    try:
        main.main(args=argv, standalone_mode=False)
    except (click.UsageError, ConfigError) as e:
        _fail(e, 2)
    except click.Abort:
        _fail(RuntimeError("aborted"), 1)
    except Exception as e:
        logger.debug("command failed", exc_info=True)
        _fail(e, 1)


if __name__ == "__main__":
    run()
