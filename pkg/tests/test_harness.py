
import json
from pathlib import Path

import pandas as pd
import pytest

from src.crossbar.crossbar import Crossbar
from src.harness import experiment
from src.harness.cli import run
from src.harness.experiment import aggregate_replicates, run_experiment, sweep
from src.harness.metrics import SCHEMA_VERSION, TRACE_COLUMNS, emit_metrics, load_summary
from src.harness.presets import resolve_shape
from src.harness.schemas import ExperimentConfig, Scenario, SweepAxis, build_config
from src.models.scheduling import PhaseMode
from src.models.train_models import ReferenceMode
from src.utils.exceptions import ConfigError

REPO_ROOT = Path(__file__).resolve().parents[1]


def _config(tmp_path, **fields):
    base = {"scenario": "st-1t1r", "dataset": "synthetic", "shape": "1L", "epochs": 2,
            "replicates": 1, "seed": 11, "out_dir": str(tmp_path)}
    return build_config(**{**base, **fields})


@pytest.mark.parametrize("fields", [
    {"scenario": "st-1t1r", "phase_mode": 4},
    {"scenario": "dp-1r", "phase_mode": 4},
    {"shape": "2L15"},
    {"shape": "4L"},
    {"dataset": "iris"},
    {"variation": 0.03},
    {"scenario": "rv", "variation": 0.1},
    {"eta": 1.5},
    {"replicates": 0},
])
def test_invalid_configs(tmp_path, fields):
    with pytest.raises(ConfigError):
        _config(tmp_path, **fields)


def test_config_defaults(tmp_path):
    config = _config(tmp_path, scenario="dp-1t1r", epochs=None)
    assert config.effective_variation == 0.10
    assert config.effective_epochs == 10
    assert config.effective_eta == 0.7
    assert config.scenario.arch.value == "1t1r"
    assert Scenario.RV.arch is None
    assert config.run_name == "synthetic_dp-1t1r_1L_p2_v0.10_s11"
    assert config.echo()["resolved"]["variation"] == 0.10


def test_bundled_experiment_files_validate():
    for path in sorted((REPO_ROOT / "configs" / "experiments").glob("*.yaml")):
        config = ExperimentConfig.from_yaml(path)
        assert config.seed == 2017
    four_phase = ExperimentConfig.from_yaml(REPO_ROOT / "configs" / "experiments" / "sonar_st1r_2l15.yaml",
                                            replicates=2)
    assert four_phase.phase_mode is PhaseMode.FOUR_PHASE
    assert four_phase.replicates == 2


def test_resolve_shape():
    assert resolve_shape("1L", 60, 1) == (60, 1)
    assert resolve_shape("3L", 784, 10) == (784, 50, 25, 10)
    with pytest.raises(ConfigError):
        resolve_shape("2L7", 60, 1)


def test_aggregate_replicates():
    aggregate = aggregate_replicates([
        {"final_train_mse": 1.0, "final_test_error": 10.0},
        {"final_train_mse": 2.0, "final_test_error": 20.0},
    ])
    assert aggregate["final_test_error"]["mean"] == 15.0
    assert aggregate["final_test_error"]["std"] == pytest.approx(7.0710678, rel=1e-6)
    assert aggregate["final_train_mse"]["n"] == 2
    assert "corrupted_cells" not in aggregate


def test_emit_metrics_roundtrip(tmp_path):
    trace = pd.DataFrame([{"replicate": 0, "seed": 5, "epoch": 1, "train_mse": 0.25,
                           "test_error": 12.5, "flips": 3, "unintended_flips": 0}])
    summary = {"run": "demo", "aggregate": {"final_test_error": {"mean": 12.5, "std": 0.0, "n": 1}}}
    paths = emit_metrics(trace, summary, tmp_path / "demo")
    assert [p.name for p in paths] == ["trace.csv", "summary.json"]
    assert (tmp_path / "demo" / "trace.csv").read_text().splitlines()[0] == ",".join(TRACE_COLUMNS)
    assert load_summary(tmp_path / "demo" / "summary.json") == {"schema_version": SCHEMA_VERSION, **summary}


def test_load_summary_rejects_other_schema(tmp_path):
    path = tmp_path / "summary.json"
    path.write_text(json.dumps({"schema_version": 99}))
    with pytest.raises(ValueError):
        load_summary(path)


def test_rv_never_builds_a_crossbar(tmp_path, synthetic, monkeypatch):
    def refuse(*args, **kwargs):
        raise AssertionError("the real-valued baseline built a crossbar")

    monkeypatch.setattr(Crossbar, "__init__", refuse)
    summary = run_experiment(_config(tmp_path, scenario="rv"), dataset=synthetic, write=False)
    assert summary.aggregate["final_test_error"]["n"] == 1


def test_insitu_never_uses_offline_reference(tmp_path, synthetic, monkeypatch):
    original = experiment.train_reference

    def reference(shape, dataset, config, mode, rng, scale_b=None):
        assert ReferenceMode(mode) is ReferenceMode.REAL_VALUED
        return original(shape, dataset, config, mode, rng, scale_b=scale_b)

    monkeypatch.setattr(experiment, "train_reference", reference)
    summary = run_experiment(_config(tmp_path, scenario="st-1r", phase_mode=4), dataset=synthetic,
                             write=False)
    assert len(summary.trace()) == 2


def test_run_experiment_is_reproducible(tmp_path, synthetic):
    config = _config(tmp_path, replicates=2)
    run_experiment(config, dataset=synthetic)
    run_dir = tmp_path / config.run_name
    first = {name: (run_dir / name).read_bytes() for name in ("trace.csv", "summary.json")}
    run_experiment(config, dataset=synthetic)
    second = {name: (run_dir / name).read_bytes() for name in ("trace.csv", "summary.json")}
    assert first == second

    trace = pd.read_csv(run_dir / "trace.csv")
    assert list(trace.columns) == TRACE_COLUMNS
    assert sorted(trace["replicate"].unique()) == [0, 1]
    summary = load_summary(run_dir / "summary.json")
    assert summary["config"]["scenario"] == "st-1t1r"
    assert len(summary["replicates"]) == 2


def test_deterministic_programming_scenario(tmp_path, synthetic):
    summary = run_experiment(_config(tmp_path, scenario="dp-1r"), dataset=synthetic, write=False)
    assert "corrupted_cells" in summary.aggregate
    assert summary.replicates[0].corrupted_cells >= 0
    assert 0.0 <= summary.mean_test_error <= 100.0


def test_empty_sweep(tmp_path):
    table, curves = sweep(_config(tmp_path), SweepAxis.VARIATION, [])
    assert table.empty and curves.empty
    assert not any(tmp_path.iterdir())


def test_sweep_rejects_unknown_variation(tmp_path):
    with pytest.raises(ConfigError):
        sweep(_config(tmp_path), SweepAxis.VARIATION, [0.03])


def test_phase_sweep(tmp_path, synthetic):
    table, curves = sweep(_config(tmp_path, scenario="st-1r"), SweepAxis.PHASES, [2, 4], dataset=synthetic)
    assert list(table["phases"]) == [2, 4]
    assert set(curves["label"]) == {"2-phase", "4-phase"}
    sweep_dirs = list(tmp_path.glob("sweep_phases_*"))
    assert len(sweep_dirs) == 1
    for name in ("sweep.csv", "curves.csv", "curves.png"):
        assert (sweep_dirs[0] / name).exists()


def test_cli_calibrate(capsys):
    run(["calibrate", "--direction", "ap2p"])
    out = json.loads(capsys.readouterr().out)
    assert list(out) == ["ap2p"]
    assert out["ap2p"]["ic0_A"] < 60e-6
    assert out["ap2p"]["max_abs_fit_error"] <= 0.15


def test_cli_train(tmp_path, capsys):
    run(["train", "--scenario", "rv", "--dataset", "synthetic", "--arch", "1L", "--epochs", "2",
         "--out", str(tmp_path)])
    out = json.loads(capsys.readouterr().out)
    assert out["run"] == "synthetic_rv_1L_p2_v0.00_s0"
    assert all(Path(p).exists() for p in out["files"])


@pytest.mark.parametrize("argv", [
    ["train", "--scenario", "st-1t1r", "--dataset", "synthetic", "--arch", "2L15"],
    ["train", "--scenario", "bogus", "--dataset", "synthetic", "--arch", "1L"],
    ["train", "--dataset", "synthetic"],
    ["sweep", "--axis", "variation", "--values", "a,b", "--scenario", "st-1r", "--dataset", "synthetic",
     "--arch", "1L"],
])
def test_cli_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as excinfo:
        run(argv)
    assert excinfo.value.code == 2
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert "error" in error and "message" in error


def test_cli_empty_sweep(tmp_path, capsys):
    run(["sweep", "--axis", "phases", "--values", "", "--scenario", "st-1r", "--dataset", "synthetic",
         "--arch", "1L", "--out", str(tmp_path)])
    assert "empty sweep" in capsys.readouterr().out
