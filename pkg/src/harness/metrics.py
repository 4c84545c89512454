"""
Metrics files and plots for experiment runs

    <out>/<run>/trace.csv      one row per epoch per replicate
    <out>/<run>/summary.json   schema-versioned summary with the config echo
"""

from pathlib import Path
from typing import Dict, List, Sequence, Union
import json
import logging

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TRACE_COLUMNS = ["replicate", "seed", "epoch", "train_mse", "test_error", "flips", "unintended_flips"]
FLOAT_FORMAT = "%.10g"


def emit_metrics(trace: pd.DataFrame, summary: Dict, out_dir: Union[str, Path],
                 formats: Sequence[str] = ("csv", "json")) -> List[Path]:
    """
    Write the per-epoch trace and the summary

    Args:
        trace: Rows with TRACE_COLUMNS (extra columns are dropped)
        summary: JSON-serializable summary; keys keep their insertion order
        out_dir: Run directory (created)
        formats: Any of "csv", "json"

    Returns:
        Paths written
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        path = out_dir / "trace.csv"
        trace.reindex(columns=TRACE_COLUMNS).to_csv(path, index=False, float_format=FLOAT_FORMAT)
        written.append(path)
    if "json" in formats:
        path = out_dir / "summary.json"
        with open(path, "w") as f:
            json.dump({"schema_version": SCHEMA_VERSION, **summary}, f, indent=2)
            f.write("\n")
        written.append(path)
    for path in written:
        logger.info(f"Wrote {path}")
    return written


def load_summary(path: Union[str, Path]) -> Dict:
    with open(path, "r") as f:
        doc = json.load(f)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported summary schema {doc.get('schema_version')}")
    return doc


def plot_curves(curves: pd.DataFrame, path: Union[str, Path], group: str = "label",
                x: str = "epoch", y: str = "train_mse", title: str = "Training MSE") -> Path:
    """
    Plot one line per group, e.g. 2-phase vs 4-phase or one per variation level

    Args:
        curves: Long table with group, x and y columns
        path: PNG file
        group: Column naming each curve
        x: Column for the horizontal axis
        y: Column for the vertical axis
        title: Figure title

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, frame in curves.groupby(group, sort=False):
        ax.plot(frame[x], frame[y], marker="o", markersize=3, label=str(label))
    ax.set_xlabel(x.replace("_", " "))
    ax.set_ylabel(y.replace("_", " "))
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if curves[group].nunique() > 0:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info(f"Saved plot to {path}")
    return path
