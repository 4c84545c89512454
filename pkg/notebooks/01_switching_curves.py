
import logging
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

from src.device.calibration import calibrate_from_config, fit_report, load_device_config
from src.device.params import SwitchDirection
from src.device.switching import switching_probability

logging.basicConfig(level=logging.INFO)

out_dir = Path("results/plots")
out_dir.mkdir(parents=True, exist_ok=True)

anchors, _ = load_device_config("configs/device.yaml")
params = calibrate_from_config("configs/device.yaml")

# Desired (eta |x| |delta|) vs actual switching probability of the linear map
report = fit_report(params, anchors, x_levels=(0.0, 0.25, 0.5, 0.75, 1.0), n_delta=21)
print(report.groupby("direction")["abs_error"].max())

fig, axes = plt.subplots(1, 2, figsize=(12, 4.5), sharey=True)
for ax, direction in zip(axes, SwitchDirection):
    rows = report[report["direction"] == direction.value]
    sns.lineplot(data=rows, x="abs_delta", y="actual", hue="abs_x", marker="o", ax=ax, palette="viridis")
    sns.lineplot(data=rows, x="abs_delta", y="desired", hue="abs_x", linestyle="--", ax=ax,
                 palette="viridis", legend=False)
    ax.set_title(f"{direction.value}: actual (solid) vs desired (dashed)")
    ax.set_xlabel("|delta|")
    ax.set_ylabel("switching probability")
fig.tight_layout()
fig.savefig(out_dir / "linear_map_fit.png", dpi=120)

# Probability vs pulse width at the mapped currents
widths = np.linspace(0.0, 5e-9, 200)
curves = []
for direction in SwitchDirection:
    a = anchors.for_direction(direction)
    for x in (0.0, 0.5, 1.0):
        current = a.i0 + a.i1 * x
        curves.append(pd.DataFrame({
            "direction": direction.value,
            "current_uA": round(current * 1e6, 1),
            "t_ns": widths * 1e9,
            "probability": switching_probability(current, widths, direction, params),
        }))
curves = pd.concat(curves, ignore_index=True)

plt.figure(figsize=(8, 5))
sns.lineplot(data=curves, x="t_ns", y="probability", hue="current_uA", style="direction")
plt.title("Switching probability vs pulse width")
plt.savefig(out_dir / "switching_vs_width.png", dpi=120)
print(f"Plots saved to {out_dir}")
