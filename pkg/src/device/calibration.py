"""
Device Calibration
Solves for (I_c0, delta, tau0) per direction so that the switching model meets
the boundary conditions of the linear write mapping:

    P(I0 + I1, t0)      = P0     (no update when |delta| = 0)
    P(I0,      t0 + t1) = P0     (no update when |x| = 0)
    P(I0 + I1, t0 + t1) = P_top  (top of the desired probability range)
"""

from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, Field, model_validator
from scipy.optimize import brentq

from src.device.params import DeviceParams, R_AP_NOMINAL, R_P_NOMINAL, SwitchDirection
from src.device.switching import _probability, switching_probability
from src.utils.exceptions import CalibrationError, ConfigError

logger = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-3
_A1_MAX = 1e4
_GRID_POINTS = 4000


class DirectionAnchors(BaseModel):
    """Mapping coefficients of one direction plus the probability targets"""
    t0: float = Field(1.5e-9, gt=0)
    t1: float = Field(1.0e-9, gt=0)
    i0: float = Field(..., gt=0)
    i1: float = Field(..., gt=0)
    p0: float = Field(0.05, gt=0, lt=1)
    p_top: float = Field(0.7, gt=0, lt=1)

    @model_validator(mode="after")
    def _ordered_targets(self) -> "DirectionAnchors":
        if not self.p_top > self.p0:
            raise ValueError("p_top must exceed p0")
        return self


class CalibrationAnchors(BaseModel):
    """Anchors for both switching directions (defaults: the standard write-mapping coefficients)"""
    ap2p: DirectionAnchors = DirectionAnchors(i0=60e-6, i1=30e-6)
    p2ap: DirectionAnchors = DirectionAnchors(i0=140e-6, i1=60e-6)

    def for_direction(self, direction: SwitchDirection) -> DirectionAnchors:
        return self.ap2p if direction is SwitchDirection.AP_TO_P else self.p2ap


def _log_f(a: np.ndarray) -> np.ndarray:
    return -2.0 / (a + 1.0) * np.log(2.0 * a / (a - 1.0))


def _anchor_equation(a1: float, anchors: DirectionAnchors) -> float:
    """Single scalar equation in a1 = (I0+I1)/I_c0 left after eliminating tau0 and delta"""
    k = anchors.i0 / (anchors.i0 + anchors.i1)
    r = np.log(np.log(anchors.p0) / np.log(anchors.p_top))
    t_total = anchors.t0 + anchors.t1
    return (_log_f(k * a1) - _log_f(a1)
            + r * t_total * (1.0 - k) * a1 / (anchors.t1 * (a1 - 1.0)) - r)


def _params_from_root(a1: float, anchors: DirectionAnchors) -> Tuple[float, float, float]:
    r = np.log(np.log(anchors.p0) / np.log(anchors.p_top))
    tau0 = 2.0 * anchors.t1 * (a1 - 1.0) / r
    t_total = anchors.t0 + anchors.t1
    f1 = np.exp(_log_f(a1))
    delta = -np.log(anchors.p_top) / (4.0 * f1 * np.exp(-2.0 * t_total * (a1 - 1.0) / tau0))
    ic0 = (anchors.i0 + anchors.i1) / a1
    return float(ic0), float(delta), float(tau0)


def _anchor_residuals(ic0: float, delta: float, tau0: float,
                      anchors: DirectionAnchors) -> np.ndarray:
    """Relative residuals of the three anchor equations"""
    points = [
        (anchors.i0 + anchors.i1, anchors.t0, anchors.p0),
        (anchors.i0, anchors.t0 + anchors.t1, anchors.p0),
        (anchors.i0 + anchors.i1, anchors.t0 + anchors.t1, anchors.p_top),
    ]
    out = []
    for current, width, target in points:
        a = current / ic0
        prob = float(_probability(np.asarray(a), np.asarray(width), delta, tau0)) if a > 1 else 0.0
        out.append((prob - target) / target)
    return np.array(out)


def _monotone_in_current(ic0: float, delta: float, tau0: float, anchors: DirectionAnchors,
                         n: int = 101) -> bool:
    currents = np.linspace(anchors.i0, anchors.i0 + anchors.i1, n)
    widths = np.linspace(anchors.t0, anchors.t0 + anchors.t1, 11)
    a = currents[:, None] / ic0
    if np.any(a <= 1.0):
        return False
    prob = _probability(a, widths[None, :], delta, tau0)
    return bool(np.all(np.diff(prob, axis=0) >= -1e-12))


def calibrate_direction(anchors: DirectionAnchors) -> Tuple[float, float, float]:
    """
    Calibrate one switching direction

    Args:
        anchors: Coefficients and probability targets

    Returns:
        (ic0, delta, tau0)

    Raises:
        CalibrationError: if no root satisfies the anchors and the monotonicity check
    """
    k = anchors.i0 / (anchors.i0 + anchors.i1)
    a_low = (1.0 / k) * (1.0 + 1e-9)
    grid = np.geomspace(a_low, _A1_MAX, _GRID_POINTS)
    values = np.array([_anchor_equation(a, anchors) for a in grid])

    roots: List[float] = []
    for lo, hi, v_lo, v_hi in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if np.isfinite(v_lo) and np.isfinite(v_hi) and v_lo * v_hi < 0:
            roots.append(brentq(_anchor_equation, lo, hi, args=(anchors,), xtol=1e-14, rtol=1e-14))

    accepted = []
    best_residuals: Optional[np.ndarray] = None
    for a1 in roots:
        ic0, delta, tau0 = _params_from_root(a1, anchors)
        residuals = _anchor_residuals(ic0, delta, tau0, anchors)
        if best_residuals is None or np.max(np.abs(residuals)) < np.max(np.abs(best_residuals)):
            best_residuals = residuals
        if ic0 >= anchors.i0 or np.max(np.abs(residuals)) > RESIDUAL_TOLERANCE:
            continue
        if not _monotone_in_current(ic0, delta, tau0, anchors):
            logger.info(f"Rejected calibration root a1={a1:.4f}: not monotone in current")
            continue
        accepted.append((a1, ic0, delta, tau0))

    if not accepted:
        raise CalibrationError(
            f"no calibration root for anchors {anchors.model_dump()} ({len(roots)} candidate roots)",
            residuals=best_residuals,
        )

    a1, ic0, delta, tau0 = max(accepted, key=lambda item: item[0])
    return ic0, delta, tau0


def calibrate_device(anchors: Optional[CalibrationAnchors] = None,
                     r_p: float = R_P_NOMINAL, r_ap: float = R_AP_NOMINAL,
                     variation_sigma: float = 0.0) -> DeviceParams:
    """
    Calibrate both directions and assemble DeviceParams

    Args:
        anchors: Calibration targets; defaults to the standard coefficients, P0 = 0.05, P_top = 0.7
        r_p: Nominal P-state resistance
        r_ap: Nominal AP-state resistance
        variation_sigma: Fabrication variation carried into the result

    Returns:
        Calibrated DeviceParams
    """
    anchors = anchors or CalibrationAnchors()
    ic0: Dict[SwitchDirection, float] = {}
    delta: Dict[SwitchDirection, float] = {}
    tau0: Dict[SwitchDirection, float] = {}

    for direction in SwitchDirection:
        d_anchors = anchors.for_direction(direction)
        ic0[direction], delta[direction], tau0[direction] = calibrate_direction(d_anchors)
        residuals = _anchor_residuals(ic0[direction], delta[direction], tau0[direction], d_anchors)
        logger.info(
            f"Calibrated {direction.value}: I_c0={ic0[direction] * 1e6:.3f} uA, "
            f"delta={delta[direction]:.3f}, tau0={tau0[direction] * 1e9:.4f} ns, "
            f"max |residual|={np.max(np.abs(residuals)):.2e}"
        )

    try:
        return DeviceParams(ic0=ic0, delta=delta, tau0=tau0, r_p=r_p, r_ap=r_ap,
                            variation_sigma=variation_sigma)
    except ValueError as e:
        raise CalibrationError(f"calibrated parameters violate device invariants: {e}")


@lru_cache(maxsize=8)
def default_device_params(variation_sigma: float = 0.0) -> DeviceParams:
    """Calibrated parameters for the default anchors (cached per variation level)"""
    return calibrate_device(variation_sigma=variation_sigma)


def fit_report(params: DeviceParams, anchors: Optional[CalibrationAnchors] = None,
               eta: Optional[float] = None, x_levels: Sequence[float] = (0.0, 0.5, 1.0),
               n_delta: int = 11) -> pd.DataFrame:
    """
    Desired (eta*|x|*|delta|) versus actual switching probability of the linear map

    Args:
        params: Calibrated parameters
        anchors: Mapping coefficients; defaults to CalibrationAnchors()
        eta: Desired-probability slope; defaults to each direction's p_top
        x_levels: |x| values to evaluate
        n_delta: Number of |delta| grid points in [0, 1]

    Returns:
        DataFrame with one row per (direction, |x|, |delta|)
    """
    anchors = anchors or CalibrationAnchors()
    rows = []
    for direction in SwitchDirection:
        a = anchors.for_direction(direction)
        slope = a.p_top if eta is None else eta
        for x in x_levels:
            for d in np.linspace(0.0, 1.0, n_delta):
                current = a.i0 + a.i1 * x
                width = a.t0 + a.t1 * d
                actual = switching_probability(current, width, direction, params)
                desired = slope * x * d
                rows.append({
                    "direction": direction.value, "abs_x": x, "abs_delta": d,
                    "i_wr": current, "t_wr": width,
                    "desired": desired, "actual": actual,
                    "abs_error": abs(actual - desired),
                })
    return pd.DataFrame(rows)


def load_device_config(path: Union[str, Path]) -> Tuple[CalibrationAnchors, Dict[str, float]]:
    """
    Read calibration anchors and nominal resistances from a device YAML file

    Args:
        path: File with resistance, mapping and calibration sections

    Returns:
        (anchors, {"r_p", "r_ap", "variation_sigma"})
    """
    with open(path, "r") as f:
        doc = yaml.safe_load(f) or {}
    mapping = doc.get("mapping", {})
    targets = doc.get("calibration", {})
    defaults = CalibrationAnchors()

    def direction_anchors(key: str, fallback: DirectionAnchors) -> DirectionAnchors:
        fields = fallback.model_dump()
        for name in ("t0", "t1"):
            if name in mapping:
                fields[name] = float(mapping[name])
        for name in ("i0", "i1"):
            if key in mapping.get(name, {}):
                fields[name] = float(mapping[name][key])
        for name in ("p0", "p_top"):
            if name in targets:
                fields[name] = float(targets[name])
        return DirectionAnchors(**fields)

    try:
        anchors = CalibrationAnchors(ap2p=direction_anchors("ap2p", defaults.ap2p),
                                     p2ap=direction_anchors("p2ap", defaults.p2ap))
    except ValueError as e:
        raise ConfigError(f"{path}: {e}")
    resistance = doc.get("resistance", {})
    device = {
        "r_p": float(resistance.get("r_p", R_P_NOMINAL)),
        "r_ap": float(resistance.get("r_ap", R_AP_NOMINAL)),
        "variation_sigma": float(resistance.get("variation_sigma", 0.0)),
    }
    return anchors, device


def calibrate_from_config(path: Union[str, Path]) -> DeviceParams:
    """Calibrate with the anchors and resistances of a device YAML file"""
    anchors, device = load_device_config(path)
    logger.info(f"Calibrating from {path}")
    return calibrate_device(anchors, **device)
