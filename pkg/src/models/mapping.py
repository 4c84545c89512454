"""
Linear write mapping
Error magnitude sets the pulse width, input magnitude sets the write current:

    t_wr = t0 + t1 |delta|
    I_wr = I0 + I1 |x|
"""

from typing import Dict, Union
import logging

import numpy as np
from pydantic import BaseModel, Field, model_validator

from src.device.calibration import CalibrationAnchors, DirectionAnchors
from src.device.params import DeviceParams, SwitchDirection
from src.utils.exceptions import ContractViolation

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class MappingCoefficients(BaseModel):
    """Coefficients of the linear (x, delta) -> (I_wr, t_wr) map"""
    t0: float = Field(1.5e-9, gt=0, description="pulse width at |delta| = 0 (s)")
    t1: float = Field(1.0e-9, gt=0, description="pulse width slope (s)")
    i0: Dict[SwitchDirection, float] = Field(
        default_factory=lambda: {SwitchDirection.AP_TO_P: 60e-6, SwitchDirection.P_TO_AP: 140e-6})
    i1: Dict[SwitchDirection, float] = Field(
        default_factory=lambda: {SwitchDirection.AP_TO_P: 30e-6, SwitchDirection.P_TO_AP: 60e-6})

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _positive_per_direction(self) -> "MappingCoefficients":
        for name in ("i0", "i1"):
            values = getattr(self, name)
            if set(values) != set(SwitchDirection) or any(v <= 0 for v in values.values()):
                raise ValueError(f"{name} needs a positive value for each direction")
        return self

    def to_anchors(self, p0: float = 0.05, p_top: float = 0.7) -> CalibrationAnchors:
        """Calibration targets matching these coefficients"""
        def anchors(direction: SwitchDirection) -> DirectionAnchors:
            return DirectionAnchors(t0=self.t0, t1=self.t1, i0=self.i0[direction],
                                    i1=self.i1[direction], p0=p0, p_top=p_top)
        return CalibrationAnchors(ap2p=anchors(SwitchDirection.AP_TO_P),
                                  p2ap=anchors(SwitchDirection.P_TO_AP))


def _check_unit_range(values: np.ndarray, name: str):
    if np.any(np.abs(values) > 1.0):
        raise ContractViolation(f"|{name}| must not exceed 1, got max {np.max(np.abs(values)):.6g}")


def _same_kind(value: np.ndarray, original) -> ArrayLike:
    return float(value) if np.ndim(original) == 0 else value


def map_error_to_pulse_width(delta: ArrayLike, coeff: MappingCoefficients) -> ArrayLike:
    """
    Pulse width for an output error

    Args:
        delta: Normalized error(s) in [-1, 1]
        coeff: Mapping coefficients

    Returns:
        t0 + t1 |delta| in seconds
    """
    d = np.asarray(delta, dtype=float)
    _check_unit_range(d, "delta")
    return _same_kind(coeff.t0 + coeff.t1 * np.abs(d), delta)


def map_input_to_current(x: ArrayLike, direction: SwitchDirection, coeff: MappingCoefficients) -> ArrayLike:
    """
    Write current for an input

    Args:
        x: Input(s) in [-1, 1]
        direction: Switching direction selecting (I0, I1)
        coeff: Mapping coefficients

    Returns:
        I0 + I1 |x| in amperes
    """
    x_arr = np.asarray(x, dtype=float)
    _check_unit_range(x_arr, "x")
    return _same_kind(coeff.i0[direction] + coeff.i1[direction] * np.abs(x_arr), x)


def write_voltage(x: ArrayLike, direction: SwitchDirection, coeff: MappingCoefficients,
                  params: DeviceParams) -> ArrayLike:
    """
    Signed row voltage driving the mapped current through a nominal device

    V_P(x) = +I_wr(x, P->AP) R_P drives P->AP; V_AP(x) = -I_wr(x, AP->P) R_AP
    drives AP->P.

    Args:
        x: Input(s) in [-1, 1]
        direction: Intended switching direction
        coeff: Mapping coefficients
        params: Device parameters (nominal resistances)

    Returns:
        Signed voltage(s) in volts
    """
    current = np.asarray(map_input_to_current(x, direction, coeff))
    if direction is SwitchDirection.P_TO_AP:
        value = current * params.r_p
    else:
        value = -current * params.r_ap
    return _same_kind(value, x)
