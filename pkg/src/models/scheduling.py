"""
Write-phase scheduling

Gradient descent moves W_ji by -eta x_i delta_j. With +b stored as P and -b as AP,
the sign of x_i delta_j fixes the reversal a cell may undergo:

    sign(x) sign(delta) > 0  ->  W decreases  ->  P -> AP   (drive with V_P > 0)
    sign(x) sign(delta) < 0  ->  W increases  ->  AP -> P   (drive with V_AP < 0)

Two-phase mode partitions columns by sign(delta). Four-phase mode also
partitions rows by sign(x) so every enabled row in a phase has the same
polarity, which bounds the sneak currents of a 1R array.
"""

from enum import IntEnum
from typing import List, Tuple
import logging

import numpy as np

from src.crossbar.crossbar import Architecture, PhaseSpec
from src.device.params import DeviceParams, SwitchDirection
from src.models.mapping import MappingCoefficients, map_error_to_pulse_width, write_voltage
from src.utils.exceptions import ContractViolation

logger = logging.getLogger(__name__)


class PhaseMode(IntEnum):
    TWO_PHASE = 2
    FOUR_PHASE = 4


# (sign of x, sign of delta, direction) per four-phase step
FOUR_PHASE_TABLE: Tuple[Tuple[int, int, SwitchDirection], ...] = (
    (+1, +1, SwitchDirection.P_TO_AP),
    (-1, +1, SwitchDirection.AP_TO_P),
    (+1, -1, SwitchDirection.AP_TO_P),
    (-1, -1, SwitchDirection.P_TO_AP),
)


def update_direction(x_sign: int, delta_sign: int) -> SwitchDirection:
    """Reversal that moves a weight along -x delta"""
    if x_sign == 0 or delta_sign == 0:
        raise ContractViolation("zero input or error gives no update direction")
    return SwitchDirection.P_TO_AP if x_sign * delta_sign > 0 else SwitchDirection.AP_TO_P


def check_supported(arch: Architecture, mode: PhaseMode):
    if PhaseMode(mode) is PhaseMode.FOUR_PHASE and Architecture(arch) is not Architecture.ONE_R:
        raise ContractViolation("four-phase writes are defined for 1R crossbars only")


def schedule_phases(x: np.ndarray, delta: np.ndarray, arch: Architecture, phase_mode: PhaseMode,
                    coeff: MappingCoefficients, params: DeviceParams) -> List[PhaseSpec]:
    """
    Build the ordered write phases for one weight update

    Rows with x_i = 0 and columns with delta_j = 0 stay disabled in every phase.
    Phases that end up enabling nothing are kept (they are no-op writes), so the
    list always has 2 or 4 entries.

    Args:
        x: Layer inputs in [-1, 1], length M
        delta: Normalized layer errors in [-1, 1], length N
        arch: Crossbar architecture
        phase_mode: Two- or four-phase schedule
        coeff: Mapping coefficients
        params: Device parameters (nominal resistances for the write voltages)

    Returns:
        List of PhaseSpec in execution order
    """
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta, dtype=float)
    phase_mode = PhaseMode(phase_mode)
    check_supported(arch, phase_mode)

    widths = np.asarray(map_error_to_pulse_width(delta, coeff))
    v_p = np.asarray(write_voltage(x, SwitchDirection.P_TO_AP, coeff, params))
    v_ap = np.asarray(write_voltage(x, SwitchDirection.AP_TO_P, coeff, params))
    x_sign = np.sign(x)
    d_sign = np.sign(delta)

    phases: List[PhaseSpec] = []
    if phase_mode is PhaseMode.TWO_PHASE:
        for phase_id, col_sign in ((1, +1), (2, -1)):
            cols = d_sign == col_sign
            rows = x_sign != 0
            # rows whose x has the column's sign are driven toward AP
            toward_ap = x_sign == col_sign
            phases.append(PhaseSpec(
                phase_id=phase_id,
                row_enabled=rows,
                col_enabled=cols,
                row_voltage=np.where(toward_ap, v_p, v_ap),
                col_pulse_width=widths,
                intended_direction=update_direction(+1, col_sign),
            ))
    else:
        for phase_id, (row_sign, col_sign, direction) in enumerate(FOUR_PHASE_TABLE, start=1):
            voltage = v_p if direction is SwitchDirection.P_TO_AP else v_ap
            phases.append(PhaseSpec(
                phase_id=phase_id,
                row_enabled=x_sign == row_sign,
                col_enabled=d_sign == col_sign,
                row_voltage=voltage,
                col_pulse_width=widths,
                intended_direction=direction,
            ))
    return phases
