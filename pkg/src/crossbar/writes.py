"""
Write operations on MTJ crossbars

1T1R phases address cells through their access transistors, so only enabled
columns see current. 1R phases drive the whole resistive network: every cell,
selected or not, sees the current the nodal solve gives it. In both cases
states are committed only after the phase completes.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional
import logging

import numpy as np

from src.crossbar.crossbar import Architecture, Crossbar, PhaseSpec
from src.crossbar.network_solver import solve_1r_network
from src.device.calibration import CalibrationAnchors
from src.device.params import DeviceParams, SwitchDirection
from src.device.switching import _probability, attempt_switch, polarity_probability, pulse_width_for_probability
from src.utils.exceptions import ContractViolation

logger = logging.getLogger(__name__)

DETERMINISTIC_TARGET = 0.9999
MAX_VERIFY_RETRIES = 5


@dataclass
class SwitchEvents:
    """Outcome of one write phase"""
    flipped: np.ndarray
    probability: np.ndarray
    selected: np.ndarray
    max_unselected_current: float = 0.0

    @property
    def n_flips(self) -> int:
        return int(self.flipped.sum())

    @property
    def n_unintended(self) -> int:
        """Flips in cells outside the enabled rows x enabled columns block"""
        return int((self.flipped & ~self.selected).sum())


@dataclass
class ProgrammingReport:
    """Outcome of deterministic programming"""
    corrupted_cells: int
    retries_exhausted: int = 0
    pulses: int = 0
    mismatched: np.ndarray = field(default=None, repr=False)


def _selected_block(xbar: Crossbar, phase: PhaseSpec) -> np.ndarray:
    return phase.col_enabled[:, None] & phase.row_enabled[None, :]


def _commit(xbar: Crossbar, u: np.ndarray, prob: np.ndarray, drives_to_ap: np.ndarray,
            driven: np.ndarray) -> np.ndarray:
    # a polarity only acts on cells sitting in its source state
    eligible = driven & np.where(drives_to_ap, ~xbar.is_ap, xbar.is_ap)
    flipped = eligible & (u < prob)
    xbar.is_ap ^= flipped
    return flipped


def write_1t1r_phase(xbar: Crossbar, phase: PhaseSpec, rng: np.random.Generator) -> SwitchEvents:
    """
    Apply one phase to a 1T1R crossbar

    Cell (j, i) in an enabled column carries V_wr,i / R(cell) for t_wr,j. Cells in
    disabled columns carry no current.

    Args:
        xbar: 1T1R crossbar
        phase: Phase from the 2-phase schedule
        rng: Crossbar stream; one uniform is drawn per cell

    Returns:
        SwitchEvents for the phase
    """
    if xbar.arch is not Architecture.ONE_T_ONE_R:
        raise ContractViolation("write_1t1r_phase needs a 1T1R crossbar")
    phase.check_dimensions(xbar)
    u = rng.random(xbar.shape)
    selected = _selected_block(xbar, phase)

    current = np.where(phase.col_enabled[:, None], phase.row_voltage[None, :] / xbar.resistance(), 0.0)
    prob, to_ap = polarity_probability(current, phase.col_pulse_width[:, None], xbar.params)
    flipped = _commit(xbar, u, prob, to_ap, current != 0.0)
    return SwitchEvents(flipped=flipped, probability=prob, selected=selected)


def _segment_probability(current: np.ndarray, duration: float, carried: np.ndarray,
                         carried_to_ap: np.ndarray, params: DeviceParams):
    """
    Conditional switching probability of one segment

    Exposure carried over from earlier segments of the same polarity is turned
    into an equivalent elapsed time at the present current, so a cell whose
    current does not change gets exactly the single-pulse probability.

    Returns:
        (p_segment, drives_to_ap, progress after the segment)
    """
    to_ap = current > 0
    ic0 = np.where(to_ap, params.ic0[SwitchDirection.P_TO_AP], params.ic0[SwitchDirection.AP_TO_P])
    delta = np.where(to_ap, params.delta[SwitchDirection.P_TO_AP], params.delta[SwitchDirection.AP_TO_P])
    tau0 = np.where(to_ap, params.tau0[SwitchDirection.P_TO_AP], params.tau0[SwitchDirection.AP_TO_P])
    a = np.abs(current) / ic0
    active = a > 1.0

    same_polarity = active & (to_ap == carried_to_ap)
    progress_in = np.where(same_polarity, carried, 0.0)

    p_seg = np.zeros(current.shape)
    progress_out = np.zeros(current.shape)
    if np.any(active):
        a_act = a[active]
        t_before = progress_in[active] * tau0[active] / (a_act - 1.0)
        exposed = progress_in[active] > 0.0
        p_start = np.where(exposed, _probability(a_act, t_before, delta[active], tau0[active]), 0.0)
        p_end = _probability(a_act, t_before + duration, delta[active], tau0[active])
        survive = 1.0 - p_start
        p_seg[active] = np.where(survive > 0.0, 1.0 - (1.0 - p_end) / np.where(survive > 0.0, survive, 1.0), 1.0)
        progress_out[active] = progress_in[active] + duration * (a_act - 1.0) / tau0[active]
    return np.clip(p_seg, 0.0, 1.0), to_ap, progress_out


def write_1r_phase(xbar: Crossbar, phase: PhaseSpec, rng: np.random.Generator) -> SwitchEvents:
    """
    Apply one phase to a 1R crossbar, sneak paths included

    The phase is cut at the distinct enabled-column pulse widths; a column
    floats once its pulse has expired. Each segment is solved on the frozen
    states, per-segment probabilities combine as 1 - prod(1 - P_seg), and one
    Bernoulli draw per cell decides the flip at the end of the phase.

    Args:
        xbar: 1R crossbar
        phase: Phase from the 2- or 4-phase schedule
        rng: Crossbar stream; one uniform is drawn per cell

    Returns:
        SwitchEvents for the phase
    """
    if xbar.arch is not Architecture.ONE_R:
        raise ContractViolation("write_1r_phase needs a 1R crossbar")
    phase.check_dimensions(xbar)
    u = rng.random(xbar.shape)
    selected = _selected_block(xbar, phase)
    zeros = np.zeros(xbar.shape)

    if phase.is_noop:
        return SwitchEvents(flipped=np.zeros(xbar.shape, dtype=bool), probability=zeros, selected=selected)

    widths = np.unique(phase.col_pulse_width[phase.col_enabled])
    widths = widths[widths > 0]
    survive = {True: np.ones(xbar.shape), False: np.ones(xbar.shape)}
    carried = np.zeros(xbar.shape)
    carried_to_ap = np.zeros(xbar.shape, dtype=bool)
    max_sneak = 0.0

    start = 0.0
    for end in widths:
        active_cols = phase.col_enabled & (phase.col_pulse_width >= end)
        segment = PhaseSpec(phase.phase_id, phase.row_enabled, active_cols, phase.row_voltage,
                            np.where(active_cols, phase.col_pulse_width, 0.0), phase.intended_direction)
        solution = solve_1r_network(xbar, segment)
        current = solution.device_currents
        if np.any(~selected):
            max_sneak = max(max_sneak, float(np.max(np.abs(current[~selected]))))

        p_seg, to_ap, carried = _segment_probability(current, end - start, carried, carried_to_ap,
                                                     xbar.params)
        carried_to_ap = to_ap
        driven = current != 0.0
        survive[True] *= np.where(driven & to_ap, 1.0 - p_seg, 1.0)
        survive[False] *= np.where(driven & ~to_ap, 1.0 - p_seg, 1.0)
        logger.debug(f"Phase {phase.phase_id} segment [{start:.3e}, {end:.3e}] s, "
                     f"{int(active_cols.sum())} active columns")
        start = end

    # only the polarity leading out of the present state can act
    p_total = np.where(xbar.is_ap, 1.0 - survive[False], 1.0 - survive[True])
    flipped = (u < p_total) & (p_total > 0.0)
    xbar.is_ap ^= flipped
    return SwitchEvents(flipped=flipped, probability=p_total, selected=selected,
                        max_unselected_current=max_sneak)


def write_phase(xbar: Crossbar, phase: PhaseSpec, rng: np.random.Generator) -> SwitchEvents:
    """Apply a phase with the write model of the crossbar's architecture"""
    if xbar.arch is Architecture.ONE_R:
        return write_1r_phase(xbar, phase, rng)
    return write_1t1r_phase(xbar, phase, rng)


def deterministic_pulse_width(params: DeviceParams, direction: SwitchDirection, current: float,
                              target: float = DETERMINISTIC_TARGET) -> float:
    """Pulse width at which a write of the given current switches with probability target"""
    return pulse_width_for_probability(current, direction, params, target)


def _column_direction(column_targets: np.ndarray) -> Optional[SwitchDirection]:
    if np.all(column_targets):
        return SwitchDirection.P_TO_AP
    if not np.any(column_targets):
        return SwitchDirection.AP_TO_P
    return None


def _deterministic_drive(params: DeviceParams, anchors: CalibrationAnchors,
                         target: float) -> Dict[SwitchDirection, tuple]:
    """(voltage, pulse width) per direction for the strongest mapped drive"""
    drive = {}
    for direction in SwitchDirection:
        a = anchors.for_direction(direction)
        current = a.i0 + a.i1
        width = deterministic_pulse_width(params, direction, current, target)
        if direction is SwitchDirection.P_TO_AP:
            drive[direction] = (current * params.r_p, width)
        else:
            drive[direction] = (-current * params.r_ap, width)
    return drive


def program_deterministic(xbar: Crossbar, target_is_ap: np.ndarray, rng: np.random.Generator,
                          anchors: Optional[CalibrationAnchors] = None,
                          target_probability: float = DETERMINISTIC_TARGET,
                          max_retries: int = MAX_VERIFY_RETRIES) -> ProgrammingReport:
    """
    Program target states with long, strong pulses

    1T1R: cell by cell with verify-and-retry. 1R: column by column through the
    resistive network, with no verify path, so neighbours may be disturbed.

    Args:
        xbar: Crossbar to program
        target_is_ap: Target states, shape (cols, rows), True for AP
        rng: Crossbar stream
        anchors: Mapping coefficients giving the strongest drive (defaults when omitted)
        target_probability: Per-pulse switching probability of the programming pulse
        max_retries: Verify retries per cell (1T1R only)

    Returns:
        ProgrammingReport with the number of cells left in the wrong state
    """
    target = np.asarray(target_is_ap, dtype=bool)
    if target.shape != xbar.shape:
        raise ContractViolation(f"target shape {target.shape} does not match crossbar {xbar.shape}")
    anchors = anchors or CalibrationAnchors()
    drive = _deterministic_drive(xbar.params, anchors, target_probability)
    report = ProgrammingReport(corrupted_cells=0)

    if xbar.arch is Architecture.ONE_T_ONE_R:
        for j, i in zip(*np.nonzero(xbar.is_ap != target)):
            direction = SwitchDirection.P_TO_AP if target[j, i] else SwitchDirection.AP_TO_P
            voltage, width = drive[direction]
            cell = xbar.cell(j, i)
            for _ in range(1 + max_retries):
                cell = attempt_switch(cell, voltage / cell.resistance, width, xbar.params, rng)
                report.pulses += 1
                if cell.state is direction.target_state:
                    break
            xbar.set_cell(j, i, cell)
            if cell.state is not direction.target_state:
                report.retries_exhausted += 1
        if report.retries_exhausted:
            logger.warning(f"{report.retries_exhausted} cells still wrong after {max_retries} retries")
    else:
        v_p, t_p = drive[SwitchDirection.P_TO_AP]
        v_ap, t_ap = drive[SwitchDirection.AP_TO_P]
        width = max(t_p, t_ap)
        for j in range(xbar.cols):
            col_enabled = np.zeros(xbar.cols, dtype=bool)
            col_enabled[j] = True
            phase = PhaseSpec(
                phase_id=j + 1,
                row_enabled=np.ones(xbar.rows, dtype=bool),
                col_enabled=col_enabled,
                row_voltage=np.where(target[j], v_p, v_ap),
                col_pulse_width=np.where(col_enabled, width, 0.0),
                intended_direction=_column_direction(target[j]),
            )
            write_1r_phase(xbar, phase, rng)
            report.pulses += 1

    report.mismatched = xbar.is_ap != target
    report.corrupted_cells = int(report.mismatched.sum())
    logger.info(f"Deterministic programming ({xbar.arch.value}): "
                f"{report.corrupted_cells}/{target.size} cells corrupted")
    return report
