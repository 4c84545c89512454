
import numpy as np
import pytest

from src.crossbar import writes
from src.crossbar.crossbar import Architecture, Crossbar, PhaseSpec
from src.crossbar.writes import (
    deterministic_pulse_width,
    program_deterministic,
    write_1r_phase,
    write_1t1r_phase,
    write_phase,
)
from src.device.params import SwitchDirection
from src.device.switching import switching_probability
from src.models.mapping import MappingCoefficients, write_voltage
from src.models.scheduling import PhaseMode, schedule_phases
from src.utils.exceptions import ContractViolation
from src.utils.random_streams import make_stream

P2AP = SwitchDirection.P_TO_AP
AP2P = SwitchDirection.AP_TO_P
COEFF = MappingCoefficients()


def _phase(rows, cols, voltages, widths, direction=P2AP):
    return PhaseSpec(1, rows, cols, voltages, widths, direction)


def test_1t1r_disabled_columns_never_switch(params):
    rng = make_stream(0)
    for trial in range(200):
        xbar = Crossbar.fabricate(6, 5, params, Architecture.ONE_T_ONE_R, make_stream(trial, 1))
        before = xbar.is_ap.copy()
        cols = rng.random(5) < 0.5
        phase = _phase(np.ones(6, dtype=bool), cols, rng.uniform(-1, 1, 6), np.full(5, 2.5e-9))
        events = write_1t1r_phase(xbar, phase, rng)
        assert np.array_equal(xbar.is_ap[~cols], before[~cols])
        assert not np.any(events.flipped[~cols])
        assert events.n_unintended == 0


def test_1t1r_full_drive_probability(params):
    xbar = Crossbar(1, 1, params, Architecture.ONE_T_ONE_R)
    v_p = write_voltage(1.0, P2AP, COEFF, params)
    events = write_1t1r_phase(xbar, _phase([True], [True], [v_p], [2.5e-9]), make_stream(1))
    assert events.probability[0, 0] == pytest.approx(0.7, abs=0.02)

    xbar = Crossbar(1, 1, params, Architecture.ONE_T_ONE_R)
    events = write_1t1r_phase(xbar, _phase([True], [True], [v_p], [1.5e-9]), make_stream(1))
    assert events.probability[0, 0] == pytest.approx(0.05, abs=0.005)


def test_1t1r_wrong_polarity_is_inert(params):
    # cells already in AP cannot be moved further by a P->AP drive
    xbar = Crossbar(3, 2, params, Architecture.ONE_T_ONE_R, is_ap=np.ones((2, 3), dtype=bool))
    v_p = write_voltage(1.0, P2AP, COEFF, params)
    for seed in range(50):
        write_1t1r_phase(xbar, _phase([True] * 3, [True] * 2, [v_p] * 3, [5e-9] * 2), make_stream(seed))
        assert xbar.is_ap.all()


def test_write_draws_one_uniform_per_cell(params):
    for arch in Architecture:
        xbar = Crossbar(3, 2, params, arch)
        rng, reference = make_stream(4), make_stream(4)
        write_phase(xbar, _phase([False] * 3, [False] * 2, [0.0] * 3, [0.0] * 2), rng)
        reference.random((2, 3))
        assert rng.random() == reference.random()


def test_1r_disabled_rows_give_no_flips(params):
    xbar = Crossbar.fabricate(4, 4, params, Architecture.ONE_R, make_stream(2))
    before = xbar.is_ap.copy()
    events = write_1r_phase(xbar, _phase([False] * 4, [True] * 4, [0.9] * 4, [2.5e-9] * 4), make_stream(3))
    assert events.n_flips == 0
    assert np.array_equal(xbar.is_ap, before)


def test_1r_single_cell_matches_single_pulse(params):
    xbar = Crossbar(1, 1, params, Architecture.ONE_R)
    v_p = write_voltage(1.0, P2AP, COEFF, params)
    events = write_1r_phase(xbar, _phase([True], [True], [v_p], [2.5e-9]), make_stream(5))
    expected = switching_probability(v_p / params.r_p, 2.5e-9, P2AP, params)
    assert events.probability[0, 0] == pytest.approx(expected, rel=1e-12)


def test_1r_segments_keep_constant_current_exact(params):
    # both columns grounded while active; a floating column carries no current
    xbar = Crossbar(1, 2, params, Architecture.ONE_R)
    v_p = write_voltage(0.5, P2AP, COEFF, params)
    events = write_1r_phase(xbar, _phase([True], [True, True], [v_p], [2.5e-9, 1.7e-9]), make_stream(6))
    current = v_p / params.r_p
    assert events.probability[0, 0] == pytest.approx(
        switching_probability(current, 2.5e-9, P2AP, params), rel=1e-9)
    assert events.probability[1, 0] == pytest.approx(
        switching_probability(current, 1.7e-9, P2AP, params), rel=1e-9)


def test_1r_equal_widths_is_one_segment(params):
    xbar = Crossbar.fabricate(5, 4, params.with_variation(0.05), Architecture.ONE_R, make_stream(7))
    twin = xbar.copy()
    rows = np.array([True, True, False, True, True])
    cols = np.array([True, False, True, True])
    volts = np.full(5, write_voltage(0.8, P2AP, COEFF, params))
    events = write_1r_phase(xbar, _phase(rows, cols, volts, np.full(4, 2.2e-9)), make_stream(8))
    again = write_1r_phase(twin, _phase(rows, cols, volts, np.where(cols, 2.2e-9, 0.0)), make_stream(8))
    assert np.array_equal(events.probability, again.probability)


def test_1r_two_phase_sneak_can_switch(params):
    xbar = Crossbar(2, 2, params, Architecture.ONE_R)
    x = np.array([1.0, -1.0])
    delta = np.array([1.0, 0.0])
    phases = schedule_phases(x, delta, Architecture.ONE_R, PhaseMode.TWO_PHASE, COEFF, params)
    events = write_1r_phase(xbar, phases[0], make_stream(9))
    # rows at V_P and V_AP drive the floating column's cells
    assert events.probability[1, 0] > 0
    assert not events.selected[1, 0]
    assert events.max_unselected_current > params.ic0[P2AP]


def test_1r_four_phase_two_by_two_has_no_false_switching(params):
    x = np.array([1.0, -1.0])
    delta = np.array([1.0, -1.0])
    phases = schedule_phases(x, delta, Architecture.ONE_R, PhaseMode.FOUR_PHASE, COEFF, params)
    assert len(phases) == 4
    for phase in phases:
        xbar = Crossbar(2, 2, params, Architecture.ONE_R)
        events = write_1r_phase(xbar, phase, make_stream(phase.phase_id))
        assert np.all(events.probability[~events.selected] == 0.0)
        assert events.max_unselected_current < params.ic0[P2AP]


def test_write_architecture_mismatch(params):
    phase = _phase([True], [True], [0.5], [1e-9])
    with pytest.raises(ContractViolation):
        write_1r_phase(Crossbar(1, 1, params, Architecture.ONE_T_ONE_R), phase, make_stream(0))
    with pytest.raises(ContractViolation):
        write_1t1r_phase(Crossbar(1, 1, params, Architecture.ONE_R), phase, make_stream(0))


def test_deterministic_pulse_width(params):
    width = deterministic_pulse_width(params, P2AP, 200e-6)
    assert width > 2.5e-9
    assert switching_probability(200e-6, width, P2AP, params) == pytest.approx(0.9999, abs=1e-9)


def test_program_deterministic_1t1r_is_exact(params):
    xbar = Crossbar.fabricate(9, 6, params, Architecture.ONE_T_ONE_R, make_stream(10))
    target = make_stream(11).random(xbar.shape) < 0.5
    report = program_deterministic(xbar, target, make_stream(12))
    assert report.corrupted_cells == 0
    assert report.retries_exhausted == 0
    assert np.array_equal(xbar.is_ap, target)


def test_program_deterministic_1r_single_cell(params):
    xbar = Crossbar(1, 1, params, Architecture.ONE_R)
    report = program_deterministic(xbar, np.array([[True]]), make_stream(13))
    assert report.corrupted_cells == 0
    assert xbar.is_ap[0, 0]


def test_program_deterministic_1r_disturbs_neighbours(params):
    xbar = Crossbar.fabricate(16, 16, params, Architecture.ONE_R, make_stream(14))
    target = make_stream(15).random(xbar.shape) < 0.5
    report = program_deterministic(xbar, target, make_stream(16))
    assert report.corrupted_cells > 0
    assert report.pulses == 16


def test_program_deterministic_1r_phase_directions(params, monkeypatch):
    phases = []
    monkeypatch.setattr(writes, "write_1r_phase", lambda xbar, phase, rng: phases.append(phase))
    xbar = Crossbar(3, 3, params, Architecture.ONE_R)
    target = np.array([[True, True, True], [False, False, False], [True, False, True]])
    program_deterministic(xbar, target, make_stream(17))
    assert [p.intended_direction for p in phases] == [P2AP, AP2P, None]


def test_program_deterministic_shape_check(params):
    xbar = Crossbar(3, 2, params, Architecture.ONE_T_ONE_R)
    with pytest.raises(ContractViolation):
        program_deterministic(xbar, np.zeros((3, 2), dtype=bool), make_stream(0))
