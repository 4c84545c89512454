
import numpy as np
import pytest

from src.crossbar.crossbar import Architecture
from src.models.network import binary_states, init_crossbar_network
from src.models.scheduling import PhaseMode
from src.models.train_models import ReferenceMode, TrainConfig, train_insitu, train_reference
from src.utils.exceptions import ContractViolation
from src.utils.random_streams import make_stream


def _shape(dataset, hidden=()):
    return (dataset.n_inputs,) + tuple(hidden) + (dataset.n_outputs,)


def test_zero_epochs_leave_states_unchanged(params, synthetic):
    net = init_crossbar_network(_shape(synthetic), Architecture.ONE_T_ONE_R, params, None, seed=1)
    before = binary_states(net)
    trace = train_insitu(net, synthetic, TrainConfig(epochs=0), make_stream(1, 3))
    assert len(trace) == 0
    assert trace.final is None
    assert trace.to_frame().empty
    for a, b in zip(before, binary_states(net)):
        assert np.array_equal(a, b)


@pytest.mark.parametrize("arch,mode", [
    (Architecture.ONE_T_ONE_R, PhaseMode.TWO_PHASE),
    (Architecture.ONE_R, PhaseMode.FOUR_PHASE),
])
def test_zero_learning_rate_never_writes(params, synthetic, arch, mode):
    subset = synthetic.with_train_subset(40)
    net = init_crossbar_network(_shape(subset, (4,)), arch, params, None, seed=2)
    before = binary_states(net)
    trace = train_insitu(net, subset, TrainConfig(epochs=2, eta=0.0, phase_mode=mode), make_stream(2, 3))
    assert trace.to_frame()["flips"].sum() == 0
    for a, b in zip(before, binary_states(net)):
        assert np.array_equal(a, b)


def test_four_phase_rejected_on_1t1r(params, synthetic):
    net = init_crossbar_network(_shape(synthetic), Architecture.ONE_T_ONE_R, params, None, seed=0)
    with pytest.raises(ContractViolation):
        train_insitu(net, synthetic, TrainConfig(epochs=1, phase_mode=PhaseMode.FOUR_PHASE), make_stream(0))


def test_insitu_training_is_deterministic(params, synthetic):
    subset = synthetic.with_train_subset(60)
    runs = []
    for _ in range(2):
        net = init_crossbar_network(_shape(subset), Architecture.ONE_R, params.with_variation(0.05),
                                    None, seed=9)
        trace = train_insitu(net, subset, TrainConfig(epochs=2, phase_mode=PhaseMode.FOUR_PHASE),
                             make_stream(9, 3))
        runs.append((trace.to_frame(), binary_states(net)))
    assert runs[0][0].equals(runs[1][0])
    for a, b in zip(runs[0][1], runs[1][1]):
        assert np.array_equal(a, b)


def test_insitu_1t1r_learns_separable_data(params, synthetic):
    net = init_crossbar_network(_shape(synthetic), Architecture.ONE_T_ONE_R, params, None, seed=4)
    trace = train_insitu(net, synthetic, TrainConfig(epochs=10), make_stream(4, 3))
    frame = trace.to_frame()
    assert list(frame["epoch"]) == list(range(1, 11))
    assert frame["flips"].sum() > 0
    assert frame["unintended_flips"].sum() == 0
    assert trace.final.test_error < 35.0


def test_real_valued_reference_learns(synthetic):
    config = TrainConfig(epochs=10)
    result = train_reference(_shape(synthetic), synthetic, config, ReferenceMode.REAL_VALUED, make_stream(5))
    assert result.trace.final.test_error <= 10.0
    assert result.trace.records[-1].train_mse < result.trace.records[0].train_mse
    assert len(result.weights) == 1


def test_offline_stochastic_holds_binary_weights(synthetic):
    config = TrainConfig(epochs=2)
    result = train_reference(_shape(synthetic, (4,)), synthetic, config, ReferenceMode.OFFLINE_STOCHASTIC,
                             make_stream(6), scale_b=[0.3, 0.2])
    for layer, b in zip(result.network.layers, (0.3, 0.2)):
        assert layer.xbar.arch is Architecture.ONE_T_ONE_R
        assert layer.xbar.params.variation_sigma == 0.0
        assert set(np.unique(layer.binary_weights())) <= {b, -b}
        assert np.allclose(np.abs(layer.effective_weights()), b, rtol=1e-9)


def test_train_config_bounds():
    with pytest.raises(ValueError):
        TrainConfig(eta=1.5)
    with pytest.raises(ValueError):
        TrainConfig(error_norm="median")
