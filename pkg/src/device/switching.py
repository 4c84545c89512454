"""
Stochastic switching model of an MTJ in the precessional regime

    P(a, t) = exp(-4 f(a) delta exp(-2 t / T(a))),   a = I / I_c0 > 1
    f(a)    = (2a / (a - 1)) ** (-2 / (a + 1))
    T(a)    = tau0 / (a - 1)

Currents at or below I_c0 never switch. The T(a) form is the simplest one that
diverges at criticality; swap `mean_switching_time` to change it.
"""

from typing import Tuple, Union
import logging

import numpy as np

from src.device.params import DeviceParams, MtjState, MtjSynapse, SwitchDirection
from src.utils.exceptions import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def _scalar_or_array(value: np.ndarray, *inputs) -> ArrayLike:
    if all(np.ndim(x) == 0 for x in inputs):
        return float(value)
    return value


def precessional_factor(a: ArrayLike) -> ArrayLike:
    """
    f(a) = (2a/(a-1))^(-2/(a+1)), in (0, 1) for every finite a > 1

    Args:
        a: Current ratio I / I_c0

    Returns:
        Precessional factor, same shape as a
    """
    a_arr = np.asarray(a, dtype=float)
    if np.any(a_arr <= 1.0):
        raise DomainError("precessional_factor needs a > 1; gate sub-critical currents first")
    value = np.power(2.0 * a_arr / (a_arr - 1.0), -2.0 / (a_arr + 1.0))
    return _scalar_or_array(value, a)


def mean_switching_time(a: ArrayLike, params: DeviceParams,
                        direction: SwitchDirection = SwitchDirection.AP_TO_P) -> ArrayLike:
    """
    T(a) = tau0 / (a - 1)

    Args:
        a: Current ratio I / I_c0
        params: Device parameters (tau0 for the given direction)
        direction: Switching direction selecting tau0

    Returns:
        Mean switching time in seconds
    """
    a_arr = np.asarray(a, dtype=float)
    if np.any(a_arr <= 1.0):
        raise DomainError("mean_switching_time needs a > 1")
    value = params.tau0[direction] / (a_arr - 1.0)
    return _scalar_or_array(value, a)


def _probability(a: np.ndarray, t: np.ndarray, delta: ArrayLike, tau0: ArrayLike) -> np.ndarray:
    """Switching probability for a > 1 (no gating); inputs broadcast"""
    f = np.power(2.0 * a / (a - 1.0), -2.0 / (a + 1.0))
    return np.exp(-4.0 * f * delta * np.exp(-2.0 * t * (a - 1.0) / tau0))


def switching_probability(current: ArrayLike, pulse_width: ArrayLike,
                          direction: SwitchDirection, params: DeviceParams) -> ArrayLike:
    """
    Probability that a pulse of given magnitude and width reverses the free layer

    Args:
        current: Current magnitude in amperes (>= 0)
        pulse_width: Pulse width in seconds (>= 0)
        direction: Which reversal the polarity drives
        params: Device parameters

    Returns:
        Probability in [0, 1]; exactly 0 when current <= I_c0
    """
    i_arr = np.abs(np.asarray(current, dtype=float))
    t_arr = np.asarray(pulse_width, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("pulse width must be non-negative")

    a = i_arr / params.ic0[direction]
    i_b, t_b = np.broadcast_arrays(a, t_arr)
    prob = np.zeros(i_b.shape)
    above = i_b > 1.0
    if np.any(above):
        prob[above] = _probability(i_b[above], t_b[above],
                                   params.delta[direction], params.tau0[direction])
    return _scalar_or_array(prob, current, pulse_width)


def polarity_probability(signed_current: np.ndarray, pulse_width: ArrayLike,
                         params: DeviceParams) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized switching probability where each element picks its direction
    from the current polarity (positive drives P->AP, negative AP->P)

    Args:
        signed_current: Signed currents (A)
        pulse_width: Pulse widths (s), broadcast against the currents
        params: Device parameters

    Returns:
        (probability, drives_p_to_ap) arrays; zero current gives probability 0
    """
    current = np.asarray(signed_current, dtype=float)
    width = np.broadcast_to(np.asarray(pulse_width, dtype=float), current.shape)
    to_ap = current > 0
    prob = np.where(
        to_ap,
        switching_probability(np.where(to_ap, current, 0.0), width, SwitchDirection.P_TO_AP, params),
        switching_probability(np.where(current < 0, -current, 0.0), width, SwitchDirection.AP_TO_P, params),
    )
    return prob, to_ap


def progress(current: np.ndarray, duration: ArrayLike, direction: SwitchDirection,
             params: DeviceParams) -> np.ndarray:
    """Precession progress t / T(a) accumulated over a pulse (0 when sub-critical)"""
    a = np.abs(np.asarray(current, dtype=float)) / params.ic0[direction]
    return np.where(a > 1.0, np.asarray(duration) * (a - 1.0) / params.tau0[direction], 0.0)


def pulse_width_for_probability(current: float, direction: SwitchDirection,
                                params: DeviceParams, target: float) -> float:
    """
    Shortest pulse reaching a switching probability at a fixed current

    Inverts the switching model: t = -(T/2) ln(-ln(P) / (4 f delta)).

    Args:
        current: Current magnitude (A), must exceed I_c0
        direction: Switching direction
        params: Device parameters
        target: Probability in (0, 1)

    Returns:
        Pulse width in seconds
    """
    if not 0.0 < target < 1.0:
        raise DomainError(f"target probability must be in (0, 1), got {target}")
    a = abs(current) / params.ic0[direction]
    if a <= 1.0:
        raise DomainError(f"current {current:.3e} A is not above I_c0 for {direction.value}")
    ratio = -np.log(target) / (4.0 * precessional_factor(a) * params.delta[direction])
    if ratio >= 1.0:
        return 0.0
    return float(-0.5 * mean_switching_time(a, params, direction) * np.log(ratio))


def attempt_switch(synapse: MtjSynapse, current: float, pulse_width: float,
                   params: DeviceParams, rng: np.random.Generator) -> MtjSynapse:
    """
    Apply one write pulse to a single device

    Positive current drives P->AP, negative drives AP->P. A polarity that has no
    transition out of the present state never flips it. Exactly one uniform
    variate is drawn per call.

    Args:
        synapse: Device before the pulse
        current: Signed current (A)
        pulse_width: Pulse width (s)
        params: Device parameters
        rng: Random stream

    Returns:
        Device after the pulse
    """
    if pulse_width < 0:
        raise DomainError("pulse width must be non-negative")
    u = rng.random()
    if current == 0:
        return synapse
    direction = SwitchDirection.P_TO_AP if current > 0 else SwitchDirection.AP_TO_P
    if synapse.state is not direction.source_state:
        return synapse
    prob = switching_probability(abs(current), pulse_width, direction, params)
    if u < prob:
        return synapse.with_state(direction.target_state)
    return synapse
