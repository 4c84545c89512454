"""
Binary-weight networks on MTJ crossbars

A cell in P stores +b, a cell in AP stores -b. Each crossbar is read against a
reference column of conductance (G_P + G_AP) / 2, so

    a_j = gain * (I_j - I_ref),   gain = 2 b / ((G_P - G_AP) V_read)

recovers sum_i (+/-b) x_i exactly for nominal devices. Every layer has one
extra input row clamped at +1 that carries the bias.
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union
import logging

import numpy as np

from src.crossbar.crossbar import Architecture, Crossbar, read, transpose_read
from src.data.preprocessor import classification_error
from src.device.params import DeviceParams
from src.utils.exceptions import ContractViolation
from src.utils.random_streams import make_stream

logger = logging.getLogger(__name__)

# read currents stay far below I_c0: 0.05 V / 4.86 kOhm is about 10 uA
V_READ = 0.05


def with_bias(x: np.ndarray) -> np.ndarray:
    return np.append(np.asarray(x, dtype=float), 1.0)


def activation(a: np.ndarray) -> np.ndarray:
    return np.tanh(a)


def activation_derivative(y: np.ndarray) -> np.ndarray:
    """tanh'(a) written in terms of y = tanh(a)"""
    return 1.0 - y ** 2


def binarize_scale(weights: np.ndarray) -> float:
    """
    Binary weight magnitude that best approximates W in the L2 sense: mean |W|

    Args:
        weights: Real-valued weights

    Returns:
        b > 0 for any non-zero matrix
    """
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        raise ContractViolation("binarize_scale needs at least one weight")
    return float(np.abs(w).sum() / w.size)


@dataclass
class CrossbarLayer:
    """One layer stored on a crossbar: weights are +/-scale_b"""
    xbar: Crossbar
    scale_b: float
    rng: np.random.Generator = field(repr=False)
    v_read: float = V_READ

    def __post_init__(self):
        if not self.scale_b > 0:
            raise ContractViolation(f"scale_b must be positive, got {self.scale_b}")

    @property
    def n_in(self) -> int:
        return self.xbar.rows - 1

    @property
    def n_out(self) -> int:
        return self.xbar.cols

    @property
    def _g_mid(self) -> float:
        return 0.5 * (self.xbar.params.g_p + self.xbar.params.g_ap)

    @property
    def gain(self) -> float:
        params = self.xbar.params
        return 2.0 * self.scale_b / ((params.g_p - params.g_ap) * self.v_read)

    def preactivation(self, x_bias: np.ndarray) -> np.ndarray:
        v = self.v_read * x_bias
        return self.gain * (read(self.xbar, v) - self._g_mid * v.sum())

    def back_project(self, delta: np.ndarray) -> np.ndarray:
        """W^T delta through a transposed read, bias row dropped"""
        scale = max(1.0, float(np.max(np.abs(delta), initial=0.0)))
        e = self.v_read * delta / scale
        projected = self.gain * scale * (transpose_read(self.xbar, e) - self._g_mid * e.sum())
        return projected[:-1]

    def effective_weights(self) -> np.ndarray:
        """Weights the read path realizes, shape (n_out, n_in + 1)"""
        return self.gain * self.v_read * (self.xbar.conductance() - self._g_mid)

    def binary_weights(self) -> np.ndarray:
        """Ideal +/-b matrix of the stored states"""
        return np.where(self.xbar.is_ap, -self.scale_b, self.scale_b)


@dataclass
class DenseLayer:
    """Real-valued layer for software baselines, shape (n_out, n_in + 1)"""
    weights: np.ndarray

    @property
    def n_in(self) -> int:
        return self.weights.shape[1] - 1

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    def preactivation(self, x_bias: np.ndarray) -> np.ndarray:
        return self.weights @ x_bias

    def back_project(self, delta: np.ndarray) -> np.ndarray:
        return (self.weights.T @ delta)[:-1]

    def effective_weights(self) -> np.ndarray:
        return self.weights


Layer = Union[CrossbarLayer, DenseLayer]


@dataclass
class ForwardPass:
    """Per-layer inputs (bias included), pre-activations and activations"""
    inputs: List[np.ndarray]
    preactivations: List[np.ndarray]
    activations: List[np.ndarray]

    @property
    def output(self) -> np.ndarray:
        return self.activations[-1]


class Network:
    """Cascade of layers with tanh activations"""

    def __init__(self, layers: Sequence[Layer]):
        self.layers = list(layers)
        if not self.layers:
            raise ContractViolation("a network needs at least one layer")
        for k in range(len(self.layers) - 1):
            if self.layers[k].n_out != self.layers[k + 1].n_in:
                raise ContractViolation(
                    f"layer {k} has {self.layers[k].n_out} outputs but layer {k + 1} "
                    f"expects {self.layers[k + 1].n_in} inputs"
                )

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.layers[0].n_in,) + tuple(layer.n_out for layer in self.layers)

    @property
    def on_crossbars(self) -> bool:
        return all(isinstance(layer, CrossbarLayer) for layer in self.layers)

    def forward(self, x: np.ndarray) -> ForwardPass:
        """
        Propagate one sample

        Args:
            x: Input vector in [-1, 1], bias excluded

        Returns:
            ForwardPass with every layer's quantities
        """
        x = np.asarray(x, dtype=float)
        if x.shape != (self.layers[0].n_in,):
            raise ContractViolation(f"expected {self.layers[0].n_in} inputs, got shape {x.shape}")
        inputs, pre, act = [], [], []
        y = x
        for layer in self.layers:
            x_bias = with_bias(y)
            a = layer.preactivation(x_bias)
            y = activation(a)
            inputs.append(x_bias)
            pre.append(a)
            act.append(y)
        return ForwardPass(inputs=inputs, preactivations=pre, activations=act)

    def backward(self, fwd: ForwardPass, target: np.ndarray) -> List[np.ndarray]:
        """
        Raw errors dE/da per layer for E = 1/2 ||y - target||^2

        Hidden errors come from the downstream layer's transposed read.

        Args:
            fwd: Result of forward for the same sample
            target: Desired output

        Returns:
            One error vector per layer, first layer first
        """
        target = np.asarray(target, dtype=float)
        if target.shape != fwd.output.shape:
            raise ContractViolation(f"target shape {target.shape} does not match output {fwd.output.shape}")
        deltas = [None] * len(self.layers)
        deltas[-1] = (fwd.output - target) * activation_derivative(fwd.output)
        for k in range(len(self.layers) - 2, -1, -1):
            back = self.layers[k + 1].back_project(deltas[k + 1])
            deltas[k] = back * activation_derivative(fwd.activations[k])
        return deltas

    def predict(self, features: np.ndarray) -> np.ndarray:
        return np.stack([self.forward(x).output for x in np.asarray(features, dtype=float)])

    def dense_weights(self) -> List[np.ndarray]:
        return [layer.effective_weights() for layer in self.layers]


def error_norm(delta: np.ndarray, eta: float, p_top: float = 0.7, rule: str = "max_abs") -> np.ndarray:
    """
    Bring a raw error vector into [-1, 1] and fold in the learning rate

    The linear write map reaches switching probability p_top at |x| = |delta| = 1,
    so eta / p_top rescales the mapped probability to eta |x| |delta|.

    Args:
        delta: Raw layer error
        eta: Learning rate in [0, 1]
        p_top: Probability at full drive of the calibrated map
        rule: "max_abs" divides by max(1, max |delta|); "clip" clips to [-1, 1]

    Returns:
        Normalized error with every |entry| <= 1
    """
    delta = np.asarray(delta, dtype=float)
    if rule == "max_abs":
        scaled = delta / max(1.0, float(np.max(np.abs(delta), initial=0.0)))
    elif rule == "clip":
        scaled = np.clip(delta, -1.0, 1.0)
    else:
        raise ContractViolation(f"unknown error_norm rule '{rule}'")
    return np.clip(scaled * (eta / p_top), -1.0, 1.0)


def fan_in_scale(n_in: int) -> float:
    return 1.0 / np.sqrt(n_in + 1)


def init_crossbar_network(shape: Sequence[int], arch: Architecture, params: DeviceParams,
                          scale_b: Union[float, Sequence[float], None], seed: int,
                          ap_fraction: float = 0.5) -> Network:
    """
    Fabricate one crossbar per layer with random initial states

    Args:
        shape: Layer widths, inputs first, e.g. (60, 15, 1)
        arch: 1T1R or 1R
        params: Device parameters (variation included)
        scale_b: Per-layer weight magnitude, a single value for all layers,
            or None for 1 / sqrt(fan_in)
        seed: Run seed; layer k owns stream (seed, 1, k)
        ap_fraction: Probability that a cell starts in AP

    Returns:
        Network of CrossbarLayer
    """
    if len(shape) < 2:
        raise ContractViolation(f"shape needs inputs and outputs, got {tuple(shape)}")
    n_layers = len(shape) - 1
    if scale_b is None:
        scales = [fan_in_scale(shape[k]) for k in range(n_layers)]
    elif np.ndim(scale_b) == 0:
        scales = [float(scale_b)] * n_layers
    else:
        scales = [float(b) for b in scale_b]
        if len(scales) != n_layers:
            raise ContractViolation(f"{len(scales)} scales given for {n_layers} layers")

    layers = []
    for k in range(n_layers):
        rng = make_stream(seed, 1, k)
        xbar = Crossbar.fabricate(shape[k] + 1, shape[k + 1], params, arch, rng, ap_fraction)
        layers.append(CrossbarLayer(xbar=xbar, scale_b=scales[k], rng=rng))
    logger.info(f"Built {Architecture(arch).value} network {tuple(shape)} "
                f"(scale_b={[round(b, 4) for b in scales]}, sigma={params.variation_sigma})")
    return Network(layers)


def init_dense_network(shape: Sequence[int], rng: np.random.Generator) -> Network:
    """Real-valued network with uniform(-1, 1) / sqrt(fan_in) weights"""
    layers = []
    for k in range(len(shape) - 1):
        limit = fan_in_scale(shape[k])
        layers.append(DenseLayer(rng.uniform(-limit, limit, size=(shape[k + 1], shape[k] + 1))))
    return Network(layers)


def evaluate(net: Network, features: np.ndarray, targets: np.ndarray) -> Tuple[float, float]:
    """
    Mean squared error and classification error of a network on a split

    Args:
        net: Network
        features: Samples x inputs
        targets: Bipolar targets, samples x outputs

    Returns:
        (mse, error percent)
    """
    outputs = net.predict(features)
    mse = float(np.mean((outputs - np.asarray(targets, dtype=float)) ** 2))
    return mse, classification_error(outputs, targets)


def binary_states(net: Network) -> List[np.ndarray]:
    """AP masks of every crossbar layer"""
    if not net.on_crossbars:
        raise ContractViolation("binary_states needs a crossbar network")
    return [layer.xbar.is_ap.copy() for layer in net.layers]


def scales(net: Network) -> List[float]:
    return [layer.scale_b for layer in net.layers if isinstance(layer, CrossbarLayer)]


def rv_scales(net: Network) -> List[float]:
    """Binarization scale of each layer of a real-valued network"""
    return [binarize_scale(layer.effective_weights()) for layer in net.layers]

