"""
MTJ device parameters and per-device fabrication sampling

Units everywhere: amperes, seconds, ohms.
"""

from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Dict, Tuple, Union
import logging

import numpy as np
import yaml
from pydantic import BaseModel, Field, field_validator, model_validator
from scipy.stats import truncnorm

logger = logging.getLogger(__name__)

# Nominal resistances: R_P from V_P = 0.68 V at 140 uA, R_AP inside the V_AP band
R_P_NOMINAL = 4.86e3
R_AP_NOMINAL = 9.7e3

# Gaussian variation is truncated at +/- this many standard deviations
TRUNCATION_SIGMAS = 3.0


class SwitchDirection(str, Enum):
    """Direction of a magnetization reversal"""
    AP_TO_P = "ap2p"
    P_TO_AP = "p2ap"

    @property
    def source_state(self) -> "MtjState":
        return MtjState.AP if self is SwitchDirection.AP_TO_P else MtjState.P

    @property
    def target_state(self) -> "MtjState":
        return MtjState.P if self is SwitchDirection.AP_TO_P else MtjState.AP


class MtjState(str, Enum):
    P = "P"
    AP = "AP"


DirectionMap = Dict[SwitchDirection, float]


class DeviceParams(BaseModel):
    """Switching physics constants plus the fabrication-variation spec"""

    ic0: DirectionMap = Field(..., description="critical current I_c0 per direction (A)")
    delta: DirectionMap = Field(..., description="thermal stability per direction")
    tau0: DirectionMap = Field(..., description="T(a) timescale per direction (s)")
    r_p: float = Field(R_P_NOMINAL, description="parallel-state resistance (ohm)")
    r_ap: float = Field(R_AP_NOMINAL, description="anti-parallel-state resistance (ohm)")
    variation_sigma: float = Field(0.0, description="relative std-dev of resistance variation")

    model_config = {"frozen": True}

    @field_validator("ic0", "delta", "tau0")
    @classmethod
    def _both_directions_positive(cls, value: DirectionMap) -> DirectionMap:
        if set(value) != set(SwitchDirection):
            raise ValueError("expected one value per switching direction")
        if any(v <= 0 for v in value.values()):
            raise ValueError("values must be positive")
        return value

    @model_validator(mode="after")
    def _check_invariants(self) -> "DeviceParams":
        if not (self.r_ap > self.r_p > 0):
            raise ValueError(f"need r_ap > r_p > 0, got r_p={self.r_p}, r_ap={self.r_ap}")
        if not self.ic0[SwitchDirection.P_TO_AP] > self.ic0[SwitchDirection.AP_TO_P]:
            raise ValueError("I_c0 for P->AP must exceed I_c0 for AP->P")
        if not (0.0 <= self.variation_sigma < 1.0 / 3.0):
            raise ValueError(f"variation_sigma must lie in [0, 1/3), got {self.variation_sigma}")
        return self

    @property
    def g_p(self) -> float:
        return 1.0 / self.r_p

    @property
    def g_ap(self) -> float:
        return 1.0 / self.r_ap

    def with_variation(self, sigma: float) -> "DeviceParams":
        """Copy of these parameters with a different variation level"""
        return DeviceParams(**{**self.model_dump(), "variation_sigma": sigma})

    def to_yaml(self, path: Union[str, Path]):
        """
        Write parameters as a key-value YAML document

        Args:
            path: Output file
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        doc = {
            "units": {"current": "A", "time": "s", "resistance": "ohm"},
            **self.model_dump(mode="json"),
        }
        with open(path, "w") as f:
            yaml.safe_dump(doc, f, sort_keys=False)
        logger.info(f"Saved device parameters to {path}")

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "DeviceParams":
        with open(path, "r") as f:
            doc = yaml.safe_load(f)
        doc.pop("units", None)
        return cls(**doc)


@dataclass(frozen=True)
class MtjSynapse:
    """One crossbar cell: binary state and its sampled resistances"""
    state: MtjState
    r_p_actual: float
    r_ap_actual: float

    def __post_init__(self):
        if not self.r_ap_actual > self.r_p_actual:
            raise ValueError("r_ap_actual must exceed r_p_actual")

    @property
    def resistance(self) -> float:
        return self.r_ap_actual if self.state is MtjState.AP else self.r_p_actual

    @property
    def conductance(self) -> float:
        return 1.0 / self.resistance

    def with_state(self, state: MtjState) -> "MtjSynapse":
        return replace(self, state=state)


def _truncated_relative_errors(sigma: float, size, rng: np.random.Generator) -> np.ndarray:
    if sigma == 0.0:
        return np.zeros(size)
    # inverse-CDF sampling: one uniform per variate, so cell k only sees draw k
    return sigma * truncnorm.rvs(-TRUNCATION_SIGMAS, TRUNCATION_SIGMAS, size=size, random_state=rng)


def sample_resistances(params: DeviceParams, rng: np.random.Generator,
                       shape: Tuple[int, ...]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sample per-device R_P and R_AP for a whole array of cells

    The realized relative std-dev is 0.9866 * variation_sigma because of the
    +/-3 sigma truncation; no correction is applied so the bounds stay exact.

    Args:
        params: Device parameters (nominal resistances and variation_sigma)
        rng: Stream owned by the array being fabricated
        shape: Cell array shape

    Returns:
        (r_p_actual, r_ap_actual) arrays of the given shape
    """
    sigma = params.variation_sigma
    eps = _truncated_relative_errors(sigma, (2,) + tuple(shape), rng)
    r_p = params.r_p * (1.0 + eps[0])
    r_ap = params.r_ap * (1.0 + eps[1])

    # pairs violating r_ap > r_p are redrawn from the same stream
    bad = r_ap <= r_p
    while np.any(bad):
        n_bad = int(bad.sum())
        redraw = _truncated_relative_errors(sigma, (2, n_bad), rng)
        r_p[bad] = params.r_p * (1.0 + redraw[0])
        r_ap[bad] = params.r_ap * (1.0 + redraw[1])
        bad = r_ap <= r_p

    return r_p, r_ap


def sample_fabrication(params: DeviceParams, rng: np.random.Generator,
                       state: MtjState = MtjState.P) -> MtjSynapse:
    """
    Fabricate one device: sample its P and AP resistances

    Args:
        params: Device parameters
        rng: Per-device stream (see utils.random_streams.device_stream)
        state: Initial state supplied by the caller

    Returns:
        MtjSynapse with resistances fixed for its lifetime
    """
    r_p, r_ap = sample_resistances(params, rng, (1,))
    return MtjSynapse(state=state, r_p_actual=float(r_p[0]), r_ap_actual=float(r_ap[0]))
