"""
MTJ Crossbar
M x N grid of MTJ synapses. Cell S_{j,i} connects input row i to output column j,
so every per-cell array has shape (cols, rows).
"""

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Union
import logging

import joblib
import numpy as np

from src.device.params import DeviceParams, MtjState, MtjSynapse, SwitchDirection, sample_resistances
from src.utils.exceptions import ContractViolation, DatasetFormatError

logger = logging.getLogger(__name__)

STATE_FORMAT = "mtj-crossbar"
STATE_VERSION = 1


class Architecture(str, Enum):
    ONE_T_ONE_R = "1t1r"
    ONE_R = "1r"


class Crossbar:
    """Grid of MTJ synapses sharing one set of device parameters"""

    def __init__(self, rows: int, cols: int, params: DeviceParams,
                 arch: Architecture = Architecture.ONE_T_ONE_R,
                 is_ap: Optional[np.ndarray] = None,
                 r_p: Optional[np.ndarray] = None,
                 r_ap: Optional[np.ndarray] = None):
        self.rows = int(rows)
        self.cols = int(cols)
        self.params = params
        self.arch = Architecture(arch)
        shape = (self.cols, self.rows)

        self.is_ap = np.zeros(shape, dtype=bool) if is_ap is None else np.asarray(is_ap, dtype=bool)
        self.r_p = np.full(shape, params.r_p) if r_p is None else np.asarray(r_p, dtype=float)
        self.r_ap = np.full(shape, params.r_ap) if r_ap is None else np.asarray(r_ap, dtype=float)

        for name in ("is_ap", "r_p", "r_ap"):
            if getattr(self, name).shape != shape:
                raise ContractViolation(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if np.any(self.r_ap <= self.r_p):
            raise ContractViolation("every cell needs r_ap > r_p")

    @classmethod
    def fabricate(cls, rows: int, cols: int, params: DeviceParams, arch: Architecture,
                  rng: np.random.Generator, ap_fraction: float = 0.5) -> "Crossbar":
        """
        Build a crossbar with sampled resistances and random initial states

        Args:
            rows: Number of inputs M
            cols: Number of outputs N
            params: Device parameters (variation_sigma drives resistance sampling)
            arch: 1T1R or 1R
            rng: Stream owned by this crossbar
            ap_fraction: Probability that a cell starts in AP

        Returns:
            New Crossbar
        """
        r_p, r_ap = sample_resistances(params, rng, (cols, rows))
        is_ap = rng.random((cols, rows)) < ap_fraction
        logger.debug(f"Fabricated {rows}x{cols} {Architecture(arch).value} crossbar "
                     f"(sigma={params.variation_sigma})")
        return cls(rows, cols, params, arch, is_ap=is_ap, r_p=r_p, r_ap=r_ap)

    @property
    def shape(self):
        return (self.cols, self.rows)

    def resistance(self) -> np.ndarray:
        return np.where(self.is_ap, self.r_ap, self.r_p)

    def conductance(self) -> np.ndarray:
        """Actual conductance G_{j,i} of every cell, shape (cols, rows)"""
        return np.where(self.is_ap, 1.0 / self.r_ap, 1.0 / self.r_p)

    def cell(self, j: int, i: int) -> MtjSynapse:
        state = MtjState.AP if self.is_ap[j, i] else MtjState.P
        return MtjSynapse(state=state, r_p_actual=float(self.r_p[j, i]), r_ap_actual=float(self.r_ap[j, i]))

    def set_cell(self, j: int, i: int, synapse: MtjSynapse):
        self.is_ap[j, i] = synapse.state is MtjState.AP

    def transpose(self) -> "Crossbar":
        """Crossbar with input and output terminals swapped"""
        return Crossbar(self.cols, self.rows, self.params, self.arch,
                        is_ap=self.is_ap.T.copy(), r_p=self.r_p.T.copy(), r_ap=self.r_ap.T.copy())

    def copy(self) -> "Crossbar":
        return Crossbar(self.rows, self.cols, self.params, self.arch,
                        is_ap=self.is_ap.copy(), r_p=self.r_p.copy(), r_ap=self.r_ap.copy())

    def __repr__(self) -> str:
        return (f"Crossbar(rows={self.rows}, cols={self.cols}, arch={self.arch.value}, "
                f"ap={int(self.is_ap.sum())}/{self.is_ap.size})")


@dataclass
class PhaseSpec:
    """One write phase: selected terminals, applied voltages and pulse widths"""
    phase_id: int
    row_enabled: np.ndarray
    col_enabled: np.ndarray
    row_voltage: np.ndarray
    col_pulse_width: np.ndarray
    # None when the enabled rows drive both polarities
    intended_direction: Optional[SwitchDirection] = None

    def __post_init__(self):
        self.row_enabled = np.asarray(self.row_enabled, dtype=bool)
        self.col_enabled = np.asarray(self.col_enabled, dtype=bool)
        self.row_voltage = np.where(self.row_enabled, np.asarray(self.row_voltage, dtype=float), 0.0)
        self.col_pulse_width = np.where(self.col_enabled, np.asarray(self.col_pulse_width, dtype=float), 0.0)
        if self.row_voltage.shape != self.row_enabled.shape:
            raise ContractViolation("row_voltage and row_enabled disagree in length")
        if self.col_pulse_width.shape != self.col_enabled.shape:
            raise ContractViolation("col_pulse_width and col_enabled disagree in length")
        if np.any(self.col_pulse_width < 0):
            raise ContractViolation("pulse widths must be non-negative")

    @property
    def is_noop(self) -> bool:
        return not (np.any(self.row_enabled) and np.any(self.col_enabled))

    def same_sign_rows(self) -> bool:
        """True when every enabled row is driven with the same polarity"""
        signs = np.sign(self.row_voltage[self.row_enabled])
        return bool(signs.size == 0 or np.all(signs == signs[0]))

    def check_dimensions(self, xbar: Crossbar):
        if self.row_enabled.shape != (xbar.rows,) or self.col_enabled.shape != (xbar.cols,):
            raise ContractViolation(
                f"phase sized ({self.row_enabled.size} rows, {self.col_enabled.size} cols) "
                f"does not fit crossbar {xbar.rows}x{xbar.cols}"
            )


def _matvec(g: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(g) @ v


def read(xbar: Crossbar, input_voltages: np.ndarray) -> np.ndarray:
    """
    Analog read: I_j = sum_i G_{j,i} V_i with outputs held at virtual ground

    Args:
        xbar: Crossbar
        input_voltages: Row voltages, length M

    Returns:
        Output currents, length N
    """
    v = np.asarray(input_voltages, dtype=float)
    if v.shape != (xbar.rows,):
        raise ContractViolation(f"read expects {xbar.rows} input voltages, got shape {v.shape}")
    return _matvec(xbar.conductance(), v)


def transpose_read(xbar: Crossbar, error_voltages: np.ndarray) -> np.ndarray:
    """
    Read with input and output terminals reversed: returns G^T e

    Args:
        xbar: Crossbar
        error_voltages: Column voltages, length N

    Returns:
        Row currents, length M
    """
    e = np.asarray(error_voltages, dtype=float)
    if e.shape != (xbar.cols,):
        raise ContractViolation(f"transpose_read expects {xbar.cols} voltages, got shape {e.shape}")
    return _matvec(xbar.conductance().T, e)


def dump_state(xbar: Crossbar, path: Union[str, Path]):
    """
    Save crossbar states and per-cell resistances

    Args:
        xbar: Crossbar to save
        path: Output file (joblib)
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": STATE_FORMAT,
        "version": STATE_VERSION,
        "rows": xbar.rows,
        "cols": xbar.cols,
        "arch": xbar.arch.value,
        "params": xbar.params.model_dump(mode="json"),
        "is_ap": xbar.is_ap,
        "r_p": xbar.r_p,
        "r_ap": xbar.r_ap,
    }
    joblib.dump(payload, path)
    logger.info(f"Crossbar state saved to {path}")


def restore_state(path: Union[str, Path]) -> Crossbar:
    """Load a crossbar saved with dump_state"""
    payload = joblib.load(path)
    if not isinstance(payload, dict) or payload.get("format") != STATE_FORMAT:
        raise DatasetFormatError(f"{path} is not a crossbar state file")
    if payload.get("version") != STATE_VERSION:
        raise DatasetFormatError(f"unsupported crossbar state version {payload.get('version')}")
    xbar = Crossbar(payload["rows"], payload["cols"], DeviceParams(**payload["params"]),
                    Architecture(payload["arch"]), is_ap=payload["is_ap"],
                    r_p=payload["r_p"], r_ap=payload["r_ap"])
    logger.info(f"Crossbar state loaded from {path}")
    return xbar
