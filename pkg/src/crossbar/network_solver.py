"""
Nodal analysis of a transistor-less (1R) crossbar during a write phase

Enabled rows are ideal voltage sources, enabled columns are grounded, every other
terminal floats. The floating-node voltages solve the reduced Laplacian system
    A v_F = b
built from the cell conductances.
"""

from dataclasses import dataclass
import logging

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve

from src.crossbar.crossbar import Architecture, Crossbar, PhaseSpec
from src.utils.exceptions import ContractViolation, SingularNetworkError

logger = logging.getLogger(__name__)

DENSE_NODE_LIMIT = 2048


@dataclass
class NetworkSolution:
    """Terminal voltages and signed device currents (positive = row -> column)"""
    row_voltages: np.ndarray
    col_voltages: np.ndarray
    device_currents: np.ndarray
    row_floating: np.ndarray
    col_floating: np.ndarray

    @property
    def node_voltages(self) -> np.ndarray:
        """Voltages of the floating terminals, rows first"""
        return np.concatenate([self.row_voltages[self.row_floating], self.col_voltages[self.col_floating]])

    def kcl_residual(self) -> float:
        """Largest net current into a floating node, relative to the largest device current"""
        scale = np.max(np.abs(self.device_currents)) if self.device_currents.size else 0.0
        if scale == 0.0:
            return 0.0
        row_net = self.device_currents.sum(axis=0)[self.row_floating]
        col_net = self.device_currents.sum(axis=1)[self.col_floating]
        worst = max(np.max(np.abs(row_net), initial=0.0), np.max(np.abs(col_net), initial=0.0))
        return float(worst / scale)


def _check_grounded(g_ff: sp.spmatrix, touches_fixed: np.ndarray):
    n_comp, labels = connected_components(g_ff, directed=False)
    grounded = np.zeros(n_comp, dtype=bool)
    np.logical_or.at(grounded, labels, touches_fixed)
    if not np.all(grounded):
        raise SingularNetworkError(
            f"{int((~grounded).sum())} floating component(s) have no driven or grounded terminal"
        )


def solve_1r_network(xbar: Crossbar, phase: PhaseSpec) -> NetworkSolution:
    """
    Solve the resistive network of a 1R crossbar for one phase topology

    Args:
        xbar: 1R crossbar (current states give the conductances)
        phase: Phase whose enabled rows/columns define sources and grounds

    Returns:
        NetworkSolution with all device currents

    Raises:
        SingularNetworkError: a floating part of the network has no fixed terminal
    """
    if xbar.arch is not Architecture.ONE_R:
        raise ContractViolation("solve_1r_network needs a 1R crossbar")
    phase.check_dimensions(xbar)

    g = xbar.conductance()
    row_floating = ~phase.row_enabled
    col_floating = ~phase.col_enabled
    row_v = np.where(phase.row_enabled, phase.row_voltage, 0.0)
    col_v = np.zeros(xbar.cols)

    rf = np.flatnonzero(row_floating)
    cf = np.flatnonzero(col_floating)
    n_float = rf.size + cf.size

    if n_float:
        g_cf_rf = g[np.ix_(cf, rf)]
        # floating-floating coupling, rows first then columns
        coupling = sp.bmat([[None, sp.csr_matrix(g_cf_rf.T)], [sp.csr_matrix(g_cf_rf), None]],
                           format="csr") if rf.size and cf.size else sp.csr_matrix((n_float, n_float))
        touches_fixed = np.concatenate([
            np.full(rf.size, bool(np.any(phase.col_enabled))),
            np.full(cf.size, bool(np.any(phase.row_enabled))),
        ])
        _check_grounded(coupling, touches_fixed)

        diag = np.concatenate([g[:, rf].sum(axis=0), g[cf, :].sum(axis=1)])
        rhs = np.concatenate([
            np.zeros(rf.size),  # enabled columns sit at 0 V
            g[np.ix_(cf, np.flatnonzero(phase.row_enabled))] @ row_v[phase.row_enabled],
        ])

        if n_float <= DENSE_NODE_LIMIT:
            a = np.diag(diag) - coupling.toarray()
            v_f = scipy.linalg.solve(a, rhs, assume_a="pos")
        else:
            a = (sp.diags(diag) - coupling).tocsc()
            v_f = spsolve(a, rhs)
        logger.debug(f"Solved 1R network with {n_float} floating nodes")

        row_v[rf] = v_f[:rf.size]
        col_v[cf] = v_f[rf.size:]

    currents = g * (row_v[None, :] - col_v[:, None])
    return NetworkSolution(row_voltages=row_v, col_voltages=col_v, device_currents=currents,
                           row_floating=row_floating, col_floating=col_floating)
