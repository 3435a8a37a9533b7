"""
Polar Newton-Raphson power flow used as an independent check of the sweep.
"""
import logging

import numpy as np
from scipy import linalg

from apps.gridflow.network import Injections, Network
from apps.gridflow.sweep import PowerFlowSolution
from apps.shared.exceptions import PowerFlowError

logger = logging.getLogger(__name__)


def admittance_matrix(net: Network) -> np.ndarray:
    """Dense bus admittance matrix in p.u. (series branches only, no shunts)."""
    parent, child = net.branch_ends
    y_branch = 1.0 / net.impedance_pu
    ybus = np.zeros((net.n_bus, net.n_bus), dtype=complex)
    np.add.at(ybus, (parent, parent), y_branch)
    np.add.at(ybus, (child, child), y_branch)
    np.add.at(ybus, (parent, child), -y_branch)
    np.add.at(ybus, (child, parent), -y_branch)
    return ybus


def solve_newton_raphson(net: Network, inj: Injections, tolerance: float = 1e-11,
                         max_iterations: int = 30) -> PowerFlowSolution:
    ybus = admittance_matrix(net)
    s_spec = (np.asarray(inj.p, dtype=float) + 1j * np.asarray(inj.q, dtype=float)) / net.base_mva
    pq = net.non_slack
    n_pq = len(pq)
    vm = np.ones(net.n_bus)
    va = np.zeros(net.n_bus)

    mismatch = np.inf
    for iteration in range(1, max_iterations + 1):
        voltage = vm * np.exp(1j * va)
        current = ybus @ voltage
        residual = voltage * np.conj(current) - s_spec
        f = np.concatenate([residual[pq].real, residual[pq].imag])
        mismatch = np.max(np.abs(residual[pq])) if n_pq else 0.0
        if mismatch < tolerance:
            break

        diag_v = np.diag(voltage)
        diag_i = np.diag(current)
        diag_vnorm = np.diag(voltage / np.abs(voltage))
        ds_dvm = diag_v @ np.conj(ybus @ diag_vnorm) + np.conj(diag_i) @ diag_vnorm
        ds_dva = 1j * diag_v @ np.conj(diag_i - ybus @ diag_v)
        jacobian = np.block([
            [ds_dva[np.ix_(pq, pq)].real, ds_dvm[np.ix_(pq, pq)].real],
            [ds_dva[np.ix_(pq, pq)].imag, ds_dvm[np.ix_(pq, pq)].imag],
        ])
        step = -linalg.solve(jacobian, f)
        va[pq] += step[:n_pq]
        vm[pq] += step[n_pq:]
    else:
        raise PowerFlowError("Newton-Raphson did not converge", iterations=max_iterations,
                             mismatch=float(mismatch), network=net.name)

    voltage = vm * np.exp(1j * va)
    injected = voltage * np.conj(ybus @ voltage)
    parent, child = net.branch_ends
    branch_current = (voltage[parent] - voltage[child]) / net.impedance_pu
    p_inj = injected.real * net.base_mva
    logger.debug(f"Newton-Raphson on {net.name} converged in {iteration} iterations")
    return PowerFlowSolution(
        v=np.abs(voltage),
        p_inj=p_inj,
        q_inj=injected.imag * net.base_mva,
        loss=float(p_inj.sum()),
        converged=True,
        iterations=iteration,
        mismatch=float(mismatch),
        branch_current=branch_current,
    )
