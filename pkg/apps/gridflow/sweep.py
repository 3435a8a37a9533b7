"""
Backward/forward sweep power flow for radial networks.

Voltages are solved in per-unit with the slack bus fixed at 1.0 p.u.; all
public quantities are returned in MW / MVar.
"""
import logging
from dataclasses import dataclass

import numpy as np

from apps.gridflow.network import Injections, Network
from apps.shared.exceptions import ContractViolation, PowerFlowError

logger = logging.getLogger(__name__)

TOLERANCE = 1e-8
MAX_ITERATIONS = 200
DIVERGENCE_LIMIT = 1e3


@dataclass(frozen=True)
class PowerFlowSolution:
    v: np.ndarray
    p_inj: np.ndarray
    q_inj: np.ndarray
    loss: float
    converged: bool
    iterations: int
    mismatch: float
    branch_current: np.ndarray  # p.u., parent to child


@dataclass(frozen=True)
class BatchFlowSolution:
    """k sweeps solved together; row i belongs to the i-th injection vector."""
    v: np.ndarray
    p_inj: np.ndarray
    q_inj: np.ndarray
    loss: np.ndarray
    converged: np.ndarray
    iterations: int
    mismatch: np.ndarray
    branch_current: np.ndarray

    def row(self, i: int) -> PowerFlowSolution:
        return PowerFlowSolution(
            v=self.v[i],
            p_inj=self.p_inj[i],
            q_inj=self.q_inj[i],
            loss=float(self.loss[i]),
            converged=bool(self.converged[i]),
            iterations=self.iterations,
            mismatch=float(self.mismatch[i]),
            branch_current=self.branch_current[i],
        )


def _node_injections(net: Network, voltage: np.ndarray):
    """Branch currents implied by the voltages and the resulting bus injections (p.u.)."""
    parent, child = net.branch_ends
    current = (voltage[:, parent] - voltage[:, child]) / net.impedance_pu
    injected = voltage * np.conj(current @ net.incidence)
    return current, injected


def solve_power_flow_batch(net: Network, p: np.ndarray, q: np.ndarray,
                           tolerance: float = TOLERANCE,
                           max_iterations: int = MAX_ITERATIONS) -> BatchFlowSolution:
    p = np.atleast_2d(np.asarray(p, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    if p.shape != q.shape or p.shape[1] != net.n_bus:
        raise ContractViolation("Injection arrays do not match the bus count",
                                shape_p=p.shape, shape_q=q.shape, n_bus=net.n_bus)
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
        raise ContractViolation("Injections must be finite")

    rows = p.shape[0]
    s_spec = (p + 1j * q) / net.base_mva
    s_spec[:, net.slack_index] = 0.0
    non_slack = net.non_slack
    bibc = net.bibc
    z = net.impedance_pu

    voltage = np.ones((rows, net.n_bus), dtype=complex)
    mismatch = np.full(rows, np.inf)
    iterations = 0
    previous = np.full(rows, np.inf)
    growth = np.zeros(rows, dtype=int)

    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        for iterations in range(1, max_iterations + 1):
            drawn = -np.conj(s_spec[:, non_slack] / voltage[:, non_slack])
            branch_current = drawn @ bibc.T
            voltage[:, non_slack] = 1.0 - (branch_current * z) @ bibc
            _, injected = _node_injections(net, voltage)
            error = np.abs(injected[:, non_slack] - s_spec[:, non_slack])
            mismatch = error.max(axis=1) if error.size else np.zeros(rows)
            growth = np.where(mismatch > previous, growth + 1, 0)
            previous = mismatch
            active = mismatch >= tolerance
            diverged = ~np.isfinite(mismatch) | (mismatch > DIVERGENCE_LIMIT) | (growth > 20)
            if not np.any(active & ~diverged):
                break

    converged = mismatch < tolerance
    current, injected = _node_injections(net, voltage)
    p_inj = injected.real * net.base_mva
    q_inj = injected.imag * net.base_mva
    loss = p_inj.sum(axis=1)
    return BatchFlowSolution(
        v=np.abs(voltage),
        p_inj=p_inj,
        q_inj=q_inj,
        loss=loss,
        converged=converged,
        iterations=iterations,
        mismatch=mismatch,
        branch_current=current,
    )


def solve_power_flow(net: Network, inj: Injections, raise_on_failure: bool = True,
                     tolerance: float = TOLERANCE,
                     max_iterations: int = MAX_ITERATIONS) -> PowerFlowSolution:
    """Solve one operating point.

    A non-converged sweep raises PowerFlowError carrying the last mismatch
    unless ``raise_on_failure`` is False, in which case the flagged
    solution is returned for inspection.
    """
    solution = solve_power_flow_batch(net, inj.p, inj.q, tolerance, max_iterations).row(0)
    if not solution.converged and raise_on_failure:
        logger.error(f"Power flow on {net.name} failed after {solution.iterations} iterations, "
                     f"mismatch {solution.mismatch:.3e}")
        kind = "diverged" if not np.isfinite(solution.mismatch) or solution.mismatch > DIVERGENCE_LIMIT \
            else "did not converge"
        raise PowerFlowError(f"Power flow {kind}", iterations=solution.iterations,
                             mismatch=solution.mismatch, network=net.name)
    return solution


def total_loss(sol: PowerFlowSolution) -> float:
    """Total active loss in MW, the sum of all bus injections."""
    if not sol.converged:
        raise ContractViolation("total_loss needs a converged solution", mismatch=sol.mismatch)
    return float(np.sum(sol.p_inj))


def branch_losses(net: Network, sol: PowerFlowSolution) -> np.ndarray:
    """I^2 r per branch in MW."""
    resistance = net.impedance_pu.real
    return np.abs(sol.branch_current) ** 2 * resistance * net.base_mva
