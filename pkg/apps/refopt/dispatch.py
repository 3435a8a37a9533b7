"""
Model-based reactive dispatch.

Maximises r_p + c_v * r_v over the device box on a given network model by
projected gradient ascent. Gradients are central finite differences and
every perturbed point of every start is solved in one batched sweep; the step
length is picked per start from a geometric ladder of candidates, again in one
batched sweep.
"""
import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Tuple

import numpy as np
import pandas as pd

from apps.actionspace.mapping import ActionBox
from apps.gridflow.network import Injections, Network, scale_impedances
from apps.gridflow.sweep import solve_power_flow_batch
from apps.scenario.profiles import ScenarioSet, device_boxes, exogenous_injections
from apps.shared.exceptions import ContractViolation
from apps.vvc_env.env import VOLTAGE_PENALTY, VoltageLimits, apply_setpoints, batch_rewards

logger = logging.getLogger(__name__)

FD_STEP = 1e-4
STEP_TOLERANCE = 1e-5
MAX_ITERATIONS = 200
RANDOM_STARTS = 4
LADDER_SIZE = 25


@dataclass(frozen=True, eq=False)
class DispatchProblem:
    model: Network
    box: ActionBox
    injections: Injections
    limits: VoltageLimits = field(default_factory=VoltageLimits)
    c_v: float = VOLTAGE_PENALTY
    seed: int = 0

    def __post_init__(self):
        if self.box.dim != len(self.model.devices):
            raise ContractViolation("Box dimension does not match the model devices",
                                    box=self.box.dim, devices=len(self.model.devices))
        if self.injections.p.shape != (self.model.n_bus,):
            raise ContractViolation("Injections do not match the model", n_bus=self.model.n_bus)


@dataclass(frozen=True, eq=False)
class DispatchSolution:
    a_m: np.ndarray
    objective: float
    iterations: int
    converged: bool


def evaluate_actions(prob: DispatchProblem, actions) -> np.ndarray:
    """Objective for every row of ``actions``; rows whose sweep fails score -inf."""
    p, q = apply_setpoints(prob.model, prob.injections, actions)
    batch = solve_power_flow_batch(prob.model, p, q)
    reward, _, _ = batch_rewards(prob.model, batch, prob.limits, prob.c_v)
    return np.where(batch.converged & np.isfinite(reward), reward, -np.inf)


def _starts(prob: DispatchProblem) -> np.ndarray:
    rng = np.random.default_rng(prob.seed)
    random = rng.uniform(prob.box.a_low, prob.box.a_high, size=(RANDOM_STARTS, prob.box.dim))
    return np.vstack([prob.box.center[None, :], random])


def _gradients(prob: DispatchProblem, points: np.ndarray):
    """Objective and projected central-difference gradient at each point."""
    count, dim = points.shape
    eye = np.eye(dim) * FD_STEP
    upper = np.clip(points[:, None, :] + eye[None], prob.box.a_low, prob.box.a_high)
    lower = np.clip(points[:, None, :] - eye[None], prob.box.a_low, prob.box.a_high)
    rows = np.concatenate([points, upper.reshape(-1, dim), lower.reshape(-1, dim)])
    values = evaluate_actions(prob, rows)
    base = values[:count]
    plus = values[count:count + count * dim].reshape(count, dim)
    minus = values[count + count * dim:].reshape(count, dim)
    spread = np.diagonal(upper - lower, axis1=1, axis2=2)
    with np.errstate(invalid='ignore', divide='ignore'):
        grad = (plus - minus) / spread
    grad[~np.isfinite(grad)] = 0.0
    return base, grad


def _line_search(prob: DispatchProblem, points: np.ndarray, grads: np.ndarray):
    """Best point on a ladder of step lengths along each projected gradient.

    The ladder starts with a zero step so that the current point is scored
    in the same sweep as its candidates.
    """
    count, dim = points.shape
    span = 2.0 * prob.box.half_range.max()
    top = span / np.maximum(np.abs(grads).max(axis=1), 1e-12)
    ladder = top[:, None] * 0.5 ** np.arange(LADDER_SIZE)[None, :]
    ladder = np.hstack([np.zeros((count, 1)), ladder])
    trial = points[:, None, :] + ladder[:, :, None] * grads[:, None, :]
    trial = np.clip(trial, prob.box.a_low, prob.box.a_high)
    values = evaluate_actions(prob, trial.reshape(-1, dim)).reshape(count, LADDER_SIZE + 1)
    pick = np.argmax(values, axis=1)
    improved = (pick > 0) & (values[np.arange(count), pick] > values[:, 0])
    moved = np.where(improved[:, None], trial[np.arange(count), pick], points)
    return moved, values[np.arange(count), np.where(improved, pick, 0)], improved


def solve_dispatch(prob: DispatchProblem, max_iterations: int = MAX_ITERATIONS,
                   step_tolerance: float = STEP_TOLERANCE) -> DispatchSolution:
    points = _starts(prob)
    values, grads = _gradients(prob, points)
    alive = np.isfinite(values)
    if not np.any(alive):
        logger.error(f"Dispatch on {prob.model.name}: power flow failed at every start")
        return DispatchSolution(a_m=np.clip(np.zeros(prob.box.dim), prob.box.a_low, prob.box.a_high),
                                objective=-np.inf, iterations=0, converged=False)

    done = ~alive
    converged = np.zeros(len(points), dtype=bool)
    iterations = np.zeros(len(points), dtype=int)
    for _ in range(max_iterations):
        active = np.flatnonzero(~done)
        if active.size == 0:
            break
        moved, new_values, improved = _line_search(prob, points[active], grads[active])
        step = np.abs(moved - points[active]).max(axis=1)
        points[active] = moved
        values[active] = new_values
        iterations[active] += 1
        finished = ~improved | (step < step_tolerance)
        converged[active[finished]] = True
        done[active[finished]] = True
        still = active[~finished]
        if still.size:
            values[still], grads[still] = _gradients(prob, points[still])

    best = int(np.argmax(np.where(alive, values, -np.inf)))
    a_m = np.clip(points[best], prob.box.a_low, prob.box.a_high)
    objective = float(evaluate_actions(prob, a_m[None, :])[0])
    logger.debug(f"Dispatch on {prob.model.name}: objective {objective:.6f} after {iterations[best]} "
                 f"iterations (start {best}, converged={converged[best]})")
    return DispatchSolution(a_m=a_m, objective=objective, iterations=int(iterations[best]),
                            converged=bool(converged[best]))


def dispatch_problem(model: Network, scenario: ScenarioSet, day: int, step: int,
                     limits: VoltageLimits = None, c_v: float = VOLTAGE_PENALTY, seed: int = 0,
                     box: Optional[ActionBox] = None) -> DispatchProblem:
    """Problem for one scenario step; the model sees the true loads and PV output."""
    return DispatchProblem(
        model=model,
        box=box or device_boxes(model.devices),
        injections=exogenous_injections(model, scenario, day, step),
        limits=limits or VoltageLimits(),
        c_v=c_v,
        seed=seed,
    )


@dataclass(frozen=True)
class ReferenceCheck:
    residual_norm: float
    optimal_norm: float
    holds: bool


def residual_norm_check(a_m, a_star, tolerance: float = 0.0) -> ReferenceCheck:
    """Norms of a_r* = a* - a_m and a*; the reference condition is 0 < |a_r*| < |a*|."""
    a_m = np.asarray(a_m, dtype=float)
    a_star = np.asarray(a_star, dtype=float)
    residual = float(np.linalg.norm(a_star - a_m))
    optimal = float(np.linalg.norm(a_star))
    return ReferenceCheck(residual, optimal, tolerance < residual < optimal - tolerance)


@dataclass(frozen=True, eq=False)
class ReferenceSweep:
    table: pd.DataFrame

    @property
    def fraction(self) -> float:
        return float(self.table['holds'].mean()) if len(self.table) else 0.0


def reference_condition_sweep(net: Network, scenario: ScenarioSet, factor: float,
                              steps: Iterable[Tuple[int, int]], limits: VoltageLimits = None,
                              c_v: float = VOLTAGE_PENALTY, seed: int = 0) -> ReferenceSweep:
    """Solve accurate and reference dispatch on each (day, step) and test the reference condition."""
    reference = scale_impedances(net, factor)
    records = []
    for day, step in steps:
        a_star = solve_dispatch(dispatch_problem(net, scenario, day, step, limits, c_v, seed))
        a_m = solve_dispatch(dispatch_problem(reference, scenario, day, step, limits, c_v, seed))
        check = residual_norm_check(a_m.a_m, a_star.a_m)
        records.append({
            'day': day,
            'step': step,
            'residual_norm': check.residual_norm,
            'optimal_norm': check.optimal_norm,
            'holds': check.holds,
            'converged': a_star.converged and a_m.converged,
        })
    sweep = ReferenceSweep(pd.DataFrame.from_records(
        records, columns=['day', 'step', 'residual_norm', 'optimal_norm', 'holds', 'converged']))
    logger.info(f"Reference condition on {net.name} x{factor:g}: {sweep.fraction:.1%} of {len(sweep.table)} steps")
    return sweep
