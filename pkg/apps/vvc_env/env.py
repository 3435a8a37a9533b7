"""
Single-period Volt-Var environment.

Each step applies reactive setpoints on top of the step's exogenous loads and
PV output, solves the accurate network model and scores the result as
r = r_p + c_v * r_v.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from apps.actionspace.mapping import ActionBox
from apps.gridflow.network import Injections, Network
from apps.gridflow.sweep import BatchFlowSolution, PowerFlowSolution, solve_power_flow
from apps.scenario.profiles import ScenarioSet, device_boxes, exogenous_injections
from apps.shared.exceptions import ContractViolation

logger = logging.getLogger(__name__)

VOLTAGE_PENALTY = 50.0
FEATURE_VOLTAGE_GAIN = 10.0


@dataclass(frozen=True)
class VoltageLimits:
    v_min: float = 0.95
    v_max: float = 1.05

    def __post_init__(self):
        if not 0.0 < self.v_min < self.v_max:
            raise ContractViolation("Voltage limits need 0 < v_min < v_max", v_min=self.v_min, v_max=self.v_max)


@dataclass(frozen=True, eq=False)
class State:
    p: np.ndarray
    q: np.ndarray
    v: np.ndarray
    q_c: np.ndarray

    @property
    def size(self) -> int:
        return self.p.size + self.q.size + self.v.size + self.q_c.size


@dataclass(frozen=True)
class RewardBreakdown:
    r_p: float
    r_v: float
    r: float
    c_v: float
    loss: float = 0.0

    @classmethod
    def build(cls, loss: float, r_v: float, c_v: float) -> 'RewardBreakdown':
        r_p = -float(loss)
        return cls(r_p=r_p, r_v=float(r_v), r=r_p + c_v * float(r_v), c_v=c_v, loss=float(loss))


def violation_rate(v, lim: VoltageLimits):
    """-sum of per-bus excursions outside [v_min, v_max]; reduces over the last axis."""
    v = np.asarray(v, dtype=float)
    excess = np.maximum(v - lim.v_max, 0.0) + np.maximum(lim.v_min - v, 0.0)
    total = -excess.sum(axis=-1)
    return float(total) if np.ndim(total) == 0 else total


def apply_setpoints(net: Network, inj: Injections, q_c) -> Tuple[np.ndarray, np.ndarray]:
    """Add device reactive output to exogenous injections.

    ``q_c`` is (n_device,) or (k, n_device); the result is (k, n_bus) p and q.
    """
    q_c = np.atleast_2d(np.asarray(q_c, dtype=float))
    rows = q_c.shape[0]
    p = np.repeat(inj.p[None, :], rows, axis=0)
    q = np.repeat(inj.q[None, :], rows, axis=0)
    np.add.at(q, (slice(None), net.device_index), q_c)
    return p, q


def batch_rewards(net: Network, batch: BatchFlowSolution, lim: VoltageLimits, c_v: float):
    """Vectorised reward r = r_p + c_v * r_v for every row of a batch solve."""
    r_v = violation_rate(batch.v[:, net.non_slack], lim)
    r_p = -batch.loss
    return r_p + c_v * r_v, r_p, r_v


def features(state: State, net: Network, box: ActionBox) -> np.ndarray:
    """Normalised learning input: p, q per base MVA, (v - 1) x 10, q_c per device capacity."""
    capacity = np.maximum(np.abs(box.a_low), np.abs(box.a_high))
    return np.concatenate([
        state.p / net.base_mva,
        state.q / net.base_mva,
        (state.v - 1.0) * FEATURE_VOLTAGE_GAIN,
        state.q_c / capacity,
    ])


class VoltVarEnv:
    """Steps through a ScenarioSet day by day on the accurate network model.

    The cursor moves step by step; ``done`` is raised on the last step of
    each day and the following state belongs to the next day's first step.
    """

    def __init__(self, net: Network, scenario: ScenarioSet, limits: VoltageLimits = None,
                 c_v: float = VOLTAGE_PENALTY):
        if scenario.pv_output.shape[2] != len(net.devices):
            raise ContractViolation("Scenario device count does not match the network",
                                    scenario=scenario.pv_output.shape[2], network=len(net.devices))
        self.net = net
        self.scenario = scenario
        self.limits = limits or VoltageLimits()
        self.c_v = c_v
        self.box = device_boxes(net.devices)
        self.day = 0
        self.step_index = 0
        self.finished = False
        self.q_c = self._initial_setpoints()
        self.state: Optional[State] = None

    @property
    def n_device(self) -> int:
        return self.box.dim

    @property
    def feature_size(self) -> int:
        return 3 * self.net.n_bus + self.n_device

    def _initial_setpoints(self) -> np.ndarray:
        return np.clip(np.zeros(self.box.dim), self.box.a_low, self.box.a_high)

    def injections(self, day: int, step: int, q_c) -> Injections:
        inj = exogenous_injections(self.net, self.scenario, day, step)
        p, q = apply_setpoints(self.net, inj, q_c)
        return Injections(p[0], q[0])

    def solve(self, day: int, step: int, q_c) -> PowerFlowSolution:
        return solve_power_flow(self.net, self.injections(day, step, q_c))

    def observe(self, day: int, step: int, q_c=None) -> State:
        q_c = self.q_c if q_c is None else np.asarray(q_c, dtype=float)
        sol = self.solve(day, step, q_c)
        return State(p=sol.p_inj, q=sol.q_inj, v=sol.v, q_c=np.array(q_c, dtype=float))

    def reset(self, day: int = 0, q_c=None) -> State:
        self.scenario.check_index(day, 0)
        self.day, self.step_index, self.finished = day, 0, False
        self.q_c = self._initial_setpoints() if q_c is None else np.asarray(q_c, dtype=float)
        self.state = self.observe(day, 0)
        return self.state

    def features(self, state: State = None) -> np.ndarray:
        return features(state or self.state, self.net, self.box)

    def evaluate(self, day: int, step: int, action) -> RewardBreakdown:
        """Reward of ``action`` at (day, step) without moving the cursor."""
        action = self._checked(action)
        sol = self.solve(day, step, action)
        return RewardBreakdown.build(sol.loss, violation_rate(sol.v[self.net.non_slack], self.limits), self.c_v)

    def _checked(self, action) -> np.ndarray:
        action = np.asarray(action, dtype=float)
        if action.shape != (self.n_device,):
            raise ContractViolation("Action has the wrong shape", shape=action.shape, n_device=self.n_device)
        if not self.box.contains(action):
            raise ContractViolation("Action outside device box", action=action.tolist(),
                                    a_low=self.box.a_low.tolist(), a_high=self.box.a_high.tolist())
        return action

    def _next_position(self) -> Tuple[int, int]:
        if self.step_index + 1 < self.scenario.steps_per_day:
            return self.day, self.step_index + 1
        if self.day + 1 < self.scenario.days:
            return self.day + 1, 0
        return self.day, self.step_index

    def step(self, action) -> Tuple[RewardBreakdown, State, bool]:
        if self.finished:
            raise ContractViolation("Scenario exhausted, call reset first")
        if self.state is None:
            self.reset(self.day)
        reward = self.evaluate(self.day, self.step_index, action)
        done = self.step_index == self.scenario.steps_per_day - 1
        self.q_c = np.array(action, dtype=float)
        day, step = self._next_position()
        self.finished = (day, step) == (self.day, self.step_index)
        self.state = self.observe(day, step)
        logger.debug(f"day {self.day} step {self.step_index}: r={reward.r:.5f} "
                     f"loss={reward.loss:.5f} r_v={reward.r_v:.5f}")
        self.day, self.step_index = day, step
        return reward, self.state, done
