"""
Day loop shared by every experiment class.

Each simulated day runs the training pass (observe, reference action,
residual pre-action, execute, store, update) followed by a deterministic
evaluation pass over the same day. Without an agent the loop executes the
reference action directly, which is how the model-based baselines run.
"""
import logging
from typing import Callable, Iterable, List, Optional

import numpy as np

from apps.actionspace.mapping import ResidualActionSpace
from apps.harness.metrics import MetricsRow
from apps.sac_agent.agent import EVAL, TRAIN, SacAgent
from apps.sac_agent.buffer import MdpTransition
from apps.shared.exceptions import VoltVarLabError
from apps.vvc_env.env import RewardBreakdown, VoltVarEnv

logger = logging.getLogger(__name__)

ReferenceProvider = Callable[[int, int], np.ndarray]
RowSink = Callable[[List[MetricsRow]], None]

NAN = float('nan')


def _action(agent: Optional[SacAgent], space: ResidualActionSpace, s: np.ndarray, a_m, mode: str):
    """(executed action, stored pre-action, reference actually used)."""
    a_m = space.reference(a_m)
    if agent is None:
        return a_m, None, a_m
    a_rp = agent.act(s, mode)
    return space.final_action(a_m, a_rp), a_rp, a_m


def evaluate_day(env: VoltVarEnv, agent: Optional[SacAgent], space: ResidualActionSpace,
                 reference: Optional[ReferenceProvider], day: int) -> List[RewardBreakdown]:
    """Deterministic pass over one day; the setpoints carry over from the previous pass."""
    state = env.reset(day, q_c=env.q_c)
    rewards = []
    for step in range(env.scenario.steps_per_day):
        a_m = reference(day, step) if reference else None
        action, _, _ = _action(agent, space, env.features(state), a_m, EVAL)
        reward, state, _ = env.step(action)
        rewards.append(reward)
    return rewards


def _rows(day: int, pending: list, tests: List[RewardBreakdown]) -> List[MetricsRow]:
    rows = []
    for k, (step, train, critic_loss, alpha, norm) in enumerate(pending):
        test = tests[k] if k < len(tests) else None
        rows.append(MetricsRow(
            day=day,
            step=step,
            train_reward=train.r,
            test_reward=test.r if test else NAN,
            test_ploss=test.loss if test else NAN,
            test_violation=test.r_v if test else NAN,
            critic_loss=critic_loss,
            alpha=alpha,
            reference_action_norm=norm,
        ))
    return rows


def train_day_loop(env: VoltVarEnv, test_env: VoltVarEnv, agent: Optional[SacAgent],
                   space: ResidualActionSpace, reference: Optional[ReferenceProvider],
                   days: Iterable[int], sink: RowSink) -> int:
    """Run the given days and hand one MetricsRow per environment step to ``sink``.

    Rows of a day are emitted after its evaluation pass. A failure mid-day
    still emits the finished training steps, with NaN test columns, before
    the error propagates.
    """
    steps = 0
    for day in days:
        pending = []
        try:
            state = env.reset(day, q_c=env.q_c)
            for step in range(env.scenario.steps_per_day):
                s = env.features(state)
                a_m = reference(day, step) if reference else None
                action, a_rp, used = _action(agent, space, s, a_m, TRAIN)
                reward, state, done = env.step(action)
                critic_loss, alpha = NAN, NAN
                if agent is not None:
                    agent.record(MdpTransition(s, a_rp, reward.r * agent.params.reward_scale,
                                               env.features(state), done))
                    if agent.ready():
                        stats = [agent.update() for _ in range(agent.params.updates_per_step)]
                        critic_loss = float(np.mean([item.critic_loss for item in stats]))
                    alpha = agent.alpha
                norm = float(np.linalg.norm(used))
                pending.append((step, reward, critic_loss, alpha, norm))
                steps += 1
            tests = evaluate_day(test_env, agent, space, reference, day)
        except VoltVarLabError:
            logger.error(f"Day {day} aborted after {len(pending)} steps", exc_info=True)
            sink(_rows(day, pending, []))
            raise
        rows = _rows(day, pending, tests)
        sink(rows)
        logger.info(f"Day {day}: train {sum(r.train_reward for r in rows):.4f}, "
                    f"test {sum(r.test_reward for r in rows):.4f}, "
                    f"loss {sum(r.test_ploss for r in rows):.4f} MW, "
                    f"violation {sum(r.test_violation for r in rows):.5f}")
    return steps
