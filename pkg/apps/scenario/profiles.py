"""
Daily load and PV profiles with multiplicative uniform noise.
"""
import hashlib
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from apps.actionspace.mapping import ActionBox
from apps.gridflow.network import Injections, Network
from apps.scenario.devices import DeviceSpec, device_limits
from apps.shared.exceptions import ContractViolation

logger = logging.getLogger(__name__)

STEPS_PER_DAY = 96
NOISE_AMPLITUDE = 0.2
LOAD_PEAK_STEP = 76


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """Exogenous inputs for ``days`` x ``steps_per_day`` control steps.

    load_scale has shape (days, steps, n_bus); pv_output has shape
    (days, steps, n_device) in MW and is zero for SVCs.
    """
    days: int
    steps_per_day: int
    load_scale: np.ndarray
    pv_output: np.ndarray
    seed: int
    noise_amplitude: float = NOISE_AMPLITUDE

    @property
    def total_steps(self) -> int:
        return self.days * self.steps_per_day

    def check_index(self, day: int, step: int):
        if not (0 <= day < self.days and 0 <= step < self.steps_per_day):
            raise ContractViolation("Scenario index out of range", day=day, step=step,
                                    days=self.days, steps_per_day=self.steps_per_day)

    def day_digest(self, day: int) -> str:
        """Short SHA-256 of one day's load multipliers and PV output."""
        self.check_index(day, 0)
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(self.load_scale[day], dtype=float).tobytes())
        digest.update(np.ascontiguousarray(self.pv_output[day], dtype=float).tobytes())
        return digest.hexdigest()[:16]


def load_curve(steps_per_day: int = STEPS_PER_DAY) -> np.ndarray:
    """Between 0.6 and 1.0, peaking in the evening."""
    t = np.arange(steps_per_day)
    peak = LOAD_PEAK_STEP * steps_per_day / STEPS_PER_DAY
    return 0.8 + 0.2 * np.sin(2 * np.pi * (t - peak) / steps_per_day + np.pi / 2)


def pv_curve(steps_per_day: int = STEPS_PER_DAY) -> np.ndarray:
    """Half sine from 06:00 to 18:00, peaking at noon."""
    t = np.arange(steps_per_day)
    quarter = steps_per_day / 4
    return np.maximum(0.0, np.sin(np.pi * (t - quarter) / (2 * quarter)))


def generate_profiles(net: Network, devices: Sequence[DeviceSpec], days: int, seed: int,
                      steps_per_day: int = STEPS_PER_DAY,
                      noise_amplitude: float = NOISE_AMPLITUDE) -> ScenarioSet:
    if days < 1:
        raise ContractViolation("Scenario needs at least one day", days=days)
    if steps_per_day < 1:
        raise ContractViolation("Scenario needs at least one step per day", steps_per_day=steps_per_day)
    if not 0.0 <= noise_amplitude < 1.0:
        raise ContractViolation("Noise amplitude must lie in [0, 1)", noise_amplitude=noise_amplitude)
    for spec in devices:
        if spec.bus not in net.bus_index:
            raise ContractViolation("Device references an unknown bus", bus=spec.bus)

    low, high = 1.0 - noise_amplitude, 1.0 + noise_amplitude
    load_noise = np.empty((days, steps_per_day, net.n_bus))
    pv_noise = np.empty((days, steps_per_day, len(devices)))
    # day d draws from the d-th child stream only, so it does not depend on ``days``
    for day, child in enumerate(np.random.SeedSequence(seed).spawn(days)):
        rng = np.random.default_rng(child)
        load_noise[day] = rng.uniform(low, high, size=(steps_per_day, net.n_bus))
        pv_noise[day] = rng.uniform(low, high, size=(steps_per_day, len(devices)))

    load_scale = load_curve(steps_per_day)[None, :, None] * load_noise
    p_max = np.array([spec.p_max if spec.is_iber else 0.0 for spec in devices], dtype=float)
    pv_output = pv_curve(steps_per_day)[None, :, None] * p_max[None, None, :] * pv_noise
    pv_output = np.clip(pv_output, 0.0, p_max[None, None, :])

    logger.info(f"Generated {days} day(s) of profiles for {net.name} with seed {seed}")
    return ScenarioSet(
        days=days,
        steps_per_day=steps_per_day,
        load_scale=load_scale,
        pv_output=pv_output,
        seed=seed,
        noise_amplitude=noise_amplitude,
    )


def exogenous_injections(net: Network, scenario: ScenarioSet, day: int, step: int) -> Injections:
    """Bus injections from loads and PV for one step, device reactive output excluded."""
    scenario.check_index(day, step)
    scale = scenario.load_scale[day, step]
    p = -net.load_p * scale
    q = -net.load_q * scale
    np.add.at(p, net.device_index, scenario.pv_output[day, step])
    return Injections(p, q)


def device_boxes(devices: Sequence[DeviceSpec]) -> ActionBox:
    low, high = device_limits(devices)
    return ActionBox(low, high)
