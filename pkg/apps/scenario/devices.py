"""
Controllable reactive-power devices and their capability boxes.
"""
import math
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from apps.shared.exceptions import ContractViolation

IBER = "iber"
SVC = "svc"
DEVICE_KINDS = (IBER, SVC)


@dataclass(frozen=True)
class DeviceSpec:
    """Inverter-based energy resource or static var compensator at one bus."""
    kind: str
    bus: int
    s_mva: float = 0.0
    p_max: float = 0.0
    q_min: float = 0.0
    q_max: float = 0.0

    def __post_init__(self):
        if self.kind not in DEVICE_KINDS:
            raise ContractViolation("Unknown device kind", kind=self.kind)
        if self.kind == IBER and not (self.s_mva >= self.p_max >= 0.0):
            raise ContractViolation("IB-ER needs s_mva >= p_max >= 0", bus=self.bus,
                                    s_mva=self.s_mva, p_max=self.p_max)
        if self.kind == SVC and self.q_min > self.q_max:
            raise ContractViolation("SVC needs q_min <= q_max", bus=self.bus,
                                    q_min=self.q_min, q_max=self.q_max)

    @property
    def is_iber(self) -> bool:
        return self.kind == IBER


def iber_q_range(spec: DeviceSpec) -> Tuple[float, float]:
    """Reactive capability left by the active-power headroom, |Q| <= sqrt(S^2 - P_max^2)."""
    if spec.kind != IBER:
        raise ContractViolation("iber_q_range called for a non IB-ER device", kind=spec.kind)
    if spec.s_mva < spec.p_max:
        raise ContractViolation("Apparent power below active limit", s_mva=spec.s_mva, p_max=spec.p_max)
    q_cap = math.sqrt(spec.s_mva ** 2 - spec.p_max ** 2)
    return -q_cap, q_cap


def device_q_range(spec: DeviceSpec) -> Tuple[float, float]:
    if spec.is_iber:
        return iber_q_range(spec)
    return spec.q_min, spec.q_max


def device_limits(devices: Iterable[DeviceSpec]) -> Tuple[np.ndarray, np.ndarray]:
    """Stacked (low, high) reactive limits in MVar."""
    ranges = [device_q_range(spec) for spec in devices]
    if not ranges:
        return np.zeros(0), np.zeros(0)
    low, high = zip(*ranges)
    return np.asarray(low, dtype=float), np.asarray(high, dtype=float)
