"""
Pre-action and residual-action geometry.

Agents emit pre-actions in the open interval (-1, 1). A pre-action is either
mapped linearly onto the device box, or, for residual control, onto a
residual box around the reference action a_m that is clipped per step so
that a_m + a_r never leaves the device box.
"""
import logging
from dataclasses import dataclass

import numpy as np

from apps.shared.exceptions import ContractViolation

logger = logging.getLogger(__name__)

# Largest representable pre-action magnitude below 1.
PREACTION_LIMIT = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True, eq=False)
class ActionBox:
    a_low: np.ndarray
    a_high: np.ndarray

    def __post_init__(self):
        low = np.asarray(self.a_low, dtype=float)
        high = np.asarray(self.a_high, dtype=float)
        if low.shape != high.shape:
            raise ContractViolation("Box bounds differ in shape", low=low.shape, high=high.shape)
        if np.any(low >= high):
            raise ContractViolation("Box needs a_low < a_high", a_low=low.tolist(), a_high=high.tolist())
        object.__setattr__(self, 'a_low', low)
        object.__setattr__(self, 'a_high', high)

    @property
    def dim(self) -> int:
        return int(self.a_low.size)

    @property
    def center(self) -> np.ndarray:
        return (self.a_high + self.a_low) / 2

    @property
    def half_range(self) -> np.ndarray:
        return (self.a_high - self.a_low) / 2

    def contains(self, a) -> bool:
        a = np.asarray(a, dtype=float)
        return bool(np.all(a >= self.a_low) and np.all(a <= self.a_high))

    def scaled(self, factor: float) -> 'ActionBox':
        """Box enlarged (or shrunk) by ``factor`` about its center."""
        return ActionBox(self.center - factor * self.half_range, self.center + factor * self.half_range)


@dataclass(frozen=True, eq=False)
class ResidualBounds:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if np.any(lo > hi):
            raise ContractViolation("Residual bounds need lo <= hi", lo=lo.tolist(), hi=hi.tolist())
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)


@dataclass(frozen=True, eq=False)
class ResidualConfig:
    delta: np.ndarray
    lambda_scale: float

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=float)
        if not 0.0 <= self.lambda_scale <= 1.0:
            raise ContractViolation("lambda_scale must lie in [0, 1]", lambda_scale=self.lambda_scale)
        if np.any(delta < 0):
            raise ContractViolation("delta must be non-negative", delta=delta.tolist())
        object.__setattr__(self, 'delta', delta)

    @classmethod
    def from_lambda(cls, lambda_scale: float, box: ActionBox) -> 'ResidualConfig':
        """delta = lambda * delta_o with delta_o the half-range of every device."""
        if not 0.0 <= lambda_scale <= 1.0:
            raise ContractViolation("lambda_scale must lie in [0, 1]", lambda_scale=lambda_scale)
        return cls(delta=lambda_scale * box.half_range, lambda_scale=lambda_scale)


class ActionGuard:
    """Clamps reference actions into the device box and counts the events."""

    def __init__(self):
        self.clamp_events = 0

    def clamp(self, a_m, box: ActionBox) -> np.ndarray:
        a_m = np.asarray(a_m, dtype=float)
        clipped = np.clip(a_m, box.a_low, box.a_high)
        if np.any(clipped != a_m):
            self.clamp_events += 1
            excess = float(np.max(np.abs(clipped - a_m)))
            logger.warning(f"Reference action outside device box by {excess:.3e} MVar, clamped "
                           f"(event {self.clamp_events})")
        return clipped


def _check_preaction(a_p: np.ndarray, name: str):
    if not np.all(np.isfinite(a_p)) or np.any(np.abs(a_p) >= 1.0):
        raise ContractViolation(f"{name} must lie in the open interval (-1, 1)", value=np.asarray(a_p).tolist())


def linear_map(a_p, box: ActionBox) -> np.ndarray:
    a_p = np.asarray(a_p, dtype=float)
    _check_preaction(a_p, 'Pre-action')
    return box.half_range * a_p + box.center


def preaction_for(a, box: ActionBox) -> np.ndarray:
    """Inverse of linear_map."""
    return (np.asarray(a, dtype=float) - box.center) / box.half_range


def residual_bounds(a_m, cfg: ResidualConfig, box: ActionBox, guard: ActionGuard = None) -> ResidualBounds:
    a_m = (guard or ActionGuard()).clamp(a_m, box)
    delta = cfg.delta
    lo = -delta - np.minimum(a_m - delta - box.a_low, 0.0)
    hi = delta - np.maximum(a_m + delta - box.a_high, 0.0)
    lo, hi = _snap_inside(a_m, lo, hi, box)
    # Rounding can leave lo a hair above hi when the box edge sits inside the residual window.
    hi = np.maximum(hi, lo)
    return ResidualBounds(lo, hi)


def _snap_inside(a_m: np.ndarray, lo: np.ndarray, hi: np.ndarray, box: ActionBox, rounds: int = 8):
    """Move lo and hi inward until a_m + lo and a_m + hi round into the box."""
    for _ in range(rounds):
        low_out = a_m + lo < box.a_low
        high_out = a_m + hi > box.a_high
        if not (np.any(low_out) or np.any(high_out)):
            break
        lo = np.where(low_out, np.maximum(lo + (box.a_low - (a_m + lo)), np.nextafter(lo, np.inf)), lo)
        hi = np.where(high_out, np.minimum(hi - ((a_m + hi) - box.a_high), np.nextafter(hi, -np.inf)), hi)
    return lo, hi


def wide_bounds(a_m, box: ActionBox) -> ResidualBounds:
    """Residual space as large as the device box itself."""
    a_m = np.asarray(a_m, dtype=float)
    return ResidualBounds(*_snap_inside(a_m, box.a_low - a_m, box.a_high - a_m, box))


def map_residual(a_rp, rb: ResidualBounds) -> np.ndarray:
    a_rp = np.asarray(a_rp, dtype=float)
    _check_preaction(a_rp, 'Residual pre-action')
    k = (rb.hi - rb.lo) / 2
    b = (rb.hi + rb.lo) / 2
    return k * a_rp + b


def compose(a_m, a_r, box: ActionBox) -> np.ndarray:
    """Final action a_m + a_r; the clip only absorbs floating-point rounding."""
    return np.clip(np.asarray(a_m, dtype=float) + np.asarray(a_r, dtype=float), box.a_low, box.a_high)


FULL = 'full'
WIDE = 'wide'
RESIDUAL = 'residual'
SPACE_KINDS = (FULL, WIDE, RESIDUAL)


class ResidualActionSpace:
    """Turns (a_m, a_rp) into an executed action for one experiment class.

    ``full`` ignores the reference and maps onto the whole device box,
    ``wide`` keeps a box-sized residual space around a_m, ``residual``
    applies the clipped residual bounds of ``cfg``.
    """

    def __init__(self, box: ActionBox, kind: str = RESIDUAL, cfg: ResidualConfig = None):
        if kind not in SPACE_KINDS:
            raise ContractViolation("Unknown action space kind", kind=kind)
        if kind == RESIDUAL and cfg is None:
            raise ContractViolation("Residual action space needs a ResidualConfig")
        self.box = box
        self.kind = kind
        self.cfg = cfg
        self.guard = ActionGuard()

    def bounds(self, a_m) -> ResidualBounds:
        if self.kind == RESIDUAL:
            return residual_bounds(a_m, self.cfg, self.box, self.guard)
        return wide_bounds(self.guard.clamp(a_m, self.box), self.box)

    def reference(self, a_m) -> np.ndarray:
        if self.kind == FULL or a_m is None:
            return np.zeros(self.box.dim)
        return self.guard.clamp(a_m, self.box)

    def final_action(self, a_m, a_rp) -> np.ndarray:
        if self.kind == FULL:
            action = linear_map(a_rp, self.box)
        else:
            a_m = self.reference(a_m)
            action = compose(a_m, map_residual(a_rp, self.bounds(a_m)), self.box)
        if not self.box.contains(action):
            raise ContractViolation("Executed action left the device box", action=action.tolist())
        return action
