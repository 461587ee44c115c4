"""Cyclical cosine tempering schedule."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Schedule", "beta_at", "beta_derivative", "DerivativeResult"]


@dataclass(frozen=True)
class Schedule:
    """Inverse-temperature schedule ``beta(t) = (1 + cos(2 pi t^r)) / 2``.

    Extended periodically with period one and clipped from below at
    ``floor``. ``floor=0`` gives the raw (unfloored) schedule, which is only
    proper on bounded state spaces.
    """

    L: int
    r: float = 1.0
    floor: float = 0.001

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"cycle length L must be a positive integer, got {self.L}")
        object.__setattr__(self, "L", int(self.L))
        if self.r < 1.0:
            raise ValueError(f"power r must be >= 1, got {self.r}")
        if not (0.0 <= self.floor < 1.0):
            raise ValueError(f"floor must lie in [0, 1), got {self.floor}")

    def beta(self, t: float) -> float:
        return beta_at(self, t)

    def beta_step(self, j: int) -> float:
        """Inverse temperature of step ``j``, i.e. ``beta(j / L)``.

        Computed from ``j mod L`` so that it is exact at every cycle end.
        """
        return float(self.beta_steps(np.array([j]))[0])

    def beta_steps(self, j) -> np.ndarray:
        """Vectorised :meth:`beta_step` over an integer array of step indices."""
        k = np.asarray(j, dtype=np.int64) % self.L
        out = _floored(k / self.L, self.r, self.floor)
        out[k == 0] = 1.0
        return out

    def cycle_betas(self) -> np.ndarray:
        """``beta_0, ..., beta_L`` (both ends equal one)."""
        return self.beta_steps(np.arange(self.L + 1))

    def to_dict(self) -> dict:
        return {"L": self.L, "r": self.r, "floor": self.floor}


def _floored(frac, r: float, floor: float) -> np.ndarray:
    # one array code path for scalars and vectors keeps them bit-identical
    frac = np.atleast_1d(np.asarray(frac, dtype=float))
    return np.maximum(0.5 * (1.0 + np.cos(2.0 * np.pi * frac ** r)), floor)


def beta_at(schedule: Schedule, t: float) -> float:
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    frac = t - math.floor(t)
    if frac == 0.0:
        return 1.0
    return float(_floored(frac, schedule.r, schedule.floor)[0])


@dataclass(frozen=True)
class DerivativeResult:
    value: float
    floored: bool

    def __float__(self):
        return self.value


def beta_derivative(schedule: Schedule, t: float) -> DerivativeResult:
    """Derivative of the unfloored schedule on (0, 1).

    ``floored`` is set when the raw value at ``t`` is at or below the floor,
    where the clipped schedule is flat and its true derivative is zero.
    """
    if not (0.0 < t < 1.0):
        raise ValueError(f"t must lie in (0, 1), got {t}")
    r = schedule.r
    value = -math.pi * r * t ** (r - 1.0) * math.sin(2.0 * math.pi * t ** r)
    raw = 0.5 * (1.0 + math.cos(2.0 * math.pi * t ** r))
    return DerivativeResult(value, floored=raw <= schedule.floor)
