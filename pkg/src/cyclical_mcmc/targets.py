"""Gaussian-mixture targets and their energy functions.

A target is a normalized mixture of isotropic Gaussians, optionally
restricted to an axis-aligned box. The energy includes the Gaussian
normalizing constants, so ``exp(-energy)`` is the mixture density itself.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "MixtureComponent",
    "Target",
    "PRESETS",
    "build_preset",
    "mixture",
    "energy",
    "tempered_log_density",
    "two_mode_target",
]

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class MixtureComponent:
    weight: float
    mean: tuple
    variance: float

    def __post_init__(self):
        object.__setattr__(self, "mean", tuple(float(m) for m in np.atleast_1d(self.mean)))
        if not (0.0 < self.weight <= 1.0):
            raise ValueError(f"component weight must lie in (0, 1], got {self.weight}")
        if not self.variance > 0.0:
            raise ValueError(f"component variance must be positive, got {self.variance}")


@dataclass(frozen=True)
class Target:
    """Normalized isotropic Gaussian mixture on R^d or on a box.

    Parameters
    ----------
    components : sequence of MixtureComponent
        Weights must sum to one.
    domain : (lower, upper), optional
        Per-axis bounds of the state space. Points outside have zero density.
    name : str, optional
        Preset name, carried into run metadata.
    """

    components: tuple
    domain: Optional[tuple] = None
    name: str = "custom"
    _arrays: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a target needs at least one component")
        object.__setattr__(self, "components", comps)
        dims = {len(c.mean) for c in comps}
        if len(dims) != 1:
            raise ValueError(f"inconsistent component dimensions: {sorted(dims)}")
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"component weights sum to {total!r}, expected 1")
        d = dims.pop()
        if self.domain is not None:
            lo = np.broadcast_to(np.asarray(self.domain[0], dtype=float), (d,)).copy()
            hi = np.broadcast_to(np.asarray(self.domain[1], dtype=float), (d,)).copy()
            if np.any(hi <= lo):
                raise ValueError("domain upper bounds must exceed lower bounds")
            object.__setattr__(self, "domain", (tuple(lo), tuple(hi)))
            for c in comps:
                m = np.asarray(c.mean)
                if np.any(m < lo) or np.any(m > hi):
                    raise ValueError(f"component mean {c.mean} lies outside the domain")

        w = np.array([c.weight for c in comps])
        means = np.array([c.mean for c in comps], dtype=float)
        var = np.array([c.variance for c in comps])
        arrays = {
            "weights": w,
            "means": means,
            "variances": var,
            # log(w_i) - (d/2) log(2 pi s_i^2): per-component log normalizer
            "log_coef": np.log(w) - 0.5 * d * np.log(2.0 * np.pi * var),
            "inv2var": 0.5 / var,
        }
        for a in arrays.values():
            a.setflags(write=False)
        object.__setattr__(self, "_arrays", arrays)

    @property
    def dimension(self) -> int:
        return len(self.components[0].mean)

    @property
    def weights(self) -> np.ndarray:
        return self._arrays["weights"]

    @property
    def means(self) -> np.ndarray:
        return self._arrays["means"]

    @property
    def variances(self) -> np.ndarray:
        return self._arrays["variances"]

    @property
    def log_coef(self) -> np.ndarray:
        return self._arrays["log_coef"]

    @property
    def inv2var(self) -> np.ndarray:
        return self._arrays["inv2var"]

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Domain as arrays, with infinite bounds when unrestricted."""
        d = self.dimension
        if self.domain is None:
            return np.full(d, -np.inf), np.full(d, np.inf)
        return np.array(self.domain[0]), np.array(self.domain[1])

    def in_domain(self, point) -> bool:
        lo, hi = self.bounds()
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= lo) and np.all(p <= hi))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Direct draws from the (untruncated) mixture, shape ``(n, d)``."""
        labels = rng.choice(len(self.components), size=n, p=self.weights)
        z = rng.standard_normal((n, self.dimension))
        return self.means[labels] + np.sqrt(self.variances[labels])[:, None] * z

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }
        if self.domain is not None:
            out["domain"] = [list(self.domain[0]), list(self.domain[1])]
        return out


def mixture(weights: Sequence[float], means, variances: Sequence[float],
            domain=None, name: str = "custom") -> Target:
    """Build a target from parallel lists, the layout used in config files."""
    means = np.asarray(means, dtype=float)
    if means.ndim == 1:
        means = means[:, None]
    if not (len(weights) == len(means) == len(variances)):
        raise ValueError("weights, means and variances must have the same length")
    comps = tuple(
        MixtureComponent(float(w), tuple(m), float(v)) for w, m, v in zip(weights, means, variances)
    )
    return Target(comps, domain=domain, name=name)


def _log_density(target: Target, points: np.ndarray) -> np.ndarray:
    # points: (n, d) -> (n,)
    diff = points[:, None, :] - target.means[None, :, :]
    sq = np.einsum("nkd,nkd->nk", diff, diff)
    return logsumexp(target.log_coef[None, :] - sq * target.inv2var[None, :], axis=1)


def energy(target: Target, point) -> float | np.ndarray:
    """Negative log mixture density, ``-log sum_i w_i N(point; mu_i, s_i^2 I)``.

    Accepts one point of shape ``(d,)`` or a batch ``(n, d)``. For 1D
    targets a flat array of scalars is treated as a batch.
    """
    p = np.asarray(point, dtype=float)
    d = target.dimension
    if p.ndim == 0:
        p = p.reshape(1)
    single = p.ndim == 1 and (d > 1 or p.shape[0] == 1)
    if p.ndim == 1:
        p = p.reshape(1, -1) if single else p.reshape(-1, 1)
    if p.ndim != 2 or p.shape[1] != d:
        raise ValueError(f"point dimension {p.shape[-1]} does not match target dimension {d}")
    e = -_log_density(target, p)
    return float(e[0]) if single else e


def tempered_log_density(target: Target, beta: float, point) -> float | np.ndarray:
    """Unnormalized log density ``-beta * energy`` of the tempered target."""
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    return -beta * energy(target, point)


def _toy1d(c: float, name: str) -> Target:
    return mixture([0.5, 0.5], [[5.0], [-5.0]], [1.0, c * c], domain=([-20.0], [20.0]), name=name)


def _grid2d(unequal: bool, name: str) -> Target:
    axis = [-4.0, -2.0, 0.0, 2.0, 4.0]
    # row-major with x varying fastest: component 25 sits at (4, 4)
    means = [(x, y) for y in axis for x in axis]
    variances = [0.2 / i if unequal else 0.2 for i in range(1, 26)]
    return mixture([1.0 / 25] * 25, means, variances, domain=([-8.0, -8.0], [8.0, 8.0]), name=name)


PRESETS = {
    "toy1d-equal": lambda: _toy1d(1.0, "toy1d-equal"),
    "toy1d-unequal": lambda: _toy1d(0.1, "toy1d-unequal"),
    "grid2d-equal": lambda: _grid2d(False, "grid2d-equal"),
    "grid2d-unequal": lambda: _grid2d(True, "grid2d-unequal"),
}


def build_preset(name: str) -> Target:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}") from None


def two_mode_target(sigma: float = 0.05, c: float = 0.5) -> Target:
    """``1/2 N(-1, sigma^2) + 1/2 N(1, c^2 sigma^2)`` on ``[-2, 2]``.

    A rescaled two-mode target whose modes sit well inside
    ``[-1.5, -0.5]`` and ``[0.5, 1.5]`` for small ``sigma``.
    """
    if sigma <= 0 or c <= 0:
        raise ValueError("sigma and c must be positive")
    return mixture([0.5, 0.5], [[-1.0], [1.0]], [sigma ** 2, (c * sigma) ** 2],
                   domain=([-2.0], [2.0]), name=f"two-mode(sigma={sigma},c={c})")
