"""Temperature-indexed Metropolis-Hastings kernels.

Proposals are symmetric random walks whose scale grows as the temperature
rises: the per-step proposal variance (Gaussian) or half-width (uniform
window) is ``base_variance * beta ** (-q)``. Proposals leaving the target
domain are rejected, never reflected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend
from ._core_py import GAUSSIAN, LATTICE, MODE_PLAIN, MODE_RESTRICT, MODE_WATCH, UNIFORM
from .targets import Target, energy

__all__ = [
    "ProposalSpec",
    "ModeRegion",
    "accept_probability",
    "mh_step",
    "restricted_mh_step",
    "draw_block",
    "RNG_ALGORITHM",
]

RNG_ALGORITHM = "numpy PCG64 uniforms; Gaussian increments by Box-Muller (cosine branch)"

FAMILIES = {"gaussian-isotropic": GAUSSIAN, "uniform-window": UNIFORM, "lattice": LATTICE}


@dataclass(frozen=True)
class ProposalSpec:
    """Symmetric random-walk proposal.

    ``family`` is ``gaussian-isotropic`` (``base_variance`` is the variance at
    ``beta = 1``), ``uniform-window`` (``base_variance`` is the half-width) or
    ``lattice`` (``base_variance`` is the lattice spacing and the walk jumps
    uniformly to one of ``2 * neighbors`` lattice neighbours per axis; ``q`` is
    ignored). The lattice family matches the finite chains of the spectral
    lab away from their edges.
    """

    family: str = "gaussian-isotropic"
    base_variance: float = 0.25
    q: float = 1.0
    neighbors: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown proposal family {self.family!r}; valid: {', '.join(FAMILIES)}")
        if self.base_variance < 0:
            raise ValueError("base_variance must be non-negative")
        if self.q < 0:
            raise ValueError("temperature exponent q must be non-negative")
        if self.neighbors < 1:
            raise ValueError("neighbors must be >= 1")

    @property
    def code(self) -> int:
        return FAMILIES[self.family]

    def scale(self, beta: float) -> float:
        """Proposal standard deviation (Gaussian), half-width (uniform) or spacing (lattice)."""
        if self.code == GAUSSIAN:
            return math.sqrt(self.base_variance * beta ** (-self.q))
        if self.code == UNIFORM:
            return self.base_variance * beta ** (-self.q)
        return self.base_variance

    def to_dict(self) -> dict:
        out = {"family": self.family, "base_variance": self.base_variance, "q": self.q}
        if self.code == LATTICE:
            out["neighbors"] = self.neighbors
        return out


def _as_box(box, d=None):
    lo = np.atleast_1d(np.asarray(box[0], dtype=float))
    hi = np.atleast_1d(np.asarray(box[1], dtype=float))
    if lo.shape != hi.shape or (d is not None and lo.shape[0] != d):
        raise ValueError("box bounds have inconsistent dimensions")
    if np.any(hi <= lo):
        raise ValueError("box upper bounds must exceed lower bounds")
    return lo, hi


@dataclass(frozen=True)
class ModeRegion:
    """Disjoint boxes ``Theta_1..Theta_d`` with inner boxes ``I_j`` inside each.

    Boxes are closed; neighbouring boxes may share a face (this is how the
    Voronoi cells of a lattice of means are represented) but their
    interiors must not overlap.
    """

    boxes: tuple
    inner_sets: tuple = None
    centers: tuple = None

    def __post_init__(self):
        boxes = tuple(_as_box(b) for b in self.boxes)
        if not boxes:
            raise ValueError("at least one box is required")
        d = boxes[0][0].shape[0]
        boxes = tuple(_as_box(b, d) for b in boxes)
        inner = boxes if self.inner_sets is None else tuple(_as_box(b, d) for b in self.inner_sets)
        if len(inner) != len(boxes):
            raise ValueError("need exactly one inner set per box")
        for a in range(len(boxes)):
            for b in range(a + 1, len(boxes)):
                if np.all(np.minimum(boxes[a][1], boxes[b][1]) > np.maximum(boxes[a][0], boxes[b][0])):
                    raise ValueError(f"boxes {a} and {b} overlap")
        for (ilo, ihi), (lo, hi) in zip(inner, boxes):
            if np.any(ilo < lo) or np.any(ihi > hi):
                raise ValueError("each inner set must be contained in its box")
        if self.centers is None:
            centers = np.array([0.5 * (lo + hi) for lo, hi in boxes])
        else:
            centers = np.asarray(self.centers, dtype=float).reshape(len(boxes), d)
        object.__setattr__(self, "boxes", boxes)
        object.__setattr__(self, "inner_sets", inner)
        object.__setattr__(self, "centers", centers)

    @property
    def dimension(self) -> int:
        return self.boxes[0][0].shape[0]

    def __len__(self):
        return len(self.boxes)

    def contains(self, index: int, point, inner: bool = False) -> bool:
        lo, hi = (self.inner_sets if inner else self.boxes)[index]
        p = np.atleast_1d(np.asarray(point, dtype=float))
        return bool(np.all(p >= lo) and np.all(p <= hi))

    def nearest_center(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(len(points), -1)
        d2 = ((pts[:, None, :] - self.centers[None, :, :]) ** 2).sum(axis=2)
        return np.argmin(d2, axis=1)

    def membership(self, points, inner: bool = False) -> np.ndarray:
        """Index of the (first) box containing each point, -1 if none."""
        pts = np.asarray(points, dtype=float).reshape(len(points), -1)
        out = np.full(len(pts), -1, dtype=np.int64)
        for j, (lo, hi) in enumerate(self.inner_sets if inner else self.boxes):
            hit = np.all((pts >= lo) & (pts <= hi), axis=1) & (out < 0)
            out[hit] = j
        return out

    def to_dict(self) -> dict:
        return {
            "boxes": [[lo.tolist(), hi.tolist()] for lo, hi in self.boxes],
            "inner_sets": [[lo.tolist(), hi.tolist()] for lo, hi in self.inner_sets],
            "centers": self.centers.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModeRegion":
        return cls(tuple(data["boxes"]), tuple(data["inner_sets"]) if data.get("inner_sets") else None,
                   data.get("centers"))

    @classmethod
    def voronoi(cls, target: Target) -> "ModeRegion":
        """Nearest-mean cells of a target whose means form an axis-aligned lattice.

        Cell faces sit halfway between neighbouring means; outer cells
        extend to the domain boundary.
        """
        lo_dom, hi_dom = target.bounds()
        means = target.means
        boxes = []
        for mu in means:
            lo, hi = lo_dom.copy(), hi_dom.copy()
            for k in range(target.dimension):
                vals = np.unique(means[:, k])
                below = vals[vals < mu[k]]
                above = vals[vals > mu[k]]
                if below.size:
                    lo[k] = 0.5 * (below.max() + mu[k])
                if above.size:
                    hi[k] = 0.5 * (above.min() + mu[k])
            boxes.append((lo, hi))
        return cls(tuple(boxes), centers=means)


def accept_probability(target: Target, beta: float, current, proposal) -> float:
    """Metropolis acceptance ``min(1, exp(-beta * (E(proposal) - E(current))))``."""
    if not target.in_domain(proposal):
        return 0.0
    de = energy(target, np.atleast_1d(proposal)) - energy(target, np.atleast_1d(current))
    if de <= 0.0:
        return 1.0
    return math.exp(-beta * de)


def draw_block(rng: np.random.Generator, n_steps: int, dimension: int) -> np.ndarray:
    """Uniforms for ``n_steps`` kernel steps, shape ``(n_steps, 2 * d + 1)``."""
    return rng.random((n_steps, 2 * dimension + 1))


def kernel_arrays(target: Target):
    lo, hi = target.bounds()
    return (
        np.ascontiguousarray(target.log_coef),
        np.ascontiguousarray(target.means),
        np.ascontiguousarray(target.inv2var),
        np.ascontiguousarray(lo),
        np.ascontiguousarray(hi),
    )


def run_steps(target: Target, spec: ProposalSpec, theta: np.ndarray, betas: np.ndarray,
              draws: np.ndarray, *, mode: int = MODE_PLAIN, region=None,
              acc_counts=None, prop_counts=None, trace=None, trace_every: int = 0,
              step_offset: int = 0):
    """Thin wrapper over the selected segment kernel (``theta`` updated in place)."""
    d = target.dimension
    log_coef, means, inv2var, lo, hi = kernel_arrays(target)
    if region is None:
        rlo, rhi = np.full(d, -np.inf), np.full(d, np.inf)
    else:
        rlo, rhi = (np.ascontiguousarray(a, dtype=float) for a in region)
    if acc_counts is None:
        acc_counts = np.zeros(10, dtype=np.int64)
    if prop_counts is None:
        prop_counts = np.zeros(10, dtype=np.int64)
    if trace is None:
        trace = np.empty((0, d))
    n = len(betas)
    if len(draws) < n or (np.ndim(draws) == 2 and np.shape(draws)[1] < 2 * d + 1):
        raise ValueError("draws must have at least len(betas) rows and 2d + 1 columns")
    if trace_every > 0:
        # the compiled kernel does not bounds-check
        need = (step_offset + n) // trace_every - step_offset // trace_every
        if trace.shape[0] < need or trace.shape[1] != d:
            raise ValueError(f"trace buffer needs shape ({need}, {d}), got {trace.shape}")
    return _backend.run_segment(
        theta, np.ascontiguousarray(betas, dtype=float), np.ascontiguousarray(draws),
        spec.code, float(spec.base_variance), float(spec.q), int(spec.neighbors),
        log_coef, means, inv2var, lo, hi, rlo, rhi, int(mode),
        acc_counts, prop_counts, trace, int(trace_every), int(step_offset),
    )


def mh_step(rng: np.random.Generator, target: Target, beta: float, spec: ProposalSpec, current) -> np.ndarray:
    """One Metropolis-Hastings step targeting ``exp(-beta * E)``."""
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    theta = np.array(np.atleast_1d(current), dtype=float)
    run_steps(target, spec, theta, np.array([beta]), draw_block(rng, 1, target.dimension))
    return theta


def restricted_mh_step(rng: np.random.Generator, target: Target, beta: float, spec: ProposalSpec,
                       region_index: int, regions: ModeRegion, current) -> np.ndarray:
    """One MH step targeting ``exp(-beta * E)`` restricted to box ``region_index``."""
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if not regions.contains(region_index, current):
        raise ValueError(f"current state {current} is outside region {region_index}")
    theta = np.array(np.atleast_1d(current), dtype=float)
    run_steps(target, spec, theta, np.array([beta]), draw_block(rng, 1, target.dimension),
              mode=MODE_RESTRICT, region=regions.boxes[region_index])
    return theta
