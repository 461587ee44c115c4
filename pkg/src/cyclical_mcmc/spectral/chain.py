"""Finite-state cyclical chains on a 1D grid.

Every kernel is a Metropolis-Hastings matrix with a uniform proposal over
the ``2m`` nearest grid neighbours. Near the edges fewer neighbours exist;
the proposal is renormalized there and the Hastings ratio carries the
``n(x) / n(y)`` correction, so each ``M_j`` is exactly reversible with
respect to its ``Pi_j``.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from ..schedule import Schedule
from ..targets import Target, energy

__all__ = ["FiniteChain", "discretize", "build_chain", "mh_matrix", "tempered_vector"]


def tempered_vector(energies: np.ndarray, beta: float) -> np.ndarray:
    """Normalized ``exp(-beta * E)`` on the grid."""
    e = np.asarray(energies, dtype=float)
    w = np.exp(-beta * (e - e.min()))
    return w / w.sum()


def _neighbor_counts(n: int, m: int) -> np.ndarray:
    idx = np.arange(n)
    return np.minimum(idx, m) + np.minimum(n - 1 - idx, m)


def mh_matrix(energies: np.ndarray, beta: float, m: int) -> np.ndarray:
    """MH transition matrix targeting ``exp(-beta * E)`` with a ``2m``-neighbour proposal."""
    e = np.asarray(energies, dtype=float)
    n = len(e)
    counts = _neighbor_counts(n, m)
    M = np.zeros((n, n))
    for off in range(1, m + 1):
        for sgn in (-1, 1):
            src = np.arange(max(0, -sgn * off), min(n, n - sgn * off))
            dst = src + sgn * off
            log_ratio = -beta * (e[dst] - e[src]) + np.log(counts[src] / counts[dst])
            M[src, dst] = np.minimum(1.0, np.exp(np.minimum(log_ratio, 0.0))) / counts[src]
    M[np.arange(n), np.arange(n)] = 0.0
    M[np.arange(n), np.arange(n)] = 1.0 - M.sum(axis=1)
    return M


@dataclass(frozen=True)
class FiniteChain:
    """Grid, tempered vectors ``Pi_0..Pi_L`` and kernels ``M_1..M_L``.

    ``kernels[j - 1]`` is ``M_j``; ``pi[j]`` is ``Pi_j``. Cycles repeat the
    same ``L`` kernels.
    """

    grid: np.ndarray
    energies: np.ndarray
    betas: np.ndarray
    pi: np.ndarray
    kernels: np.ndarray
    m: int
    flags: tuple = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def L(self) -> int:
        return len(self.kernels)

    @property
    def N(self) -> int:
        return len(self.grid)

    def kernel(self, j: int) -> np.ndarray:
        """``M_j`` for any step ``j >= 1`` (periodic in ``j``)."""
        return self.kernels[(j - 1) % self.L]

    def pi_at(self, j: int) -> np.ndarray:
        """``Pi_j`` for any step ``j >= 0`` (periodic in ``j``)."""
        k = j % self.L
        return self.pi[self.L if k == 0 and j > 0 else k]

    def ratio(self, j: int) -> np.ndarray:
        """``Pi_{j-1} / Pi_j`` on the grid, for ``1 <= j <= L``."""
        return self.pi[j - 1] / self.pi[j]

    def with_kernels(self, kernels) -> "FiniteChain":
        return replace(self, kernels=np.asarray(kernels, dtype=float), _cache={})

    def index_set(self, lo: float, hi: float) -> np.ndarray:
        """Indices of grid points inside ``[lo, hi]``."""
        return np.flatnonzero((self.grid >= lo) & (self.grid <= hi))

    def dump_csv(self, directory) -> list:
        """Write ``grid.csv``, ``pi.csv`` and one ``kernel_<j>.csv`` per step."""
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        with open(out / "grid.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "x", "energy"])
            for i, (x, e) in enumerate(zip(self.grid, self.energies)):
                w.writerow([i, repr(float(x)), repr(float(e))])
        paths.append(out / "grid.csv")
        with open(out / "pi.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "beta"] + [f"x_{i}" for i in range(self.N)])
            for j, (b, row) in enumerate(zip(self.betas, self.pi)):
                w.writerow([j, repr(float(b))] + [repr(float(v)) for v in row])
        paths.append(out / "pi.csv")
        for j in range(1, self.L + 1):
            p = out / f"kernel_{j}.csv"
            np.savetxt(p, self.kernel(j), delimiter=",", fmt="%.17g")
            paths.append(p)
        return paths


def build_chain(energies, betas, m: int = 1, grid=None) -> FiniteChain:
    """Chain from grid energies and the inverse temperatures ``beta_0..beta_L``."""
    e = np.asarray(energies, dtype=float)
    b = np.asarray(betas, dtype=float)
    n = len(e)
    if n < 2:
        raise ValueError("a finite chain needs at least two states")
    if not (1 <= m <= n - 1):
        raise ValueError(f"neighbour window m must satisfy 1 <= m <= N - 1, got {m}")
    if len(b) < 2:
        raise ValueError("need at least beta_0 and beta_1")
    pi = np.array([tempered_vector(e, beta) for beta in b])
    kernels = np.array([mh_matrix(e, beta, m) for beta in b[1:]])
    grid = np.arange(n, dtype=float) if grid is None else np.asarray(grid, dtype=float)
    return FiniteChain(grid=grid, energies=e, betas=b, pi=pi, kernels=kernels, m=int(m))


def discretize(target: Target, interval, N: int, m: int, schedule: Schedule) -> FiniteChain:
    """Finite chain on ``N`` equally spaced points of ``interval``.

    Only 1D targets are supported. A warning is issued (and recorded in
    ``flags``) when the interval contains none of the component means.
    """
    if target.dimension != 1:
        raise ValueError("the spectral lab discretizes 1D targets only")
    if N < 2:
        raise ValueError("N must be >= 2")
    lo, hi = float(interval[0]), float(interval[1])
    if not hi > lo:
        raise ValueError("interval must have positive length")
    grid = np.linspace(lo, hi, N)
    chain = build_chain(energy(target, grid.reshape(-1, 1)), schedule.cycle_betas(), m, grid)
    means = target.means[:, 0]
    if not np.any((means >= lo) & (means <= hi)):
        warnings.warn("discretization interval excludes every component mean", RuntimeWarning)
        chain = replace(chain, flags=("interval-excludes-means",))
    return chain
