"""Nonhomogeneous cyclical MCMC driver.

The chain takes ``K * L`` Metropolis-Hastings steps; step ``j`` targets
``exp(-beta(j / L) * E)``. The state at every multiple of ``L`` is kept as
an output sample. Every run is reproducible from its 64-bit seed: replica
``i`` of a batch draws from ``PCG64(seed ^ i)``.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Optional

import numpy as np

from . import _backend
from ._core_py import MODE_RESTRICT, MODE_WATCH
from .kernels import RNG_ALGORITHM, ModeRegion, ProposalSpec, draw_block, run_steps
from .schedule import Schedule
from .targets import Target

__all__ = [
    "InitialDistribution",
    "RunConfig",
    "RunOutput",
    "WithinModeResult",
    "EscapeEstimate",
    "make_rng",
    "replica_map",
    "run_cyclical",
    "run_cycles",
    "run_within_mode",
    "within_mode_replicas",
    "estimate_escape_probability",
]

_U64 = (1 << 64) - 1


def make_rng(seed: int, replica: int = 0) -> np.random.Generator:
    """Generator for replica ``replica`` of a run seeded with ``seed``."""
    if not (0 <= seed <= _U64):
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed ^ replica))


def _box_muller(rng: np.random.Generator, n: int) -> np.ndarray:
    u = rng.random((n, 2))
    return np.sqrt(-2.0 * np.log1p(-u[:, 0])) * np.cos(2.0 * np.pi * u[:, 1])


@dataclass(frozen=True)
class InitialDistribution:
    """Law of the first state.

    ``kind`` is ``point`` (uses ``mean``), ``gaussian`` (``mean``, isotropic
    ``variance``), ``uniform`` (box ``low`` .. ``high``) or ``target``
    (a direct draw from the untruncated mixture).
    """

    kind: str = "gaussian"
    mean: tuple = (0.0,)
    variance: float = 1.0
    low: tuple = ()
    high: tuple = ()

    def __post_init__(self):
        if self.kind not in ("point", "gaussian", "uniform", "target"):
            raise ValueError(f"unknown initial distribution kind {self.kind!r}")
        for name in ("mean", "low", "high"):
            object.__setattr__(self, name, tuple(float(v) for v in np.atleast_1d(getattr(self, name))))
        if self.kind == "uniform" and len(self.low) != len(self.high):
            raise ValueError("uniform initial box needs matching low/high")

    def sample(self, rng: np.random.Generator, target: Target) -> np.ndarray:
        d = target.dimension
        if self.kind == "target":
            return target.sample(rng, 1)[0]
        if self.kind == "uniform":
            lo = np.broadcast_to(np.array(self.low), (d,))
            hi = np.broadcast_to(np.array(self.high), (d,))
            return lo + (hi - lo) * rng.random(d)
        mean = np.broadcast_to(np.array(self.mean), (d,)).astype(float)
        if self.kind == "point":
            return mean.copy()
        return mean + math.sqrt(self.variance) * _box_muller(rng, d)

    def to_dict(self) -> dict:
        if self.kind == "point":
            return {"kind": "point", "mean": list(self.mean)}
        if self.kind == "gaussian":
            return {"kind": "gaussian", "mean": list(self.mean), "variance": self.variance}
        if self.kind == "uniform":
            return {"kind": "uniform", "low": list(self.low), "high": list(self.high)}
        return {"kind": "target"}

    @classmethod
    def from_dict(cls, data: dict) -> "InitialDistribution":
        data = dict(data)
        kind = data.pop("kind")
        return cls(kind=kind, **data)


@dataclass(frozen=True)
class RunConfig:
    K: int
    schedule: Schedule
    proposal: ProposalSpec
    init: InitialDistribution = field(default_factory=InitialDistribution)
    seed: int = 0
    thinning: Optional[int] = None

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K}")
        if not (0 <= self.seed <= _U64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.thinning is not None and self.thinning < 0:
            raise ValueError("thinning must be non-negative")

    @property
    def trace_every(self) -> int:
        """Trace stride; 0 disables the trace. Defaults to ``L // 100``."""
        if self.thinning is None:
            return max(1, self.schedule.L // 100)
        return int(self.thinning)

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "schedule": self.schedule.to_dict(),
            "proposal": self.proposal.to_dict(),
            "init": self.init.to_dict(),
            "seed": self.seed,
            "thinning": self.trace_every,
        }


@dataclass
class RunOutput:
    cycle_end_samples: np.ndarray
    acceptance_by_phase: list
    proposals_by_phase: list
    thinned_trace: Optional[np.ndarray]
    metadata: dict

    @property
    def K(self) -> int:
        return len(self.cycle_end_samples)


def _phase_rates(acc, prop):
    return [float(a / p) if p else None for a, p in zip(acc, prop)]


def run_cycles(target: Target, schedule: Schedule, spec: ProposalSpec, theta: np.ndarray,
               rng: np.random.Generator, n_cycles: int, *, start_cycle: int = 0,
               acc_counts=None, prop_counts=None, trace_every: int = 0):
    """Advance ``theta`` in place through ``n_cycles`` full cycles.

    Returns ``(cycle_end_samples, trace)``. Feeding the same generator,
    ``run_cycles(..., n)`` equals ``n`` chained calls with ``n_cycles=1``.
    """
    L, d = schedule.L, target.dimension
    betas = schedule.cycle_betas()[1:]
    ends = np.empty((n_cycles, d))
    per_cycle = L // trace_every if trace_every > 0 else 0
    trace = np.empty((n_cycles * per_cycle, d))
    n_trace = 0
    if acc_counts is None:
        acc_counts = np.zeros(10, dtype=np.int64)
    if prop_counts is None:
        prop_counts = np.zeros(10, dtype=np.int64)
    for k in range(n_cycles):
        draws = draw_block(rng, L, d)
        written, _ = run_steps(
            target, spec, theta, betas, draws,
            acc_counts=acc_counts, prop_counts=prop_counts,
            trace=trace[n_trace:n_trace + per_cycle] if per_cycle else None,
            trace_every=trace_every, step_offset=(start_cycle + k) * L,
        )
        n_trace += written
        ends[k] = theta
    return ends, trace[:n_trace]


def run_cyclical(config: RunConfig, target: Target) -> RunOutput:
    """Cyclical MCMC: ``K`` cycles of ``L`` tempered MH steps, one sample per cycle end."""
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    rng = make_rng(config.seed)
    theta = np.asarray(config.init.sample(rng, target), dtype=float).copy()
    if theta.shape != (target.dimension,):
        raise ValueError("initial state has the wrong dimension")
    if not target.in_domain(theta):
        raise ValueError(f"initial state {theta} lies outside the target domain")
    acc = np.zeros(10, dtype=np.int64)
    prop = np.zeros(10, dtype=np.int64)
    trace_every = config.trace_every
    # a trace stride that does not divide L would shift between cycles
    if trace_every and config.schedule.L % trace_every:
        raise ValueError("thinning must divide the cycle length L")
    ends, trace = run_cycles(target, config.schedule, config.proposal, theta, rng, config.K,
                             acc_counts=acc, prop_counts=prop, trace_every=trace_every)
    finished = datetime.now(timezone.utc)
    metadata = {
        "seed": config.seed,
        "preset": target.name,
        "rng_algorithm": RNG_ALGORITHM,
        "backend": _backend.BACKEND,
        "started": started.isoformat(),
        "finished": finished.isoformat(),
        "wall_time_s": time.perf_counter() - t0,
        "config": config.to_dict(),
    }
    return RunOutput(
        cycle_end_samples=ends,
        acceptance_by_phase=_phase_rates(acc, prop),
        proposals_by_phase=prop.tolist(),
        thinned_trace=trace if trace_every else None,
        metadata=metadata,
    )


def replica_map(fn: Callable[[np.random.Generator, int], object], replicas: int, seed: int,
                workers: Optional[int] = None) -> list:
    """Apply ``fn(rng, i)`` to ``replicas`` independent substreams.

    Results come back in replica order regardless of ``workers``. The
    compiled kernel releases the GIL, so threads give real parallelism.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")

    def one(i):
        return fn(make_rng(seed, i), i)

    if not workers or workers <= 1:
        return [one(i) for i in range(replicas)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(replicas)))


@dataclass
class WithinModeResult:
    final: np.ndarray
    trace: np.ndarray


def _tail_betas(schedule: Schedule, L2: int) -> np.ndarray:
    if not (0 <= L2 < schedule.L):
        raise ValueError(f"L2 must satisfy 0 <= L2 < L, got {L2}")
    return schedule.beta_steps(np.arange(L2 + 1, schedule.L + 1))


def _check_start(regions: ModeRegion, region_index: int, start) -> np.ndarray:
    if not (0 <= region_index < len(regions)):
        raise ValueError(f"region index {region_index} out of range")
    if not regions.contains(region_index, start, inner=True):
        raise ValueError(f"start {start} is outside inner set {region_index}")
    return np.array(np.atleast_1d(start), dtype=float)


def run_within_mode(config: RunConfig, target: Target, regions: ModeRegion, region_index: int,
                    start, L2: int, rng: Optional[np.random.Generator] = None) -> WithinModeResult:
    """Restricted chain over steps ``L2 + 1 .. L`` started at ``start`` at step ``L2``.

    Each step is an MH step targeting the tempered density times the
    indicator of box ``region_index``.
    """
    theta = _check_start(regions, region_index, start)
    betas = _tail_betas(config.schedule, L2)
    rng = make_rng(config.seed) if rng is None else rng
    d = target.dimension
    trace = np.empty((len(betas), d))
    run_steps(target, config.proposal, theta, betas, draw_block(rng, len(betas), d),
              mode=MODE_RESTRICT, region=regions.boxes[region_index], trace=trace,
              trace_every=1, step_offset=L2)
    return WithinModeResult(final=theta, trace=trace)


def within_mode_replicas(config: RunConfig, target: Target, regions: ModeRegion, region_index: int,
                         start, L2: int, replicas: int, workers: Optional[int] = None) -> np.ndarray:
    """End states of ``replicas`` independent restricted runs, shape ``(replicas, d)``."""
    theta0 = _check_start(regions, region_index, start)
    betas = _tail_betas(config.schedule, L2)
    box = regions.boxes[region_index]
    d = target.dimension

    def one(rng, _i):
        theta = theta0.copy()
        run_steps(target, config.proposal, theta, betas, draw_block(rng, len(betas), d),
                  mode=MODE_RESTRICT, region=box)
        return theta

    return np.array(replica_map(one, replicas, config.seed, workers))


@dataclass(frozen=True)
class EscapeEstimate:
    probability: float
    standard_error: float
    replicas: int


def estimate_escape_probability(config: RunConfig, target: Target, regions: ModeRegion,
                                region_index: int, start, L2: int, replicas: int,
                                workers: Optional[int] = None) -> EscapeEstimate:
    """Monte-Carlo probability that the unrestricted chain leaves box ``region_index``.

    The chain starts at ``start`` at step ``L2`` and an escape is any visit
    outside the box during steps ``L2 + 1 .. L``.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    theta0 = _check_start(regions, region_index, start)
    betas = _tail_betas(config.schedule, L2)
    box = regions.boxes[region_index]
    d = target.dimension

    def one(rng, _i):
        theta = theta0.copy()
        _, exit_index = run_steps(target, config.proposal, theta, betas,
                                  draw_block(rng, len(betas), d), mode=MODE_WATCH, region=box)
        return exit_index >= 0

    hits = np.array(replica_map(one, replicas, config.seed, workers), dtype=float)
    p = float(hits.mean())
    return EscapeEstimate(p, math.sqrt(p * (1.0 - p) / replicas), replicas)
