"""Named experiments shared by the CLI and the acceptance suite.

Desk-scale parameters are the defaults; ``paper_scale=True`` switches the
sampling experiments to the long runs (hours of compute for the 2D grid
without the compiled core).
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .diagnostics import (
    DensityErrorReport,
    WeightReport,
    default_regions,
    estimate_weights,
    mode_marginal_error,
    weight_rank_correlation,
)
from .kernels import ModeRegion, ProposalSpec
from .sampler import InitialDistribution, RunConfig, RunOutput, run_cyclical
from .schedule import Schedule
from .spectral import (
    check_lyapunov_lemma,
    check_path_sampling,
    discretize,
    fit_drift,
    spectrum,
    verify_prop1_scaling,
    verify_theorem1,
    verify_theorem2,
)
from .targets import Target, build_preset, two_mode_target

__all__ = [
    "SCALES",
    "REPRODUCE_NAMES",
    "preset_run_config",
    "MixtureResult",
    "mixture_experiment",
    "spectral_thm1",
    "theorem2_demo",
    "lyapunov_demo",
    "LYAPUNOV_GRID",
]

SCALES = {
    "toy1d": {"desk": {"K": 500, "L": 2000}, "paper": {"K": 1000, "L": 5000}},
    "grid2d": {"desk": {"K": 5000, "L": 2000}, "paper": {"K": 50000, "L": 20000}},
}

REPRODUCE_NAMES = (
    "toy1d-equal",
    "toy1d-unequal",
    "grid2d-equal",
    "grid2d-unequal",
    "spectral-thm1",
    "theorem2-demo",
    "lyapunov-demo",
)

# bin rule for marginal errors in the sampling experiments: a few hundred
# in-mode samples cannot support 40 bins
EXPERIMENT_BINS = "sturges"


def _family(preset: str) -> str:
    return preset.split("-")[0]


def preset_run_config(preset: str, seed: int = 0, paper_scale: bool = False) -> RunConfig:
    """Run configuration used for a preset reproduction."""
    fam = _family(preset)
    if fam not in SCALES:
        raise ValueError(f"no run configuration for preset {preset!r}")
    p = SCALES[fam]["paper" if paper_scale else "desk"]
    if fam == "toy1d":
        proposal = ProposalSpec("gaussian-isotropic", 0.25, 1.0)
        init = InitialDistribution("gaussian", (0.0,), 1.0)
    else:
        proposal = ProposalSpec("gaussian-isotropic", 0.01, 0.5)
        init = InitialDistribution("uniform", low=(-6.0, -6.0), high=(6.0, 6.0))
    return RunConfig(K=p["K"], schedule=Schedule(p["L"]), proposal=proposal, init=init, seed=seed)


@dataclass
class MixtureResult:
    target: Target
    run: RunOutput
    regions: ModeRegion
    weights: WeightReport
    errors: list
    rank_correlation: Optional[float]
    runtime_s: float

    def error(self, mode_index: int) -> DensityErrorReport:
        for e in self.errors:
            if e.mode_index == mode_index:
                return e
        raise KeyError(mode_index)

    def to_dict(self) -> dict:
        out = {
            "weights": self.weights.to_dict(),
            "true_weights": self.target.weights.tolist(),
            "marginal_errors": [e.to_dict() for e in self.errors],
            "acceptance_by_phase": self.run.acceptance_by_phase,
            "proposals_by_phase": self.run.proposals_by_phase,
        }
        if self.rank_correlation is not None:
            out["weight_variance_spearman"] = self.rank_correlation
        return out


def mixture_experiment(target: Target, config: RunConfig, regions: Optional[ModeRegion] = None,
                       bins=EXPERIMENT_BINS, modes=None, assignment: str = "nearest-center") -> MixtureResult:
    """Run the sampler and score weights and per-mode marginals.

    ``modes`` selects which marginal errors to compute (default: all).
    """
    t0 = time.perf_counter()
    run = run_cyclical(config, target)
    runtime = time.perf_counter() - t0
    regions = default_regions(target) if regions is None else regions
    samples = run.cycle_end_samples
    weights = estimate_weights(samples, regions, assignment)
    modes = range(len(regions)) if modes is None else modes
    errors = [mode_marginal_error(samples, regions, target, i, 0, bins) for i in modes]
    rho = None
    if len(np.unique(target.variances)) > 1 and len(regions) > 2:
        rho = weight_rank_correlation(weights.weights, target.variances)
    return MixtureResult(target, run, regions, weights, errors, rho, runtime)


def spectral_thm1(target: Optional[Target] = None, interval=(-10.0, 10.0), N: int = 50, m: int = 2,
                  L: int = 64, k: int = 5, r: float = 1.0, L_list=(64, 128),
                  quadrature_points: int = 32) -> dict:
    """Exact variance recursion, scaling table and path-sampling residuals on one chain.

    The target defaults to the equal-variance 1D preset.
    """
    target = build_preset("toy1d-equal") if target is None else target
    chain = discretize(target, interval, N, m, Schedule(L, r=r))
    nu0 = np.full(N, 1.0 / N)
    report = verify_theorem1(chain, nu0, k)
    alpha, lam = spectrum(chain)
    rows = verify_prop1_scaling(target, interval, N, m, list(L_list), r)
    residuals = [check_path_sampling(chain, j, quadrature_points) for j in range(1, L + 1)]
    tv_ends = report.tv_trajectory[L::L]
    return {
        "chain": {"target": target.name, "interval": list(interval), "N": N, "m": m, "L": L, "k": k, "r": r,
                  "flags": list(chain.flags)},
        "report": report,
        "theorem1": report.to_dict(),
        "lambda_le_one_plus_alpha": bool(np.all(lam <= 1.0 + alpha + 1e-10)),
        "tv_cycle_ends_nonincreasing": bool(np.all(np.diff(tv_ends) <= 0.0)),
        "prop1": [{"L": row.L, "max_alpha": row.max_alpha, "max_ratio": row.max_ratio, "C": row.C}
                  for row in rows],
        "prop1_halving_ratio": rows[1].max_alpha / rows[0].max_alpha if len(rows) > 1 else None,
        "path_sampling_max_residual": float(max(residuals)),
        "chain_obj": chain,
    }


def theorem2_demo(sigma: float = 0.05, c: float = 0.5, N: int = 80, m: int = 1, L: int = 128,
                  L2: int = 64, theta_sets=((-1.5, -0.5), (0.5, 1.5)),
                  inner_sets=((-1.2, -0.8), (0.8, 1.2))) -> dict:
    """Exact terms of the mixture bound on the two-mode grid chain, plus fitted drift bounds."""
    target = two_mode_target(sigma, c)
    chain = discretize(target, (-2.0, 2.0), N, m, Schedule(L))
    thetas = [chain.index_set(*b) for b in theta_sets]
    inners = [chain.index_set(*b) for b in inner_sets]
    nu0 = np.full(N, 1.0 / N)
    report = verify_theorem2(chain, thetas, inners, L2, nu0)
    fits = [fit_drift(chain, t, i, L2) for t, i in zip(thetas, inners)]
    drift = [{"kappa": f.kappa, "alpha": f.alpha_drift, "beta": f.beta_drift, "m": f.m,
              "steps": f.steps, "delta1_bound": f.delta1_bound} for f in fits]
    bound = max(f.delta1_bound for f in fits)
    return {
        "chain": {"sigma": sigma, "c": c, "N": N, "m": m, "L": L, "L2": L2,
                  "theta_sets": [list(b) for b in theta_sets], "inner_sets": [list(b) for b in inner_sets]},
        "report": report,
        "theorem2": report.to_dict(),
        "drift": drift,
        "delta1_drift_bound": bound,
        "delta1_within_drift_bound": bool(all(d <= f.delta1_bound
                                              for d, f in zip(report.delta1_per_mode, fits))),
        "chain_obj": chain,
        "theta_idx": thetas,
        "inner_idx": inners,
    }


LYAPUNOV_GRID = {"sigma": 0.01, "alpha": 0.05, "s": (0.5, 1.0, 2.0), "c": (0.6, 1.0, 1.9),
                 "theta_min": -1.0, "theta_max": 1.0, "theta_step": 0.005}


def lyapunov_demo(sigma=0.01, alpha=0.05, s_values=(0.5, 1.0, 2.0), c_values=(0.6, 1.0, 1.9),
                  theta_min=-1.0, theta_max=1.0, theta_step=0.005, rtol=1e-8) -> dict:
    n = int(round((theta_max - theta_min) / theta_step))
    grid = theta_min + theta_step * np.arange(n + 1)
    reports = []
    for s in s_values:
        for c in c_values:
            reports.append(check_lyapunov_lemma(sigma, s, c, alpha, grid, rtol=rtol))
    worst = max(r.max_violation for r in reports)
    return {
        "reports": reports,
        "cases": [r.to_dict() for r in reports],
        "max_violation": worst,
        "holds": worst <= 0.0,
    }
