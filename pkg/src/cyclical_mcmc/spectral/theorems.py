"""Exact checks of the convergence bounds on finite chains."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..schedule import Schedule, beta_derivative
from ..targets import Target
from .chain import FiniteChain, discretize
from .gaps import capital_lambda_from, spectrum

__all__ = [
    "Trajectory",
    "SpectralReport",
    "propagate_exact",
    "verify_theorem1",
    "unrolled_bound",
    "ScalingRow",
    "verify_prop1_scaling",
    "escape_probabilities",
    "restricted_end_laws",
    "Theorem2Report",
    "verify_theorem2",
    "DriftFit",
    "fit_drift",
    "drift_union_bound",
    "check_path_sampling",
    "log_normalizer",
]

ROUNDOFF = 1e-10


@dataclass
class Trajectory:
    nu: np.ndarray
    density: np.ndarray
    var: np.ndarray
    tv: np.ndarray


def propagate_exact(chain: FiniteChain, nu0, k: int) -> Trajectory:
    """``nu^(j) = nu^(0) M_1 ... M_j`` for ``j = 0..kL``.

    Also returns the densities ``f_j = nu^(j) / Pi_j``, their variances
    ``Var_j(f_j)`` under ``Pi_j`` and ``||nu^(j) - Pi_j||_tv``.
    """
    nu = np.asarray(nu0, dtype=float)
    if nu.shape != (chain.N,) or np.any(nu < 0) or abs(nu.sum() - 1.0) > 1e-9:
        raise ValueError("nu0 must be a probability vector on the grid")
    steps = k * chain.L
    out = np.empty((steps + 1, chain.N))
    out[0] = nu
    for j in range(1, steps + 1):
        out[j] = out[j - 1] @ chain.kernel(j)
    pis = np.array([chain.pi_at(j) for j in range(steps + 1)])
    # Pi_j can underflow to 0 far from sharp modes; mass there makes Var infinite
    dens = np.zeros_like(out)
    with np.errstate(divide="ignore", over="ignore"):
        np.divide(out, pis, out=dens, where=out > 0)
    mean = out.sum(axis=1)
    with np.errstate(invalid="ignore"):
        var = (out * dens).sum(axis=1) - mean ** 2
    tv = np.abs(out - pis).sum(axis=1)
    return Trajectory(nu=out, density=dens, var=var, tv=tv)


def unrolled_bound(var0: float, alpha, lam, steps: int) -> np.ndarray:
    """``Var_0 prod_{k<=j} c_k + sum_{i<=j} alpha_i prod_{i<l<=j} c_l``, ``c = 1 - lambda + alpha``.

    Kernels are reused every cycle, so ``alpha`` and ``lam`` are indexed
    modulo their length.
    """
    a = np.asarray(alpha, dtype=float)
    lam = np.asarray(lam, dtype=float)
    L = len(a)
    out = np.empty(steps + 1)
    out[0] = var0
    for j in range(1, steps + 1):
        i = (j - 1) % L
        out[j] = (1.0 - lam[i] + a[i]) * out[j - 1] + a[i]
    return out


@dataclass
class SpectralReport:
    alpha: np.ndarray
    lam: np.ndarray
    capital_lambda: float
    var_trajectory: np.ndarray
    tv_trajectory: np.ndarray
    bound_curve: np.ndarray
    recursion_slack: np.ndarray
    cs_slack: np.ndarray
    unrolled_slack: np.ndarray
    stated_bound: np.ndarray
    stated_bound_holds: np.ndarray
    tol: float = ROUNDOFF

    @property
    def recursion_ok(self) -> np.ndarray:
        return self.recursion_slack >= -self.tol

    @property
    def all_ok(self) -> bool:
        return bool(
            np.all(self.recursion_slack >= -self.tol)
            and np.all(self.cs_slack >= -self.tol)
            and np.all(self.unrolled_slack >= -self.tol)
        )

    def csv_rows(self):
        """``(step, tv, var, bound)`` rows."""
        return list(zip(range(len(self.var_trajectory)), self.tv_trajectory,
                        self.var_trajectory, self.bound_curve))

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.tolist(),
            "lambda": self.lam.tolist(),
            "capital_lambda": self.capital_lambda,
            "recursion_ok": bool(np.all(self.recursion_ok)),
            "cauchy_schwarz_ok": bool(np.all(self.cs_slack >= -self.tol)),
            "unrolled_bound_ok": bool(np.all(self.unrolled_slack >= -self.tol)),
            "min_recursion_slack": float(self.recursion_slack.min()) if len(self.recursion_slack) else None,
            "min_cs_slack": float(self.cs_slack.min()),
            "stated_bound_per_cycle": self.stated_bound.tolist(),
            "stated_bound_holds_per_cycle": self.stated_bound_holds.tolist(),
            "tv_cycle_ends": self.tv_trajectory[:: len(self.alpha)].tolist(),
        }


def verify_theorem1(chain: FiniteChain, nu0, k: int, tol: float = ROUNDOFF) -> SpectralReport:
    """Check the variance recursion, its unrolled form and ``TV <= sqrt(Var)`` at every step.

    The per-cycle curve ``Var_0 Lambda_L^k`` is reported alongside but not
    asserted: with all ``alpha_j = 0`` it would claim exact convergence
    after one cycle, which the recursion does not give.
    """
    alpha, lam = spectrum(chain)
    traj = propagate_exact(chain, nu0, k)
    L = chain.L
    steps = k * L
    idx = (np.arange(1, steps + 1) - 1) % L
    factor = 1.0 - lam[idx] + alpha[idx]
    rhs = factor * traj.var[:-1] + alpha[idx]
    rec_slack = rhs - traj.var[1:]
    cs_slack = np.sqrt(np.maximum(traj.var, 0.0)) - traj.tv
    bound = unrolled_bound(traj.var[0], alpha, lam, steps)
    big = capital_lambda_from(alpha, lam)
    stated = traj.var[0] * big ** np.arange(1, k + 1)
    ends = traj.tv[L::L]
    return SpectralReport(
        alpha=alpha,
        lam=lam,
        capital_lambda=big,
        var_trajectory=traj.var,
        tv_trajectory=traj.tv,
        bound_curve=bound,
        recursion_slack=rec_slack,
        cs_slack=cs_slack,
        unrolled_slack=bound - traj.var,
        stated_bound=stated,
        stated_bound_holds=ends ** 2 <= stated + tol,
        tol=tol,
    )


@dataclass
class ScalingRow:
    L: int
    max_alpha: float
    max_ratio: float
    ratios: np.ndarray
    C: float


def _sup_abs_derivative(schedule: Schedule, a: float, b: float, n: int = 1025) -> float:
    ts = np.linspace(a, b, n)
    ts = ts[(ts > 0.0) & (ts < 1.0)]
    if schedule.r == 1.0:
        ts = np.concatenate([ts, [t for t in (0.25, 0.75) if a <= t <= b]])
    return max(abs(beta_derivative(schedule, float(t)).value) for t in ts)


def verify_prop1_scaling(target: Target, interval, N: int, m: int, L_list: Sequence[int],
                         r: float = 1.0) -> list:
    """``alpha_j * L / sup |beta'|`` over ``[(j-1)/L, j/L]`` for each cycle length.

    Uses the unfloored schedule. Each row also carries the constant
    ``C = osc(E) * max_j exp(|beta_j - beta_{j-1}| osc(E))`` from the grid
    energies, which bounds every ratio.
    """
    rows = []
    for L in L_list:
        sched = Schedule(L, r=r, floor=0.0)
        chain = discretize(target, interval, N, m, sched)
        alpha, _ = _alphas(chain)
        osc = float(chain.energies.max() - chain.energies.min())
        dbeta = np.abs(np.diff(chain.betas))
        C = osc * math.exp(float(dbeta.max()) * osc)
        sups = np.array([_sup_abs_derivative(sched, (j - 1) / L, j / L) for j in range(1, L + 1)])
        ratios = np.where(sups > 0, alpha * L / np.where(sups > 0, sups, 1.0), 0.0)
        rows.append(ScalingRow(L=L, max_alpha=float(alpha.max()), max_ratio=float(ratios.max()),
                               ratios=ratios, C=C))
    return rows


def _alphas(chain: FiniteChain):
    from .gaps import alpha_j

    return np.array([alpha_j(chain, j) for j in range(1, chain.L + 1)]), None


def _as_index_sets(sets, n: int) -> list:
    out = []
    for s in sets:
        a = np.unique(np.asarray(s, dtype=np.int64))
        if a.size == 0 or a.min() < 0 or a.max() >= n:
            raise ValueError("index sets must be non-empty and inside the grid")
        out.append(a)
    return out


def escape_probabilities(chain: FiniteChain, theta_set, L2: int, starts=None) -> np.ndarray:
    """Probability of leaving ``theta_set`` during steps ``L2+1..L`` from each start.

    The complement of ``theta_set`` is made absorbing and the start laws
    are propagated exactly. ``starts`` defaults to every point of the set.
    """
    theta = _as_index_sets([theta_set], chain.N)[0]
    starts = theta if starts is None else np.atleast_1d(np.asarray(starts, dtype=np.int64))
    inside = np.zeros(chain.N, dtype=bool)
    inside[theta] = True
    mass = np.zeros((len(starts), chain.N))
    mass[np.arange(len(starts)), starts] = 1.0
    for i in range(L2 + 1, chain.L + 1):
        mass = mass @ chain.kernel(i)
        mass[:, ~inside] = 0.0
    return 1.0 - mass.sum(axis=1)


def restricted_kernel(M: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """MH kernel of the same proposal targeting the tempered law restricted to ``theta``.

    Moves between points of the set are unchanged; moves out of it are
    rejected and fold into the diagonal.
    """
    R = M[np.ix_(theta, theta)].copy()
    np.fill_diagonal(R, 0.0)
    np.fill_diagonal(R, 1.0 - R.sum(axis=1))
    return R


def restricted_end_laws(chain: FiniteChain, theta_set, L2: int, starts=None) -> np.ndarray:
    """Law at step ``L`` of the restricted chain from each start (rows over ``theta_set``)."""
    theta = _as_index_sets([theta_set], chain.N)[0]
    starts = theta if starts is None else np.atleast_1d(np.asarray(starts, dtype=np.int64))
    pos = {int(v): i for i, v in enumerate(theta)}
    law = np.zeros((len(starts), len(theta)))
    for r, s in enumerate(starts):
        law[r, pos[int(s)]] = 1.0
    for i in range(L2 + 1, chain.L + 1):
        law = law @ restricted_kernel(chain.kernel(i), theta)
    return law


@dataclass
class Theorem2Report:
    lhs: float
    delta1: float
    delta2: float
    remainder: float
    inner_mass: np.ndarray
    delta1_per_mode: np.ndarray
    delta2_per_mode: np.ndarray

    @property
    def rhs(self) -> float:
        return self.delta1 + self.delta2 + self.remainder

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "remainder": self.remainder,
            "rhs": self.rhs,
            "slack": self.slack,
            "holds": self.slack >= -ROUNDOFF,
            "inner_mass": self.inner_mass.tolist(),
            "delta1_per_mode": self.delta1_per_mode.tolist(),
            "delta2_per_mode": self.delta2_per_mode.tolist(),
        }


def verify_theorem2(chain: FiniteChain, theta_sets, inner_sets, L2: int, nu0) -> Theorem2Report:
    """Exact terms of the mixture bound after one cycle.

    ``delta1`` is the worst escape probability from any inner point,
    ``delta2`` the worst TV distance between the restricted chain's law at
    step ``L`` and ``Pi`` restricted to the mode, and the remainder is
    ``1 - nu^(L2)(union of inner sets)``.
    """
    if not (0 <= L2 <= chain.L):
        raise ValueError(f"L2 must satisfy 0 <= L2 <= L, got {L2}")
    thetas = _as_index_sets(theta_sets, chain.N)
    inners = _as_index_sets(inner_sets, chain.N)
    if len(thetas) != len(inners):
        raise ValueError("need one inner set per mode set")
    seen = np.zeros(chain.N, dtype=int)
    for t in thetas:
        seen[t] += 1
    if np.any(seen > 1):
        raise ValueError("mode index sets overlap")
    for t, inn in zip(thetas, inners):
        if not np.all(np.isin(inn, t)):
            raise ValueError("each inner set must lie inside its mode set")

    traj = propagate_exact(chain, nu0, 1)
    nu_L2, nu_L = traj.nu[L2], traj.nu[chain.L]
    pi = chain.pi[chain.L]
    inner_mass = np.array([nu_L2[inn].sum() for inn in inners])
    mix = np.zeros(chain.N)
    d1, d2 = [], []
    for t, inn in zip(thetas, inners):
        restricted = np.zeros(chain.N)
        restricted[t] = pi[t] / pi[t].sum()
        mix += nu_L2[inn].sum() * restricted
        d1.append(float(escape_probabilities(chain, t, L2, inn).max()))
        laws = restricted_end_laws(chain, t, L2, inn)
        d2.append(float(np.abs(laws - restricted[t][None, :]).sum(axis=1).max()))
    return Theorem2Report(
        lhs=float(np.abs(nu_L - mix).sum()),
        delta1=max(d1),
        delta2=max(d2),
        remainder=float(1.0 - inner_mass.sum()),
        inner_mass=inner_mass,
        delta1_per_mode=np.array(d1),
        delta2_per_mode=np.array(d2),
    )


def drift_union_bound(alpha_drift: float, beta_drift: float, m: float, steps: int,
                      ev_start: float) -> tuple[float, float]:
    """Escape and remainder bounds implied by a drift ``MV <= (1 - a) V + b``.

    Returns ``(steps * b e^{-m} / a, e^{-m} (b / a + ev_start))``.
    """
    if not (0.0 < alpha_drift <= 1.0):
        raise ValueError("alpha_drift must lie in (0, 1]")
    if beta_drift < 0:
        raise ValueError("beta_drift must be non-negative")
    if m <= 0:
        raise ValueError("m must be positive")
    em = math.exp(-m)
    return steps * beta_drift * em / alpha_drift, em * (beta_drift / alpha_drift + ev_start)


@dataclass
class DriftFit:
    kappa: float
    alpha_drift: float
    beta_drift: float
    m: float
    steps: int
    delta1_bound: float
    ev_start: float


def fit_drift(chain: FiniteChain, theta_set, inner_set, L2: int,
              kappas=(0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0),
              alphas=(0.01, 0.05, 0.1, 0.2, 0.5, 1.0)) -> DriftFit:
    """Fit ``V(x) = exp(kappa |x - c| / h)`` drift constants for steps ``L2+1..L``.

    ``c`` and ``h`` are the centre and half-width of the mode set. The drift
    inequality ``M_i V <= (1 - a) V + b`` is imposed on the mode set only,
    with ``b >= a * max_{inner} V``. For the chain stopped at its exit time
    ``u_i = E[V(X_i); no exit by i]`` then obeys ``u_{i+1} <= (1 - a) u_i + b``,
    so ``u_i <= b / a`` and each step's exit probability is at most
    ``e^{-m} b / a``; the union bound follows. Returns the constants giving
    the smallest escape bound.
    """
    theta = _as_index_sets([theta_set], chain.N)[0]
    inner = _as_index_sets([inner_set], chain.N)[0]
    x = chain.grid
    lo, hi = x[theta].min(), x[theta].max()
    c, h = 0.5 * (lo + hi), 0.5 * (hi - lo) if hi > lo else 1.0
    outside = np.setdiff1d(np.arange(chain.N), theta)
    steps = chain.L - L2
    best = None
    for kappa in kappas:
        V = np.exp(kappa * np.abs(x - c) / h)
        m = float(np.log(V[outside]).min()) if outside.size else math.inf
        if not (m > 0 and math.isfinite(m)):
            continue
        MV = np.array([chain.kernel(i)[theta] @ V for i in range(L2 + 1, chain.L + 1)])
        for a in alphas:
            b = max(float((MV - (1.0 - a) * V[None, theta]).max()), a * float(V[inner].max()), 0.0)
            d1, _ = drift_union_bound(a, b, m, steps, 0.0)
            if best is None or d1 < best.delta1_bound:
                best = DriftFit(kappa, a, b, m, steps, d1, float(V[inner].max()))
    if best is None:
        raise ValueError("no admissible drift function: the mode set covers the grid")
    return best


def log_normalizer(energies: np.ndarray, beta: float) -> float:
    """``log sum_x exp(-beta E(x))`` over the grid."""
    e = np.asarray(energies, dtype=float)
    e0 = e.min()
    return float(-beta * e0 + np.log(np.exp(-beta * (e - e0)).sum()))


def check_path_sampling(chain: FiniteChain, j: int, quadrature_points: int = 32) -> float:
    """Residual of ``log(Z_{j-1}/Z_j) = (b_j - b_{j-1}) int_0^1 E_{Pi_{j,t}}[E] dt``.

    The sign follows from ``d log Z / d beta = -E_beta[E]``. The left side
    uses exact grid normalizers; the integral over the interpolating
    inverse temperature uses Gauss-Legendre quadrature.
    """
    if not (1 <= j <= chain.L):
        raise ValueError(f"step index j must satisfy 1 <= j <= L={chain.L}, got {j}")
    e = chain.energies
    b_prev, b_cur = float(chain.betas[j - 1]), float(chain.betas[j])
    lhs = log_normalizer(e, b_prev) - log_normalizer(e, b_cur)
    nodes, weights = np.polynomial.legendre.leggauss(quadrature_points)
    t = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    means = []
    for tk in t:
        b = tk * b_cur + (1.0 - tk) * b_prev
        p = np.exp(-b * (e - e.min()))
        means.append(float((p * e).sum() / p.sum()))
    rhs = (b_cur - b_prev) * float(np.dot(w, means))
    return abs(lhs - rhs)
