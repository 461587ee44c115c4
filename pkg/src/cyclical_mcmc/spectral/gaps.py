"""Per-step discrepancy ``alpha_j``, spectral gap ``lambda_j`` and ``Lambda_L``.

Notation, for step ``j`` of a chain: ``r = Pi_{j-1} / Pi_j`` and ``M2`` is
the two-step kernel ``M_j @ M_j``. The weighted two-step kernel is
``Q_j(x, z) = M2(x, z) r(z)`` and ``W(x, z) = Pi_{j-1}(x) Q_j(x, z)`` is
symmetric whenever ``M_j`` is ``Pi_j``-reversible.
"""
from __future__ import annotations

import numpy as np
from scipy import linalg

from .chain import FiniteChain

__all__ = [
    "NumericalFailure",
    "q_matrix",
    "w_matrix",
    "bar_kernel",
    "alpha_profile",
    "alpha_j",
    "alpha_random_search",
    "lambda_j",
    "spectrum",
    "capital_lambda",
    "capital_lambda_from",
]

EIG_RESIDUAL_TOL = 1e-10


class NumericalFailure(RuntimeError):
    """A numerical routine did not reach its accuracy target."""


def _check_j(chain: FiniteChain, j: int):
    if not (1 <= j <= chain.L):
        raise ValueError(f"step index j must satisfy 1 <= j <= L={chain.L}, got {j}")


def _two_step(chain: FiniteChain, j: int) -> np.ndarray:
    key = ("M2", j)
    if key not in chain._cache:
        M = chain.kernel(j)
        chain._cache[key] = M @ M
    return chain._cache[key]


def bar_kernel(chain: FiniteChain, j: int) -> np.ndarray:
    """``Mbar_j(x, y) = M_j(x, y) r(y)``, mapping ``Pi_{j-1}`` densities to ``Pi_j`` densities."""
    _check_j(chain, j)
    return chain.kernel(j) * chain.ratio(j)[None, :]


def q_matrix(chain: FiniteChain, j: int) -> np.ndarray:
    _check_j(chain, j)
    return _two_step(chain, j) * chain.ratio(j)[None, :]


def w_matrix(chain: FiniteChain, j: int) -> np.ndarray:
    return chain.pi[j - 1][:, None] * q_matrix(chain, j)


def alpha_profile(chain: FiniteChain, j: int) -> np.ndarray:
    """``g(x) = sum_z M2(x, z) |r(z) - 1|``; ``alpha_j`` is its maximum."""
    _check_j(chain, j)
    return _two_step(chain, j) @ np.abs(chain.ratio(j) - 1.0)


def alpha_j(chain: FiniteChain, j: int) -> float:
    """Supremum of ``Delta_j(f)`` over ``Pi_{j-1}(f^2) = 1``.

    ``Delta_j(f) = sum_x Pi_{j-1}(x) f(x)^2 g(x)`` is linear in ``f^2``, so
    on a finite space the supremum is attained by a point mass at the
    maximiser of ``g``.
    """
    return float(alpha_profile(chain, j).max())


def alpha_random_search(chain: FiniteChain, j: int, n: int, rng: np.random.Generator) -> float:
    """Best ``Delta_j(f)`` over ``n`` random ``f`` scaled to ``Pi_{j-1}(f^2) = 1``.

    A lower bound for :func:`alpha_j`, used as an independent cross-check.
    """
    g = alpha_profile(chain, j)
    p = chain.pi[j - 1]
    f = rng.standard_normal((n, chain.N))
    # sharpen a fraction of the draws towards point masses
    f[: n // 2] **= 4
    f2 = f * f
    f2 /= (f2 * p).sum(axis=1, keepdims=True)
    return float(((f2 * p) * g).sum(axis=1).max())


def lambda_j(chain: FiniteChain, j: int, return_vector: bool = False):
    """Spectral gap of ``Q_j``: the infimum over non-constant ``f`` of

    ``sum_{x,z} W(x, z) (f(z) - f(x))^2 / (2 Var_{j-1}(f))``.

    The Dirichlet form is ``2 f' (D - W) f`` with ``D`` the row sums of
    ``W``. After the change of variables ``g = sqrt(Pi_{j-1}) f`` and
    projection onto the complement of ``sqrt(Pi_{j-1})`` (the
    ``Pi_{j-1}``-mean-zero functions) this is the smallest eigenvalue of a
    dense symmetric matrix.
    """
    _check_j(chain, j)
    if chain.N < 2:
        raise ValueError("spectral gap needs at least two states")
    W = w_matrix(chain, j)
    W = 0.5 * (W + W.T)
    lap = np.diag(W.sum(axis=1)) - W
    u = np.sqrt(chain.pi[j - 1])
    S = lap / u[:, None] / u[None, :]
    U = linalg.null_space(u[None, :])
    T = U.T @ S @ U
    T = 0.5 * (T + T.T)
    vals, vecs = linalg.eigh(T, subset_by_index=[0, 0], driver="evr")
    lam = float(vals[0])
    v = vecs[:, 0]
    resid = np.linalg.norm(T @ v - lam * v)
    if resid > EIG_RESIDUAL_TOL * max(1.0, np.abs(T).max()):
        raise NumericalFailure(f"eigen-solve residual {resid:.3e} above tolerance at j={j}")
    if return_vector:
        f = (U @ v) / u
        return lam, f
    return lam


def spectrum(chain: FiniteChain) -> tuple[np.ndarray, np.ndarray]:
    """``(alpha_1..alpha_L, lambda_1..lambda_L)``, cached on the chain."""
    if "spectrum" not in chain._cache:
        a = np.array([alpha_j(chain, j) for j in range(1, chain.L + 1)])
        lam = np.array([lambda_j(chain, j) for j in range(1, chain.L + 1)])
        chain._cache["spectrum"] = (a, lam)
    return chain._cache["spectrum"]


def capital_lambda_from(alpha, lam) -> float:
    """``sum_{i=1}^L alpha_i prod_{l=i+1}^L (1 - lambda_l + alpha_l)`` (``alpha_0 = 0``)."""
    a = np.asarray(alpha, dtype=float)
    lam = np.asarray(lam, dtype=float)
    total = 0.0
    tail = 1.0
    for i in range(len(a) - 1, -1, -1):
        total += a[i] * tail
        tail *= 1.0 - lam[i] + a[i]
    return float(total)


def capital_lambda(chain: FiniteChain) -> float:
    return capital_lambda_from(*spectrum(chain))
