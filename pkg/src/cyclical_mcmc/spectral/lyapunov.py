"""Quadrature check of an explicit exponential drift function.

The kernel is Metropolis-Hastings with target ``N(0, s c^2 sigma^2)`` and a
uniform proposal on ``[theta - s sigma, theta + s sigma]``. The candidate
drift function is ``V(theta) = exp(alpha |theta| / sigma)`` and the claimed
inequality is ``KV <= 0.7 V + exp(2 s alpha) 1{|theta| <= s sigma}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .gaps import NumericalFailure

__all__ = ["LyapunovReport", "drift_image", "check_lyapunov_lemma"]

CONTRACTION = 0.7


def _window_integrals(theta: float, sigma: float, s: float, c: float, alpha: float, rtol: float):
    """``(A, I)`` with ``A = int a(x) dx`` and ``I = int a(x) V(theta + x) dx`` over the window.

    Integration is in the unit variable ``u = x / (s sigma)``; the integrands
    are positive, so the relative tolerance is meaningful for both.
    """
    h = s * sigma
    var = s * c * c * sigma * sigma
    k = alpha / sigma

    def acc(u):
        y = theta + u * h
        return math.exp(min(0.0, -(y * y - theta * theta) / (2.0 * var)))

    def accV(u):
        y = theta + u * h
        return acc(u) * math.exp(k * abs(y))

    # kinks: acceptance at |y| = |theta|, V at y = 0
    pts = sorted({p for p in (0.0, -theta / h, -2.0 * theta / h) if -1.0 < p < 1.0})
    out = []
    for f in (acc, accV):
        val, err, *rest = integrate.quad(f, -1.0, 1.0, points=pts or None, epsabs=0.0,
                                         epsrel=rtol, limit=200, full_output=1)
        if len(rest) > 1 or err > rtol * abs(val) * 10.0:
            raise NumericalFailure(f"quadrature did not converge at theta={theta}: err={err:.2e}")
        out.append(val * 0.5)  # uniform density 1/(2h), dx = h du
    return out[0], out[1]


def drift_image(theta: float, sigma: float, s: float, c: float, alpha: float, rtol: float = 1e-8) -> float:
    """``(KV)(theta)``: accepted moves carry ``V`` of the proposal, rejections keep ``V(theta)``."""
    V = math.exp(alpha * abs(theta) / sigma)
    if s == 0.0:
        return V
    A, I = _window_integrals(theta, sigma, s, c, alpha, rtol)
    return I + (1.0 - A) * V


@dataclass
class LyapunovReport:
    max_violation: float
    argmax_theta: float
    theta: np.ndarray
    KV: np.ndarray
    V: np.ndarray
    sigma: float
    s: float
    c: float
    alpha: float

    @property
    def ratio(self) -> np.ndarray:
        return self.KV / self.V

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "s": self.s,
            "c": self.c,
            "alpha": self.alpha,
            "max_violation": self.max_violation,
            "argmax_theta": self.argmax_theta,
            "max_ratio_KV_over_V": float(self.ratio.max()),
            "holds": self.max_violation <= 0.0,
        }


def check_lyapunov_lemma(sigma: float, s: float, c: float, alpha_exp: float, theta_grid,
                         rtol: float = 1e-8, strict: bool = True) -> LyapunovReport:
    """Largest value of ``KV - 0.7 V - exp(2 s alpha) 1{|theta| <= s sigma}`` on ``theta_grid``.

    ``strict`` enforces ``0 < sigma < alpha_exp``, ``s`` in ``[0.5, 2]`` and
    ``0.5 < c < 2``; pass ``strict=False`` to probe degenerate inputs such
    as ``s = 0`` (the identity kernel).
    """
    if strict:
        if not (0.0 < sigma < alpha_exp):
            raise ValueError("need 0 < sigma < alpha_exp")
        if not (0.5 <= s <= 2.0):
            raise ValueError("s must lie in [0.5, 2]")
        if not (0.5 < c < 2.0):
            raise ValueError("c must lie in (0.5, 2)")
    elif sigma <= 0 or s < 0 or c <= 0:
        raise ValueError("sigma and c must be positive and s non-negative")
    theta = np.asarray(theta_grid, dtype=float)
    KV = np.array([drift_image(float(t), sigma, s, c, alpha_exp, rtol) for t in theta])
    V = np.exp(alpha_exp * np.abs(theta) / sigma)
    small = np.where(np.abs(theta) <= s * sigma, math.exp(2.0 * s * alpha_exp), 0.0)
    viol = KV - CONTRACTION * V - small
    i = int(np.argmax(viol))
    return LyapunovReport(float(viol[i]), float(theta[i]), theta, KV, V, sigma, s, c, alpha_exp)
