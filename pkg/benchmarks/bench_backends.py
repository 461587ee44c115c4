"""Compare the compiled and pure-Python segment kernels.

Usage::

    python benchmarks/bench_backends.py [--steps 200000] [--repeats 3]

Both kernels consume the same draws, so the final states are also checked
for bit equality.
"""
import argparse
import time

import numpy as np

from cyclical_mcmc import Schedule, build_preset
from cyclical_mcmc import _core_py
from cyclical_mcmc.kernels import ProposalSpec, draw_block, kernel_arrays

try:
    from cyclical_mcmc import _core
except ImportError:  # extension not built
    _core = None

CASES = [
    ("toy1d-equal", ProposalSpec("gaussian-isotropic", 0.25, 1.0)),
    ("grid2d-unequal", ProposalSpec("gaussian-isotropic", 0.01, 0.5)),
]


def time_kernel(mod, target, spec, n, repeats):
    log_coef, means, inv2var, lo, hi = kernel_arrays(target)
    d = target.dimension
    betas = Schedule(2000).beta_steps(np.arange(1, n + 1))
    draws = draw_block(np.random.default_rng(0), n, d)
    best, theta = np.inf, None
    for _ in range(repeats):
        theta = np.array(target.means[0], dtype=float)
        t0 = time.perf_counter()
        mod.run_segment(theta, betas, draws, spec.code, spec.base_variance, spec.q, spec.neighbors,
                        log_coef, means, inv2var, lo, hi, np.full(d, -np.inf), np.full(d, np.inf), 0,
                        np.zeros(10, np.int64), np.zeros(10, np.int64), np.empty((0, d)), 0, 0)
        best = min(best, time.perf_counter() - t0)
    return best, theta


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    print(f"{'target':<16}{'backend':<10}{'steps/s':>14}{'speedup':>10}  identical")
    for name, spec in CASES:
        t = build_preset(name)
        t_py, x_py = time_kernel(_core_py, t, spec, args.steps, args.repeats)
        print(f"{name:<16}{'python':<10}{args.steps / t_py:>14.0f}{1.0:>10.1f}")
        if _core is None:
            print(f"{name:<16}{'cython':<10}{'not built':>14}")
            continue
        t_cy, x_cy = time_kernel(_core, t, spec, args.steps, args.repeats)
        print(f"{name:<16}{'cython':<10}{args.steps / t_cy:>14.0f}{t_py / t_cy:>10.1f}  "
              f"{np.array_equal(x_py, x_cy)}")


if __name__ == "__main__":
    main()
