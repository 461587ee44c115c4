# cython: language_level=3
"""Compiled Metropolis-Hastings segment kernel.

Mirrors ``_core_py.run_segment`` operation for operation; see that module
for the layout of ``draws`` and the meaning of the arguments.
"""
from libc.math cimport exp, log, sqrt, cos, pow, INFINITY, M_PI

import numpy as np

BACKEND = "cython"

cdef int GAUSSIAN = 0
cdef int UNIFORM = 1
cdef int LATTICE = 2
cdef int MODE_RESTRICT = 1
cdef int MODE_WATCH = 2


cdef inline double _energy(double[::1] x, const double[::1] log_coef, const double[:, ::1] means,
                           const double[::1] inv2var, double[::1] work) noexcept nogil:
    cdef Py_ssize_t n = log_coef.shape[0]
    cdef Py_ssize_t d = x.shape[0]
    cdef Py_ssize_t c, k
    cdef double mx = -INFINITY
    cdef double s, dd, a, tot
    for c in range(n):
        s = 0.0
        for k in range(d):
            dd = x[k] - means[c, k]
            s += dd * dd
        a = log_coef[c] - s * inv2var[c]
        work[c] = a
        if a > mx:
            mx = a
    tot = 0.0
    for c in range(n):
        tot += exp(work[c] - mx)
    return -(mx + log(tot))


def energy(x, log_coef, means, inv2var):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] work = np.empty(len(log_coef))
    return _energy(xv, np.ascontiguousarray(log_coef, dtype=np.float64),
                   np.ascontiguousarray(means, dtype=np.float64),
                   np.ascontiguousarray(inv2var, dtype=np.float64), work)


def run_segment(double[::1] theta, const double[::1] betas, const double[:, ::1] draws,
                int family, double base, double q, int neighbors,
                const double[::1] log_coef, const double[:, ::1] means, const double[::1] inv2var,
                const double[::1] lower, const double[::1] upper,
                const double[::1] region_lo, const double[::1] region_hi, int mode,
                long long[::1] acc_counts, long long[::1] prop_counts,
                double[:, ::1] trace, long long trace_every, long long step_offset):
    cdef Py_ssize_t n_steps = betas.shape[0]
    cdef Py_ssize_t d = theta.shape[0]
    cdef double[::1] x = np.array(theta, dtype=np.float64)
    cdef double[::1] prop = np.empty(d)
    cdef double[::1] work = np.empty(log_coef.shape[0])
    cdef Py_ssize_t i, k, n_trace = 0, exit_index = -1
    cdef int m = neighbors, j, off, b
    cdef bint ok, outside
    cdef double beta, scale, width, u1, u2, z, e_cur, e_prop, de

    with nogil:
        e_cur = _energy(x, log_coef, means, inv2var, work)
        for i in range(n_steps):
            beta = betas[i]
            if family == GAUSSIAN:
                scale = sqrt(base * pow(beta, -q))
                for k in range(d):
                    u1 = draws[i, 1 + 2 * k]
                    u2 = draws[i, 2 + 2 * k]
                    z = sqrt(-2.0 * log(1.0 - u1)) * cos(2.0 * M_PI * u2)
                    prop[k] = x[k] + scale * z
            elif family == UNIFORM:
                width = base * pow(beta, -q)
                for k in range(d):
                    prop[k] = x[k] + width * (2.0 * draws[i, 1 + 2 * k] - 1.0)
            else:
                for k in range(d):
                    j = <int>(draws[i, 1 + 2 * k] * 2 * m)
                    if j < m:
                        off = j - m
                    else:
                        off = j - m + 1
                    prop[k] = x[k] + base * off

            b = <int>(beta * 10.0)
            if b > 9:
                b = 9
            prop_counts[b] += 1

            ok = True
            for k in range(d):
                if prop[k] < lower[k] or prop[k] > upper[k]:
                    ok = False
                    break
            if ok and mode == MODE_RESTRICT:
                for k in range(d):
                    if prop[k] < region_lo[k] or prop[k] > region_hi[k]:
                        ok = False
                        break
            if ok:
                e_prop = _energy(prop, log_coef, means, inv2var, work)
                de = e_prop - e_cur
                if de <= 0.0 or draws[i, 0] < exp(-beta * de):
                    for k in range(d):
                        x[k] = prop[k]
                    e_cur = e_prop
                    acc_counts[b] += 1

            if trace_every > 0 and (step_offset + i + 1) % trace_every == 0:
                for k in range(d):
                    trace[n_trace, k] = x[k]
                n_trace += 1

            if mode == MODE_WATCH:
                outside = False
                for k in range(d):
                    if x[k] < region_lo[k] or x[k] > region_hi[k]:
                        outside = True
                        break
                if outside:
                    exit_index = i
                    break

        for k in range(d):
            theta[k] = x[k]
    return n_trace, exit_index
