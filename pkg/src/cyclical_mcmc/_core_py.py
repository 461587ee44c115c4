"""Pure-Python Metropolis-Hastings segment kernel.

Reference implementation of ``_core.run_segment``. Both kernels consume the
same pre-drawn uniforms and perform floating-point operations in the same
order, so they produce bit-identical chains.

Layout of ``draws`` (one row per step, ``2 * d + 1`` columns): column 0 is
the acceptance uniform, columns ``1 + 2k`` and ``2 + 2k`` feed axis ``k``.
"""
import math

GAUSSIAN = 0
UNIFORM = 1
LATTICE = 2

MODE_PLAIN = 0
MODE_RESTRICT = 1
MODE_WATCH = 2

BACKEND = "python"


def _energy(x, log_coef, means, inv2var, work):
    n = len(log_coef)
    d = len(x)
    mx = -math.inf
    for c in range(n):
        s = 0.0
        mc = means[c]
        for k in range(d):
            dd = x[k] - mc[k]
            s += dd * dd
        a = log_coef[c] - s * inv2var[c]
        work[c] = a
        if a > mx:
            mx = a
    tot = 0.0
    for c in range(n):
        tot += math.exp(work[c] - mx)
    return -(mx + math.log(tot))


def energy(x, log_coef, means, inv2var):
    return _energy(list(x), list(log_coef), [list(m) for m in means], list(inv2var),
                   [0.0] * len(log_coef))


def run_segment(theta, betas, draws, family, base, q, neighbors,
                log_coef, means, inv2var, lower, upper, region_lo, region_hi, mode,
                acc_counts, prop_counts, trace, trace_every, step_offset):
    """Advance ``theta`` (modified in place) through ``len(betas)`` MH steps.

    Returns ``(n_trace, exit_index)``. ``exit_index`` is the 0-based step at
    which the state first left the region in watch mode, else -1.
    """
    n_steps = len(betas)
    d = len(theta)
    x = [float(v) for v in theta]
    prop = [0.0] * d
    lc = [float(v) for v in log_coef]
    mu = [[float(v) for v in row] for row in means]
    iv = [float(v) for v in inv2var]
    lo = [float(v) for v in lower]
    hi = [float(v) for v in upper]
    rlo = [float(v) for v in region_lo]
    rhi = [float(v) for v in region_hi]
    work = [0.0] * len(lc)
    betas = [float(b) for b in betas]
    m = int(neighbors)
    n_trace = 0
    exit_index = -1

    e_cur = _energy(x, lc, mu, iv, work)
    for i in range(n_steps):
        beta = betas[i]
        row = draws[i]
        if family == GAUSSIAN:
            scale = math.sqrt(base * math.pow(beta, -q))
            for k in range(d):
                u1 = float(row[1 + 2 * k])
                u2 = float(row[2 + 2 * k])
                z = math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)
                prop[k] = x[k] + scale * z
        elif family == UNIFORM:
            width = base * math.pow(beta, -q)
            for k in range(d):
                prop[k] = x[k] + width * (2.0 * float(row[1 + 2 * k]) - 1.0)
        else:
            for k in range(d):
                j = int(float(row[1 + 2 * k]) * 2 * m)
                off = j - m if j < m else j - m + 1
                prop[k] = x[k] + base * off

        b = int(beta * 10.0)
        if b > 9:
            b = 9
        prop_counts[b] += 1

        ok = True
        for k in range(d):
            if prop[k] < lo[k] or prop[k] > hi[k]:
                ok = False
                break
        if ok and mode == MODE_RESTRICT:
            for k in range(d):
                if prop[k] < rlo[k] or prop[k] > rhi[k]:
                    ok = False
                    break
        if ok:
            e_prop = _energy(prop, lc, mu, iv, work)
            de = e_prop - e_cur
            if de <= 0.0 or float(row[0]) < math.exp(-beta * de):
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
                if x[k] < rlo[k] or x[k] > rhi[k]:
                    outside = True
                    break
            if outside:
                exit_index = i
                break

    for k in range(d):
        theta[k] = x[k]
    return n_trace, exit_index
