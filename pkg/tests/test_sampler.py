import math

import numpy as np
import pytest
from scipy import stats

from cyclical_mcmc import Schedule, build_preset, two_mode_target
from cyclical_mcmc.experiments import preset_run_config
from cyclical_mcmc.kernels import ModeRegion, ProposalSpec
from cyclical_mcmc.sampler import (
    InitialDistribution,
    RunConfig,
    estimate_escape_probability,
    make_rng,
    replica_map,
    run_cyclical,
    run_cycles,
    run_within_mode,
    within_mode_replicas,
)
from cyclical_mcmc.spectral import discretize, escape_probabilities, restricted_end_laws


def _cfg(K=3, L=200, seed=0, **kw):
    return RunConfig(K=K, schedule=Schedule(L), proposal=ProposalSpec(), seed=seed, **kw)


def test_output_length_and_metadata():
    out = run_cyclical(_cfg(K=3), build_preset("toy1d-equal"))
    assert out.cycle_end_samples.shape == (3, 1)
    md = out.metadata
    assert md["seed"] == 0 and md["preset"] == "toy1d-equal"
    assert "PCG64" in md["rng_algorithm"]
    for key in ("started", "finished", "wall_time_s", "backend", "config"):
        assert key in md
    rates = [r for r in out.acceptance_by_phase if r is not None]
    assert rates and all(0.0 <= r <= 1.0 for r in rates)
    assert sum(out.proposals_by_phase) == 3 * 200


def test_same_seed_bit_identical():
    t = build_preset("grid2d-unequal")
    cfg = preset_run_config("grid2d-unequal", seed=11)
    cfg = RunConfig(K=20, schedule=Schedule(300), proposal=cfg.proposal, init=cfg.init, seed=11)
    a, b = run_cyclical(cfg, t), run_cyclical(cfg, t)
    assert np.array_equal(a.cycle_end_samples, b.cycle_end_samples)
    assert np.array_equal(a.thinned_trace, b.thinned_trace)
    c = run_cyclical(RunConfig(K=20, schedule=Schedule(300), proposal=cfg.proposal, init=cfg.init, seed=12), t)
    assert not np.array_equal(a.cycle_end_samples, c.cycle_end_samples)


def test_trace_thinning():
    out = run_cyclical(_cfg(K=4, L=200), build_preset("toy1d-equal"))
    assert out.thinned_trace.shape == (4 * 100, 1)
    # the last trace row of each cycle is the cycle-end sample
    assert np.array_equal(out.thinned_trace[99::100], out.cycle_end_samples)
    assert run_cyclical(_cfg(K=2, thinning=0), build_preset("toy1d-equal")).thinned_trace is None
    with pytest.raises(ValueError):
        run_cyclical(_cfg(K=2, L=200, thinning=3), build_preset("toy1d-equal"))


def test_stream_splitting_consistency():
    t = build_preset("toy1d-unequal")
    s, spec = Schedule(150), ProposalSpec()
    rng_a, rng_b = make_rng(5), make_rng(5)
    xa, xb = np.array([0.3]), np.array([0.3])
    ends_a, _ = run_cycles(t, s, spec, xa, rng_a, 6)
    ends_b = [run_cycles(t, s, spec, xb, rng_b, 1, start_cycle=k)[0][0] for k in range(6)]
    assert np.array_equal(ends_a, np.array(ends_b))


def test_invalid_configs():
    with pytest.raises(ValueError):
        _cfg(K=0)
    with pytest.raises(ValueError):
        _cfg(seed=-1)
    with pytest.raises(ValueError):
        _cfg(seed=1 << 64)
    t = build_preset("toy1d-equal")
    with pytest.raises(ValueError):
        run_cyclical(_cfg(init=InitialDistribution("point", (50.0,))), t)
    with pytest.raises(ValueError):
        InitialDistribution("cauchy")


def test_initial_distribution_roundtrip():
    for init in (InitialDistribution(), InitialDistribution("point", (1.0, 2.0)),
                 InitialDistribution("uniform", low=(-6, -6), high=(6, 6)), InitialDistribution("target")):
        assert InitialDistribution.from_dict(init.to_dict()) == init


def test_stationarity_ks():
    # beta == 1 at every step when L = 1; each replica starts from an exact draw
    t = build_preset("toy1d-equal")
    cfg = RunConfig(K=20, schedule=Schedule(1), proposal=ProposalSpec(), init=InitialDistribution("target"))

    def one(rng, i):
        c = RunConfig(K=cfg.K, schedule=cfg.schedule, proposal=cfg.proposal, init=cfg.init, seed=1000 + i,
                      thinning=0)
        return run_cyclical(c, t).cycle_end_samples[-1, 0]

    n = 10_000
    chain = np.array(replica_map(one, n, 0))
    direct = t.sample(np.random.default_rng(99), n)[:, 0]
    res = stats.ks_2samp(chain, direct)
    crit = 1.628 * math.sqrt(2.0 / n)  # two-sample 1% critical value
    assert res.statistic < crit


def test_acceptance_by_phase_reproducible_across_seeds():
    t = build_preset("toy1d-equal")
    outs = [run_cyclical(_cfg(K=200, L=2000, seed=s), t) for s in (0, 1)]
    for b in range(10):
        n0, n1 = outs[0].proposals_by_phase[b], outs[1].proposals_by_phase[b]
        p0, p1 = outs[0].acceptance_by_phase[b], outs[1].acceptance_by_phase[b]
        if not n0:
            assert not n1
            continue
        se = math.sqrt(p0 * (1 - p0) / n0 + p1 * (1 - p1) / n1)
        assert abs(p0 - p1) < 3 * se + 1e-12


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_toy_equal_weight_at_long_run(seed):
    from cyclical_mcmc.diagnostics import default_regions, estimate_weights

    t = build_preset("toy1d-equal")
    out = run_cyclical(preset_run_config("toy1d-equal", seed, paper_scale=True), t)
    w = estimate_weights(out.cycle_end_samples, default_regions(t)).weights[0]
    assert 0.45 <= w <= 0.55


def test_replica_map_order_and_substreams():
    seq = replica_map(lambda rng, i: (i, rng.random()), 8, 42)
    par = replica_map(lambda rng, i: (i, rng.random()), 8, 42, workers=4)
    assert seq == par
    assert [i for i, _ in seq] == list(range(8))
    assert seq[3][1] == np.random.Generator(np.random.PCG64(42 ^ 3)).random()
    with pytest.raises(ValueError):
        replica_map(lambda rng, i: i, 0, 1)


# --- within-mode and escape -------------------------------------------------

def _two_mode_setup(N=80, L=128, m=1):
    t = two_mode_target(0.05, 0.5)
    chain = discretize(t, (-2.0, 2.0), N, m, Schedule(L))
    h = float(chain.grid[1] - chain.grid[0])
    thetas = [chain.index_set(-1.5, -0.5), chain.index_set(0.5, 1.5)]
    # boxes whose faces sit half a grid step outside the extreme grid points
    boxes = tuple(([chain.grid[s].min() - h / 2], [chain.grid[s].max() + h / 2]) for s in thetas)
    inner = tuple(([chain.grid[s].min() - h / 2], [chain.grid[s].max() + h / 2])
                  for s in (chain.index_set(-1.2, -0.8), chain.index_set(0.8, 1.2)))
    regions = ModeRegion(boxes, inner)
    cfg = RunConfig(K=1, schedule=Schedule(L), proposal=ProposalSpec("lattice", h, 0.0, m), seed=3)
    return t, chain, thetas, regions, cfg


def test_within_mode_one_step():
    t, chain, thetas, regions, cfg = _two_mode_setup()
    res = run_within_mode(cfg, t, regions, 1, [1.0], cfg.schedule.L - 1)
    assert res.trace.shape == (1, 1)
    with pytest.raises(ValueError):
        run_within_mode(cfg, t, regions, 1, [1.45], 10)  # outside the inner set
    with pytest.raises(ValueError):
        run_within_mode(cfg, t, regions, 1, [1.0], cfg.schedule.L)


def test_within_mode_full_domain_matches_unrestricted():
    t = build_preset("toy1d-equal")
    lo, hi = t.bounds()
    regions = ModeRegion(((lo, hi),))
    cfg = _cfg(K=1, L=400, seed=8)
    res = run_within_mode(cfg, t, regions, 0, [5.0], 200)
    from cyclical_mcmc.kernels import draw_block, run_steps

    x = np.array([5.0])
    run_steps(t, cfg.proposal, x, cfg.schedule.beta_steps(np.arange(201, 401)), draw_block(make_rng(8), 200, 1))
    assert np.array_equal(res.final, x)


def test_within_mode_law_matches_grid_propagation():
    t, chain, thetas, regions, cfg = _two_mode_setup()
    start_idx = int(chain.index_set(0.9, 1.1)[0])
    start = float(chain.grid[start_idx])
    L2 = 64
    ends = within_mode_replicas(cfg, t, regions, 1, [start], L2, 10_000)[:, 0]
    law = restricted_end_laws(chain, thetas[1], L2, [start_idx])[0]
    idx = np.rint((ends - chain.grid[0]) / (chain.grid[1] - chain.grid[0])).astype(int)
    emp = np.bincount(idx - thetas[1][0], minlength=len(thetas[1])) / len(ends)
    assert np.abs(emp - law).sum() < 0.1


def test_escape_trivial_cases():
    t, chain, thetas, regions, cfg = _two_mode_setup()
    frozen = RunConfig(K=1, schedule=cfg.schedule, proposal=ProposalSpec("gaussian-isotropic", 0.0, 1.0))
    assert estimate_escape_probability(frozen, t, regions, 0, [-1.0], 64, 200).probability == 0.0
    lo, hi = t.bounds()
    whole = ModeRegion(((lo, hi),))
    assert estimate_escape_probability(cfg, t, whole, 0, [-1.0], 64, 200).probability == 0.0
    with pytest.raises(ValueError):
        estimate_escape_probability(cfg, t, regions, 0, [-1.0], 64, 0)


def test_escape_matches_absorbing_chain():
    t, chain, thetas, regions, cfg = _two_mode_setup()
    L2 = 64
    for j, name in ((0, (-1.2, -0.8)), (1, (0.8, 1.2))):
        inner = chain.index_set(*name)
        exact = escape_probabilities(chain, thetas[j], L2, inner)
        k = int(np.argmax(exact))
        est = estimate_escape_probability(cfg, t, regions, j, [float(chain.grid[inner[k]])], L2, 20_000)
        assert abs(est.probability - exact[k]) <= 3 * max(est.standard_error, 1e-4)
