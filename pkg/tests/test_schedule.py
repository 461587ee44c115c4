import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclical_mcmc import Schedule, beta_at, beta_derivative


def test_examples():
    s = Schedule(100)
    assert beta_at(s, 0.25) == pytest.approx(0.5, abs=1e-15)
    assert beta_at(s, 0.5) == 0.001
    assert beta_at(s, 1.3) == pytest.approx(beta_at(s, 0.3), abs=1e-14)
    assert beta_at(s, 0.0) == 1.0
    assert beta_at(s, 7.0) == 1.0


def test_cycle_ends_exact():
    s = Schedule(37, r=2.0)
    assert all(s.beta_step(k * 37) == 1.0 for k in range(10))
    assert np.all(s.beta_steps(np.arange(0, 370, 37)) == 1.0)
    b = s.cycle_betas()
    assert len(b) == 38 and b[0] == b[-1] == 1.0


def test_vectorised_matches_scalar():
    s = Schedule(64, r=1.5)
    j = np.arange(0, 300)
    assert np.array_equal(s.beta_steps(j), np.array([s.beta_step(int(k)) for k in j]))


def test_floor_zero_allowed():
    s = Schedule(4, floor=0.0)
    assert s.beta_step(2) == 0.0


def test_validation():
    for bad in (dict(L=0), dict(L=10, r=0.5), dict(L=10, floor=1.0), dict(L=2.5)):
        with pytest.raises(ValueError):
            Schedule(**bad)
    with pytest.raises(ValueError):
        beta_at(Schedule(10), -0.1)


def test_derivative_examples():
    s = Schedule(10)
    assert beta_derivative(s, 0.25).value == pytest.approx(-math.pi)
    assert beta_derivative(s, 0.75).value == pytest.approx(math.pi)
    assert abs(beta_derivative(s, 1e-9).value) < 1e-7
    res = beta_derivative(s, 0.5)
    assert res.floored
    with pytest.raises(ValueError):
        beta_derivative(s, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.02, 0.98), st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_derivative_matches_finite_difference(t, r):
    s = Schedule(10, r=r, floor=0.0)
    h = 1e-6
    raw = lambda u: 0.5 * (1 + math.cos(2 * math.pi * u ** r))  # noqa: E731
    fd = (raw(t + h) - raw(t - h)) / (2 * h)
    assert beta_derivative(s, t).value == pytest.approx(fd, abs=1e-6)


def test_periodic_random():
    rng = np.random.default_rng(3)
    s = Schedule(50, r=2.0)
    for t in rng.uniform(0, 20, 1000):
        assert beta_at(s, t) == pytest.approx(beta_at(s, t + 1.0), abs=1e-12)


@pytest.mark.parametrize("r", [1.0, 2.0, 5.0])
def test_monotone_halves(r):
    s = Schedule(10, r=r, floor=0.0)
    first = [beta_at(s, t) for t in np.linspace(0, 0.5 ** (1 / r), 1000)]
    second = [beta_at(s, t) for t in np.linspace(0.5 ** (1 / r), 1 - 1e-9, 1000)]
    assert np.all(np.diff(first) <= 1e-15)
    assert np.all(np.diff(second) >= -1e-15)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 500), st.integers(0, 10_000))
def test_values_in_range(L, j):
    s = Schedule(L)
    b = s.beta_step(j)
    assert s.floor <= b <= 1.0
