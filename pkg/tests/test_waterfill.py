import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cyclocap.errors import DomainError, UnsupportedError
from cyclocap.waterfill import (
    awgn_capacity,
    bruteforce_capacity,
    kkt_residual,
    sync_capacity,
    water_level,
    water_level_sorted,
)

variances = arrays(np.float64, st.integers(1, 12), elements=st.floats(0.05, 20.0))
powers = st.floats(0.01, 50.0)


def test_awgn_half_bit():
    assert sync_capacity([1.0], 1.0).capacity_bits == pytest.approx(0.5, abs=1e-12)
    assert sync_capacity(np.ones(7), 1.0).capacity_bits == pytest.approx(0.5, abs=1e-12)
    assert awgn_capacity(1.0, 1.0, "e") == pytest.approx(0.5 * math.log(2))


def test_hand_solved_levels():
    # [1, 1], P = 3: both active, delta = 1 + 3.
    assert water_level([1.0, 1.0], 3.0) == pytest.approx(4.0, abs=1e-12)
    # [0.2, 5, 0.2], P = 1: delta = (3 + 0.4) / 2 = 1.7 < 5.
    sol = sync_capacity([0.2, 5.0, 0.2], 1.0)
    assert sol.delta == pytest.approx(1.7, abs=1e-12)
    assert sol.capacity_bits == pytest.approx(2 * math.log2(8.5) / 6, abs=1e-12)
    assert np.allclose(sol.allocation, [1.5, 0.0, 1.5])


@given(variances, powers)
def test_bisection_matches_sorted_closed_form(s, p):
    assert water_level(s, p) == pytest.approx(water_level_sorted(s, p), rel=1e-10)


@given(variances, powers)
def test_power_balance_and_kkt(s, p):
    sol = sync_capacity(s, p)
    assert sol.allocation.mean() == pytest.approx(p, rel=1e-10)
    assert np.all(sol.allocation >= 0)
    assert kkt_residual(s, sol) <= 1e-9


@given(variances, powers, st.randoms(use_true_random=False))
def test_permutation_invariance(s, p, rnd):
    perm = list(range(s.size))
    rnd.shuffle(perm)
    a = sync_capacity(s, p).capacity_bits
    b = sync_capacity(s[perm], p).capacity_bits
    assert a == pytest.approx(b, abs=1e-12)


@given(variances, powers, st.sampled_from([0.1, 3.0, 10.0]))
def test_scaling_invariance(s, p, kappa):
    a = sync_capacity(s, p).capacity_bits
    b = sync_capacity(kappa**2 * s, kappa**2 * p).capacity_bits
    assert a == pytest.approx(b, abs=1e-12)


@given(variances, powers, st.floats(1.01, 5.0))
def test_monotone_in_power(s, p, factor):
    assert sync_capacity(s, p * factor).capacity_bits >= sync_capacity(s, p).capacity_bits - 1e-12


@given(variances, powers)
def test_bounded_by_extreme_awgn(s, p):
    c = sync_capacity(s, p).capacity_bits
    assert awgn_capacity(s.max(), p) - 1e-12 <= c <= awgn_capacity(s.min(), p) + 1e-12


@given(variances, powers)
def test_waterfill_beats_uniform(s, p):
    uniform = np.log2(1 + p / s).mean() / 2
    assert sync_capacity(s, p).capacity_bits >= uniform - 1e-12


@settings(max_examples=15, deadline=None)
@given(arrays(np.float64, st.integers(1, 4), elements=st.floats(0.1, 10.0)), st.floats(0.1, 10.0))
def test_bruteforce_oracle(s, p):
    assert sync_capacity(s, p).capacity_bits == pytest.approx(bruteforce_capacity(s, p), abs=2e-3)


def test_bisection_iterations_bounded():
    _, it = water_level(np.geomspace(0.01, 100, 50), 2.0, return_iterations=True)
    assert it <= 200


def test_errors():
    with pytest.raises(DomainError):
        sync_capacity([1.0], 0.0)
    with pytest.raises(DomainError):
        sync_capacity([1.0, 0.0], 1.0)
    with pytest.raises(DomainError):
        sync_capacity([1.0, np.nan], 1.0)
    with pytest.raises(UnsupportedError):
        bruteforce_capacity(np.ones(5), 1.0)
    with pytest.raises(DomainError):
        bruteforce_capacity(np.ones(2), 1.0, grid_steps=50)
    with pytest.raises(DomainError):
        sync_capacity([1.0], 1.0).capacity("10")
