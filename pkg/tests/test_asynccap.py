import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclocap.asynccap import (
    SweepResult,
    async_capacity,
    capacity_sequence,
    default_n_range,
    liminf_estimate,
    rationalize_ratio,
    sweep_offset,
    sweep_power,
    sweep_ratio,
)
from cyclocap.errors import DomainError, ResourceError
from cyclocap.profile import epsilon_n, reference_profile, sample_variances
from cyclocap.waterfill import sync_capacity

PROFILE = reference_profile(0.47)


def test_eps_zero_sequence_is_constant():
    seq = capacity_sequence(PROFILE, 2, 0, 1.0, 1, 100, tail_window=50)
    caps = seq.capacities()
    assert np.ptp(caps) == 0.0
    ref = sync_capacity(sample_variances(PROFILE, 2, 0, 1), 1.0).capacity_bits
    assert caps[0] == pytest.approx(ref, abs=1e-12)


def test_sequence_entries_use_floor_rationalization():
    seq = capacity_sequence(PROFILE, 2, math.pi / 7, 1.0, 1, 60, tail_window=20)
    for e in seq.entries:
        assert e.eps_n == epsilon_n(math.pi / 7, e.n)
        assert e.period_len == 2 * e.eps_n.denominator + e.eps_n.numerator
        assert e.capacity_nats == pytest.approx(e.capacity_bits * math.log(2))


@given(st.integers(1, 9), st.integers(2, 9))
@settings(max_examples=20, deadline=None)
def test_rational_eps_recovered_at_multiples(u, v):
    if u >= v or math.gcd(u, v) != 1:
        return
    eps = Fraction(u, v)
    seq = capacity_sequence(PROFILE, 2, eps, 1.0, v, 3 * v, step=v, tail_window=1)
    exact = async_capacity(PROFILE, 2, eps, 1.0).capacity_bits
    assert np.allclose(seq.capacities(), exact, atol=1e-12)


def test_liminf_is_tail_minimum():
    seq = capacity_sequence(PROFILE, 2, math.pi / 7, 1.0, 1, 120, tail_window=40)
    tail = seq.capacities()[-40:]
    assert seq.liminf_estimate == tail.min()
    assert seq.tail_spread == pytest.approx(tail.max() - tail.min())
    est = liminf_estimate(seq, 40, threshold=1e-9)
    assert not est.converged
    with pytest.raises(DomainError):
        liminf_estimate(seq, 500)
    with pytest.raises(DomainError):
        liminf_estimate(seq, 0)


def test_liminf_in_nats_matches_bits():
    seq = capacity_sequence(PROFILE, 2, math.pi / 7, 1.0, 200, 300, tail_window=100)
    bits = liminf_estimate(seq, 100, log_base="2").value
    nats = liminf_estimate(seq, 100, log_base="e").value
    assert nats == pytest.approx(bits * math.log(2))


def test_period_cap_truncates_with_warning():
    seq = capacity_sequence(PROFILE, 2, math.pi / 7, 1.0, 1, 100, period_cap=60)
    assert 0 < len(seq.entries) < 100
    assert seq.metadata["warnings"]


def test_default_n_range_scales_with_distance_to_integer():
    assert default_n_range(math.pi / 7) == (251, 500)
    lo, hi = default_n_range(math.pi / 1000)
    assert hi >= 10 / (math.pi / 1000) and hi - lo == 249
    # floor(n*eps) must step at least a few times inside the window.
    eps = math.pi / 1000
    assert math.floor(hi * eps) - math.floor(lo * eps) >= 1


def test_async_capacity_paths():
    exact = async_capacity(PROFILE, 2, Fraction(1, 3), 1.0)
    assert exact.method == "synchronous"
    ref = sync_capacity(sample_variances(PROFILE, 2, 1, 3), 1.0).capacity_bits
    assert exact.capacity_bits == ref
    est = async_capacity(PROFILE, 2, math.pi / 7, 1.0)
    assert est.method == "liminf" and est.n_range == (251, 500)
    assert est.converged


def test_async_capacity_offset_invariance():
    # Long periods see the same set of variances up to a shift.
    a = async_capacity(reference_profile(0.47, 0.0), 2, math.pi / 7, 1.0).capacity_bits
    b = async_capacity(reference_profile(0.47, 0.25), 2, math.pi / 7, 1.0).capacity_bits
    assert abs(a - b) < 0.02


def test_rationalize_ratio():
    assert rationalize_ratio(3.0) == (3, Fraction(0))
    assert rationalize_ratio(2.47) == (2, Fraction(47, 100))
    assert rationalize_ratio(2.9999999) == (3, Fraction(0))
    td, eps = rationalize_ratio(math.pi, 1000)
    assert td == 3 and eps.denominator <= 1000
    with pytest.raises(DomainError):
        rationalize_ratio(1.0)


def test_sweep_ratio_annotations():
    res = sweep_ratio(PROFILE, [2.5, 3.0, 3.25], 1.0)
    assert res.annotations["td"] == [2, 3, 3]
    assert res.annotations["eps_den"] == [2, 1, 4]
    assert res.annotations["period_len"] == [5, 3, 13]
    assert len(res) == 3


def test_sweep_power_and_offset():
    (r0, r1) = sweep_power(PROFILE, 2, [Fraction(0), Fraction(1, 5)], [1.0, 10.0])
    assert np.all(np.diff(r0.capacities) > 0)
    assert r1.metadata["eps"] == Fraction(1, 5)
    sync = sweep_offset(PROFILE, 2, Fraction(0), [0.0, 0.25], 1.0)
    assert abs(sync.capacities[0] - sync.capacities[1]) > 0.1


def test_results_independent_of_workers():
    a = capacity_sequence(PROFILE, 2, math.pi / 7, 1.0, 1, 80, workers=1).capacities()
    b = capacity_sequence(PROFILE, 2, math.pi / 7, 1.0, 1, 80, workers=4).capacities()
    assert np.array_equal(a, b)


def test_threads_environment(monkeypatch):
    from cyclocap.asynccap import resolve_workers

    monkeypatch.setenv("THREADS", "3")
    assert resolve_workers() == 3
    assert resolve_workers(2) == 2


def test_sweep_result_validation():
    with pytest.raises(DomainError):
        SweepResult([1.0, 2.0], [0.1])
    with pytest.raises(DomainError):
        SweepResult([1.0], [-0.1])


def test_resource_error_when_nothing_fits():
    with pytest.raises(ResourceError):
        async_capacity(PROFILE, 2, math.pi / 7, 1.0, period_cap=10)
