import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclocap.errors import ConfigurationError, DomainError, ResourceError
from cyclocap.profile import (
    DtVarianceSeq,
    PulseShape,
    SamplingSpec,
    TabulatedProfile,
    VarianceProfile,
    epsilon_n,
    reference_profile,
    pulse_value,
    sample_variances,
    variance_at,
)

SHAPE = PulseShape(duty=0.47, rise=0.01)


@pytest.mark.parametrize(
    "t, expected",
    [
        (0.0, 0.0),
        (0.005, 0.5),
        (0.01, 1.0),
        (0.25, 1.0),
        (0.48, 1.0),
        (0.485, 0.5),
        (0.49, 0.0),
        (0.75, 0.0),
        (1.005, 0.5),
        (-0.995, 0.5),
    ],
)
def test_pulse_hand_values(t, expected):
    assert pulse_value(t, SHAPE) == pytest.approx(expected, abs=1e-12)


def test_pulse_scalar_and_vector():
    assert isinstance(pulse_value(0.3, SHAPE), float)
    out = pulse_value(np.array([0.0, 0.3]), SHAPE)
    assert out.shape == (2,)


@pytest.mark.parametrize("duty, rise", [(0.99, 0.005), (0.98, 0.02), (-0.1, 0.01), (0.5, 0.0)])
def test_pulse_shape_rejects_invalid(duty, rise):
    with pytest.raises(ConfigurationError):
        PulseShape(duty, rise)


@given(st.floats(-5, 5), st.floats(0.0, 0.9), st.floats(0.001, 0.04))
def test_pulse_periodic_and_bounded(t, duty, rise):
    shape = PulseShape(duty, rise)
    v = pulse_value(t, shape)
    assert 0.0 <= v <= 1.0
    assert pulse_value(t + 1.0, shape) == pytest.approx(v, abs=1e-9)


@given(st.floats(0, 1), st.floats(1e-6, 1e-3))
def test_variance_lipschitz(t, dt):
    prof = reference_profile(0.47)
    lip = prof.amplitude / prof.shape.rise
    assert abs(float(prof.level(t + dt)) - float(prof.level(t))) <= lip * dt * (1 + 1e-9) + 1e-12


def test_variance_bounds_and_seconds():
    prof = reference_profile(0.75)
    t = np.linspace(0, 3 * prof.period_tc, 1001)
    v = variance_at(prof, t)
    lo, hi = prof.bounds()
    assert v.min() >= lo - 1e-12 and v.max() <= hi + 1e-12
    assert variance_at(prof, prof.period_tc * 0.3) == pytest.approx(5.0)
    assert prof.lipschitz() == pytest.approx(4.8 / (0.01 * 5e-6))


def test_profile_rejects_bad_parameters():
    with pytest.raises(ConfigurationError, match="base"):
        VarianceProfile(0.0, 1.0, 1.0)
    with pytest.raises(ConfigurationError, match="offset_phi"):
        VarianceProfile(1.0, 1.0, 1.0, offset_phi=1.0)


def test_offset_shifts_profile():
    p0, p1 = reference_profile(0.47, 0.0), reference_profile(0.47, 0.25)
    t = np.linspace(0, 1, 97)
    assert np.allclose(p1.level(t + 0.25), p0.level(t))


def test_tabulated_profile_interpolates_and_wraps():
    prof = TabulatedProfile((0.0, 0.5), (1.0, 3.0), period_tc=1.0)
    assert float(prof.level(0.25)) == pytest.approx(2.0)
    assert float(prof.level(0.75)) == pytest.approx(2.0)
    assert float(prof.level(1.25)) == pytest.approx(2.0)
    with pytest.raises(ConfigurationError):
        TabulatedProfile((0.5, 0.2), (1.0, 1.0), 1.0)


@given(st.fractions(0, 1).filter(lambda f: f < 1), st.integers(1, 10_000))
def test_epsilon_n_rational_oracle(eps, n):
    # floor(n*p/q) in integer arithmetic.
    assert epsilon_n(eps, n) == Fraction((n * eps.numerator) // eps.denominator, n)


@given(st.floats(0, 1, exclude_max=True), st.integers(1, 100_000))
def test_epsilon_n_brackets_eps(eps, n):
    r = epsilon_n(eps, n)
    assert r <= Fraction(eps) < r + Fraction(1, n)
    assert n % r.denominator == 0


def test_epsilon_n_pi_over_7():
    # pi/7 = 0.44879...; floor(10*pi/7) = 4, floor(100*pi/7) = 44.
    assert epsilon_n(math.pi / 7, 10) == Fraction(2, 5)
    assert epsilon_n(math.pi / 7, 100) == Fraction(11, 25)
    with pytest.raises(DomainError):
        epsilon_n(1.0, 3)
    with pytest.raises(DomainError):
        epsilon_n(0.5, 0)


def test_sampling_spec():
    s = SamplingSpec(2, Fraction(1, 3))
    assert s.is_rational and s.period_len() == 7
    r = SamplingSpec(2, math.pi / 7)
    assert not r.is_rational
    assert r.period_len(10) == 2 * 5 + 2
    with pytest.raises(DomainError):
        r.rational()
    with pytest.raises(ConfigurationError):
        SamplingSpec(0)


def test_sample_variances_hand_values():
    # Tc/Ts = 2: samples at 0 and 1/2 of the period.
    assert np.allclose(sample_variances(reference_profile(0.47, 0.0), 2, 0, 1).values, [0.2, 0.2])
    assert np.allclose(sample_variances(reference_profile(0.47, 0.25), 2, 0, 1).values, [0.2, 5.0])
    # Tc/Ts = 3: 0, 1/3, 2/3.
    assert np.allclose(sample_variances(reference_profile(0.47), 3, 0, 1).values, [0.2, 5.0, 0.2])


@given(st.integers(1, 5), st.integers(1, 40), st.data())
@settings(max_examples=60)
def test_sample_variances_match_float_times(td, v, data):
    u = data.draw(st.integers(0, v - 1).filter(lambda u: math.gcd(u, v) == 1 or u == 0))
    prof = reference_profile(0.47, 0.1)
    seq = sample_variances(prof, td, u, v)
    p = td * v + u
    assert seq.period_len == p
    # Oracle: evaluate at i*Ts with Ts in floating point.
    ts = prof.period_tc / (td + u / v)
    direct = variance_at(prof, np.arange(p) * ts)
    assert np.allclose(seq.values, direct, atol=1e-6)


def test_sample_variances_errors():
    prof = reference_profile(0.47)
    with pytest.raises(DomainError):
        sample_variances(prof, 2, 2, 4)
    with pytest.raises(DomainError):
        sample_variances(prof, 2, 3, 3)
    with pytest.raises(ResourceError):
        sample_variances(prof, 2, 1, 10**6, period_cap=10**5)


def test_dt_sequence_is_read_only_and_validated():
    seq = DtVarianceSeq(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        seq.values[0] = 3.0
    with pytest.raises(DomainError):
        DtVarianceSeq(np.array([1.0, -1.0]))
    with pytest.raises(DomainError):
        DtVarianceSeq(np.array([]))
