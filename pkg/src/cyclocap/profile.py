"""Continuous-time periodic variance profiles and their sampled sequences.

The noise variance of the continuous-time process is a periodic function of
time.  Sampling it with interval ``Ts = Tc / (td + eps)`` yields a discrete
sequence which is periodic with period ``td*v + u`` whenever ``eps = u/v``.
All sample times are evaluated on the rational grid ``(i*v mod p) / p`` so
that no rounding accumulates along long periods.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from cyclocap.errors import ConfigurationError, DomainError, ResourceError

__all__ = [
    "DEFAULT_PERIOD_CAP",
    "REFERENCE_BASE",
    "REFERENCE_AMPLITUDE",
    "REFERENCE_PERIOD_TC",
    "PulseShape",
    "VarianceProfile",
    "TabulatedProfile",
    "SamplingSpec",
    "DtVarianceSeq",
    "pulse_value",
    "variance_at",
    "epsilon_n",
    "sample_variances",
    "reference_profile",
]

DEFAULT_PERIOD_CAP = 10**7

REFERENCE_BASE = 0.2
REFERENCE_AMPLITUDE = 4.8
REFERENCE_PERIOD_TC = 5e-6

Number = Union[int, float, Fraction]


@dataclass(frozen=True)
class PulseShape:
    """Trapezoidal periodic pulse with unit period.

    The pulse ramps up linearly over ``rise``, stays at one for ``duty``,
    ramps down over ``rise`` and is zero for the rest of the period.
    """

    duty: float
    rise: float = 0.01

    def __post_init__(self):
        if not (0.0 <= self.duty <= 0.98):
            raise ConfigurationError(f"must lie in [0, 0.98], got {self.duty}", key="duty")
        if not (0.0 < self.rise < 0.5):
            raise ConfigurationError(f"must lie in (0, 0.5), got {self.rise}", key="rise")
        if self.duty + 2.0 * self.rise > 1.0:
            raise ConfigurationError(
                f"duty + 2*rise = {self.duty + 2 * self.rise} exceeds one period",
                key="duty",
            )

    def __call__(self, t_norm):
        return _pulse(np.asarray(t_norm, dtype=float), self.duty, self.rise)


def _pulse(t, duty, rise):
    # Closed intervals on both ramps; continuity makes edge hits unambiguous
    # up to rounding.
    t = np.mod(t, 1.0)
    up_end = rise
    top_end = duty + rise
    down_end = duty + 2.0 * rise
    return np.where(
        t <= up_end,
        t / rise,
        np.where(
            t < top_end,
            1.0,
            np.where(t <= down_end, 1.0 - (t - top_end) / rise, 0.0),
        ),
    )


def pulse_value(t_norm, shape: PulseShape):
    """Evaluate the unit-period trapezoidal pulse at ``t_norm`` (any real).

    Returns a float for scalar input and an array otherwise.
    """
    out = shape(t_norm)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class VarianceProfile:
    """Periodic variance ``base + amplitude * pulse(t/period_tc - offset_phi)``."""

    base: float
    amplitude: float
    period_tc: float
    offset_phi: float = 0.0
    shape: PulseShape = field(default_factory=lambda: PulseShape(duty=0.47))

    def __post_init__(self):
        if not self.base > 0:
            raise ConfigurationError(f"must be strictly positive, got {self.base}", key="base")
        if not self.amplitude >= 0:
            raise ConfigurationError(f"must be non-negative, got {self.amplitude}", key="amplitude")
        if not self.period_tc > 0:
            raise ConfigurationError(
                f"must be positive, got {self.period_tc}", key="period_tc_seconds"
            )
        if not (0.0 <= self.offset_phi < 1.0):
            raise ConfigurationError(f"must lie in [0, 1), got {self.offset_phi}", key="offset_phi")

    def level(self, t_norm):
        """Variance at normalized time ``t_norm`` (units of ``period_tc``)."""
        t = np.asarray(t_norm, dtype=float) - self.offset_phi
        return self.base + self.amplitude * self.shape(t)

    def bounds(self):
        return self.base, self.base + self.amplitude

    def lipschitz(self):
        """Lipschitz constant of the variance in seconds."""
        return self.amplitude / (self.shape.rise * self.period_tc)

    def with_offset(self, phi):
        return VarianceProfile(self.base, self.amplitude, self.period_tc, phi, self.shape)


@dataclass(frozen=True)
class TabulatedProfile:
    """User-supplied periodic variance, linearly interpolated.

    ``knots`` are normalized times in [0, 1) and ``values`` the variances at
    those times; the table wraps around at 1.
    """

    knots: tuple
    values: tuple
    period_tc: float
    offset_phi: float = 0.0

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if knots.ndim != 1 or knots.shape != values.shape or knots.size < 1:
            raise ConfigurationError("knots and values must be equal-length 1-D", key="knots")
        if np.any(np.diff(knots) <= 0) or knots[0] < 0 or knots[-1] >= 1:
            raise ConfigurationError("knots must be strictly increasing in [0, 1)", key="knots")
        if np.any(values <= 0):
            raise ConfigurationError("variances must be strictly positive", key="values")
        if not self.period_tc > 0:
            raise ConfigurationError("must be positive", key="period_tc_seconds")
        if not (0.0 <= self.offset_phi < 1.0):
            raise ConfigurationError(f"must lie in [0, 1), got {self.offset_phi}", key="offset_phi")
        object.__setattr__(self, "knots", tuple(knots.tolist()))
        object.__setattr__(self, "values", tuple(values.tolist()))

    def level(self, t_norm):
        t = np.mod(np.asarray(t_norm, dtype=float) - self.offset_phi, 1.0)
        return np.interp(t, self.knots, self.values, period=1.0)

    def bounds(self):
        return min(self.values), max(self.values)

    def with_offset(self, phi):
        return TabulatedProfile(self.knots, self.values, self.period_tc, phi)


def reference_profile(duty=0.47, offset_phi=0.0, rise=0.01):
    """TDMA-style interference profile ``0.2 + 4.8 * pulse`` with a 5 us period."""
    return VarianceProfile(
        REFERENCE_BASE, REFERENCE_AMPLITUDE, REFERENCE_PERIOD_TC, offset_phi, PulseShape(duty, rise)
    )


def variance_at(profile, t):
    """Variance of the continuous-time noise at time ``t`` seconds."""
    out = profile.level(np.asarray(t, dtype=float) / profile.period_tc)
    return float(out) if np.ndim(out) == 0 else out


def epsilon_n(eps: Number, n: int) -> Fraction:
    """Rationalization ``floor(n*eps)/n`` used to build the capacity sequence.

    Float inputs are taken at their exact binary value, so the floor is
    computed without rounding.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}", key="n")
    eps = Fraction(eps)
    if not (0 <= eps < 1):
        raise DomainError(f"must lie in [0, 1), got {float(eps)}", key="eps")
    return Fraction(math.floor(eps * n), n)


@dataclass(frozen=True)
class SamplingSpec:
    """Sampling configuration ``Tc = (td + eps) * Ts``.

    ``eps`` is a :class:`~fractions.Fraction` for synchronous sampling or a
    float for a real mismatch that must be rationalized before use.
    """

    td: int
    eps: Union[Fraction, float] = Fraction(0)

    def __post_init__(self):
        if int(self.td) != self.td or self.td < 1:
            raise ConfigurationError(f"must be a positive integer, got {self.td}", key="td")
        object.__setattr__(self, "td", int(self.td))
        if isinstance(self.eps, int):
            object.__setattr__(self, "eps", Fraction(self.eps))
        if not (0 <= self.eps < 1):
            raise ConfigurationError(f"must lie in [0, 1), got {self.eps}", key="eps")

    @property
    def is_rational(self):
        return isinstance(self.eps, Fraction)

    @property
    def ratio(self):
        return self.td + float(self.eps)

    def sampling_interval(self, period_tc):
        return period_tc / self.ratio

    def rational(self, n=None) -> Fraction:
        """The working rational mismatch; real values need an order ``n``."""
        if self.is_rational:
            return self.eps
        if n is None:
            raise DomainError("real eps needs a rationalization order n", key="eps")
        return epsilon_n(self.eps, n)

    def period_len(self, n=None):
        r = self.rational(n)
        return self.td * r.denominator + r.numerator


@dataclass(frozen=True)
class DtVarianceSeq:
    """One period of the sampled noise variance."""

    values: np.ndarray
    td: int = 0
    eps: Fraction = Fraction(0)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise DomainError("variance sequence must be a non-empty vector", key="vars")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise DomainError("variances must be finite and strictly positive", key="vars")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def period_len(self):
        return self.values.size

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def as_variances(vars_) -> np.ndarray:
    """Coerce a DtVarianceSeq or array-like to a validated float vector."""
    if isinstance(vars_, DtVarianceSeq):
        return vars_.values
    return DtVarianceSeq(np.asarray(vars_, dtype=float)).values


def sample_variances(profile, td, u, v, period_cap=DEFAULT_PERIOD_CAP) -> DtVarianceSeq:
    """Sample one discrete-time period of the variance at ``Ts = Tc/(td + u/v)``.

    Sample ``i`` sits at normalized time ``i*v/(td*v + u)``; the reduction
    modulo one is done in integers as ``(i*v) mod p``.
    """
    td, u, v = int(td), int(u), int(v)
    if td < 1:
        raise DomainError(f"must be >= 1, got {td}", key="td")
    if v < 1 or u < 0 or u >= v:
        raise DomainError(f"need 0 <= u < v, got u={u}, v={v}", key="eps")
    if u != 0 and math.gcd(u, v) != 1:
        raise DomainError(f"u/v = {u}/{v} is not reduced", key="eps")
    p = td * v + u
    if p > period_cap:
        raise ResourceError(f"period {p} exceeds cap {period_cap}")
    i = np.arange(p, dtype=np.int64)
    t_norm = ((i * v) % p) / p
    values = profile.level(t_norm)
    return DtVarianceSeq(values, td=td, eps=Fraction(u, v))
