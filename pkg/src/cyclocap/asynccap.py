"""Asynchronous-sampling capacity as the liminf of synchronous capacities.

For a real mismatch ``eps`` the sequence ``C_n`` uses the rational
``floor(n*eps)/n``; the asynchronous capacity is ``liminf C_n``.  Finite
windows only give an estimate, reported with a spread diagnostic.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from cyclocap.errors import DomainError, ResourceError
from cyclocap.profile import DEFAULT_PERIOD_CAP, epsilon_n, sample_variances
from cyclocap.waterfill import LN2, sync_capacity

__all__ = [
    "DEFAULT_N_MAX",
    "DEFAULT_TAIL_WINDOW",
    "DEFAULT_SPREAD_THRESHOLD",
    "SequenceEntry",
    "CapacitySequence",
    "LiminfEstimate",
    "AsyncCapacity",
    "SweepResult",
    "capacity_sequence",
    "liminf_estimate",
    "default_n_range",
    "async_capacity",
    "rationalize_ratio",
    "sweep_ratio",
    "sweep_power",
    "sweep_offset",
    "resolve_workers",
]

log = logging.getLogger(__name__)

DEFAULT_N_MAX = 500
DEFAULT_TAIL_WINDOW = 250
DEFAULT_SPREAD_THRESHOLD = 0.01
# Real mismatches need floor(n*eps) to take several values inside the window.
_MIN_STEPS_IN_WINDOW = 10


def resolve_workers(workers=None):
    """Worker count from the argument, else the THREADS variable, else 1."""
    if workers is None:
        env = os.environ.get("THREADS")
        workers = int(env) if env else 1
    return max(1, int(workers))


def _pmap(fn, items, workers=None):
    # Ordered map; results never depend on the worker count.
    items = list(items)
    workers = resolve_workers(workers)
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _nats_to(value, log_base):
    key = str(log_base).lower()
    if key in ("2", "bits"):
        return value / LN2
    if key in ("e", "nats"):
        return value
    raise DomainError(f"log base must be 2 or e, got {log_base!r}", key="log_base")


@dataclass(frozen=True)
class SequenceEntry:
    n: int
    period_len: int
    eps_n: Fraction
    capacity_bits: float
    capacity_nats: float


@dataclass(frozen=True)
class LiminfEstimate:
    value: float
    tail_window: int
    tail_spread: float
    threshold: float
    converged: bool
    log_base: str = "2"


@dataclass
class CapacitySequence:
    td: int
    eps: object
    power: float
    entries: list
    metadata: dict = field(default_factory=dict)
    liminf: Optional[LiminfEstimate] = None

    @property
    def ns(self):
        return np.array([e.n for e in self.entries], dtype=np.int64)

    def capacities(self, log_base="2"):
        nats = np.array([e.capacity_nats for e in self.entries])
        return _nats_to(nats, log_base)

    @property
    def liminf_estimate(self):
        return None if self.liminf is None else self.liminf.value

    @property
    def tail_window(self):
        return None if self.liminf is None else self.liminf.tail_window

    @property
    def tail_spread(self):
        return None if self.liminf is None else self.liminf.tail_spread


def _capacity_at(profile, td, eps_r: Fraction, power, period_cap):
    vars_ = sample_variances(profile, td, eps_r.numerator, eps_r.denominator, period_cap)
    return vars_.period_len, sync_capacity(vars_, power)


def capacity_sequence(
    profile,
    td,
    eps,
    power,
    n_min=1,
    n_max=DEFAULT_N_MAX,
    *,
    step=1,
    tail_window=DEFAULT_TAIL_WINDOW,
    threshold=DEFAULT_SPREAD_THRESHOLD,
    log_base="2",
    period_cap=DEFAULT_PERIOD_CAP,
    workers=None,
) -> CapacitySequence:
    """Synchronous capacities ``C_n`` at ``eps_n = floor(n*eps)/n``.

    Each entry is computed independently.  Entries whose period exceeds
    ``period_cap`` end the sequence; the truncation is recorded in
    ``metadata["warnings"]``.
    """
    if not (1 <= n_min <= n_max):
        raise DomainError(f"need 1 <= n_min <= n_max, got {n_min}, {n_max}", key="n_min")
    if int(td) != td or td < 1:
        raise DomainError(f"must be a positive integer, got {td}", key="td")
    if not (0 <= eps < 1):
        raise DomainError(f"must lie in [0, 1), got {eps}", key="eps")
    ns = list(range(int(n_min), int(n_max) + 1, int(step)))
    metadata = {"warnings": [], "n_min": n_min, "n_max": n_max, "step": step}

    eps_ns = []
    for n in ns:
        r = epsilon_n(eps, n)
        if td * r.denominator + r.numerator > period_cap:
            msg = f"period cap {period_cap} reached at n={n}; sequence truncated"
            metadata["warnings"].append(msg)
            log.warning(msg)
            break
        eps_ns.append(r)
    ns = ns[: len(eps_ns)]

    distinct = sorted(set(eps_ns))

    def solve(r):
        return _capacity_at(profile, td, r, power, period_cap)

    solved = dict(zip(distinct, _pmap(solve, distinct, workers)))
    entries = []
    for n, r in zip(ns, eps_ns):
        p, sol = solved[r]
        entries.append(SequenceEntry(n, p, r, sol.capacity_bits, sol.capacity_nats))

    seq = CapacitySequence(int(td), eps, float(power), entries, metadata)
    if entries:
        window = min(int(tail_window), len(entries))
        seq.liminf = liminf_estimate(seq, window, threshold=threshold, log_base=log_base)
    return seq


def liminf_estimate(seq: CapacitySequence, tail_window, threshold=DEFAULT_SPREAD_THRESHOLD,
                    log_base="2") -> LiminfEstimate:
    """Minimum over the last ``tail_window`` entries, with a spread check.

    ``converged`` is False whenever the max-min spread over the window
    exceeds ``threshold`` (in the same log base).
    """
    if tail_window < 1:
        raise DomainError("empty tail window", key="tail_window")
    if tail_window > len(seq.entries):
        raise DomainError(
            f"window {tail_window} exceeds {len(seq.entries)} entries", key="tail_window"
        )
    tail = seq.capacities(log_base)[-int(tail_window):]
    spread = float(tail.max() - tail.min())
    return LiminfEstimate(
        value=float(tail.min()),
        tail_window=int(tail_window),
        tail_spread=spread,
        threshold=float(threshold),
        converged=bool(spread <= threshold),
        log_base=str(log_base),
    )


def default_n_range(eps, n_max=None, tail_window=DEFAULT_TAIL_WINDOW):
    """Tail range ``(n_min, n_max)`` for estimating ``liminf C_n``.

    Mismatches close to an integer keep ``floor(n*eps)`` constant for long
    stretches of ``n``; ``n_max`` grows like ``1/dist(eps, Z)`` so that the
    tail window sees genuinely asynchronous rationalizations.
    """
    eps = float(eps)
    if n_max is None:
        dist = min(eps, 1.0 - eps)
        n_max = DEFAULT_N_MAX
        if dist > 0:
            n_max = max(n_max, math.ceil(_MIN_STEPS_IN_WINDOW / dist))
    n_min = max(1, int(n_max) - int(tail_window) + 1)
    return n_min, int(n_max)


@dataclass(frozen=True)
class AsyncCapacity:
    capacity_bits: float
    capacity_nats: float
    method: str
    tail_spread_bits: float = 0.0
    converged: bool = True
    n_range: tuple = ()

    def capacity(self, log_base="2"):
        return _nats_to(self.capacity_nats, log_base)


def async_capacity(
    profile,
    td,
    eps,
    power,
    *,
    n_max=None,
    tail_window=DEFAULT_TAIL_WINDOW,
    threshold=DEFAULT_SPREAD_THRESHOLD,
    period_cap=DEFAULT_PERIOD_CAP,
    workers=None,
) -> AsyncCapacity:
    """Capacity for any mismatch: exact for a Fraction, liminf estimate for a float."""
    if isinstance(eps, (Fraction, int)) or eps == 0:
        r = Fraction(eps)
        _, sol = _capacity_at(profile, td, r, power, period_cap)
        return AsyncCapacity(sol.capacity_bits, sol.capacity_nats, "synchronous")
    n_min, n_max = default_n_range(eps, n_max, tail_window)
    seq = capacity_sequence(
        profile, td, eps, power, n_min, n_max,
        tail_window=tail_window, threshold=threshold, period_cap=period_cap, workers=workers,
    )
    if not seq.entries:
        raise ResourceError(f"no capacity entries below period cap {period_cap}")
    est = seq.liminf
    return AsyncCapacity(
        capacity_bits=est.value,
        capacity_nats=est.value * LN2,
        method="liminf",
        tail_spread_bits=est.tail_spread,
        converged=est.converged,
        n_range=(seq.entries[0].n, seq.entries[-1].n),
    )


@dataclass
class SweepResult:
    """Capacities (bits) along one sweep axis.

    ``annotations`` holds extra per-point columns, e.g. the rational used.
    """

    axis: np.ndarray
    capacities: np.ndarray
    metadata: dict = field(default_factory=dict)
    annotations: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        self.capacities = np.asarray(self.capacities, dtype=float)
        if self.axis.shape != self.capacities.shape:
            raise DomainError("axis and capacities differ in length", key="axis")
        if not np.all(np.isfinite(self.capacities)) or np.any(self.capacities < 0):
            raise DomainError("capacities must be finite and non-negative", key="capacities")

    def __len__(self):
        return self.axis.size

    def in_base(self, log_base="2"):
        return _nats_to(self.capacities * LN2, log_base)


def rationalize_ratio(ratio, max_denominator=10**4):
    """Split ``Tc/Ts`` into ``(td, eps)`` with eps a best rational approximation.

    The whole ratio is approximated first, so values just below an integer
    land on it rather than on ``eps`` close to one.
    """
    if not ratio > 1:
        raise DomainError(f"ratio must exceed 1, got {ratio}", key="ratio")
    r = Fraction(ratio).limit_denominator(int(max_denominator))
    td = math.floor(r)
    return td, r - td


def sweep_ratio(profile, ratio_grid: Sequence[float], power, max_denominator=10**4,
                *, period_cap=DEFAULT_PERIOD_CAP, workers=None) -> SweepResult:
    """Capacity versus ``Tc/Ts`` at rationalizations with bounded denominator."""
    ratios = [float(r) for r in ratio_grid]
    splits = [rationalize_ratio(r, max_denominator) for r in ratios]

    def point(split):
        td, eps = split
        return _capacity_at(profile, td, eps, power, period_cap)

    solved = _pmap(point, splits, workers)
    return SweepResult(
        axis=ratios,
        capacities=[sol.capacity_bits for _, sol in solved],
        metadata={"kind": "ratio", "power": power, "max_denominator": max_denominator},
        annotations={
            "td": [td for td, _ in splits],
            "eps_num": [e.numerator for _, e in splits],
            "eps_den": [e.denominator for _, e in splits],
            "period_len": [p for p, _ in solved],
        },
    )


def sweep_power(profile, td, eps_list, power_grid, *, n_max=None,
                tail_window=DEFAULT_TAIL_WINDOW, period_cap=DEFAULT_PERIOD_CAP,
                workers=None) -> list:
    """Capacity versus power, one SweepResult per mismatch in ``eps_list``."""
    powers = [float(p) for p in power_grid]
    results = []
    for eps in eps_list:
        def point(power, eps=eps):
            return async_capacity(profile, td, eps, power, n_max=n_max,
                                  tail_window=tail_window, period_cap=period_cap)
        points = _pmap(point, powers, workers)
        results.append(
            SweepResult(
                axis=powers,
                capacities=[c.capacity_bits for c in points],
                metadata={"kind": "power", "td": td, "eps": eps},
                annotations={
                    "method": [c.method for c in points],
                    "tail_spread_bits": [c.tail_spread_bits for c in points],
                    "converged": [c.converged for c in points],
                },
            )
        )
    return results


def sweep_offset(profile, td, eps, phi_grid, power, *, n_max=None,
                 tail_window=DEFAULT_TAIL_WINDOW, period_cap=DEFAULT_PERIOD_CAP,
                 workers=None) -> SweepResult:
    """Capacity versus the normalized sampling offset, all else fixed."""
    phis = [float(p) for p in phi_grid]

    def point(phi):
        return async_capacity(profile.with_offset(phi), td, eps, power, n_max=n_max,
                              tail_window=tail_window, period_cap=period_cap)

    points = _pmap(point, phis, workers)
    return SweepResult(
        axis=phis,
        capacities=[c.capacity_bits for c in points],
        metadata={"kind": "offset", "td": td, "eps": eps, "power": power},
        annotations={"method": [c.method for c in points]},
    )
