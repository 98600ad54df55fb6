"""Water-filling capacity of a memoryless channel with periodic noise variance.

For one period of variances ``s[0..p-1]`` and average power ``P`` the water
level ``delta`` solves ``mean((delta - s)^+) = P`` and the capacity is
``sum(log(delta / s)^+) / (2p)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cyclocap.errors import DomainError, UnsupportedError
from cyclocap.profile import as_variances

__all__ = [
    "WaterFillSolution",
    "water_level",
    "water_level_sorted",
    "sync_capacity",
    "bruteforce_capacity",
    "kkt_residual",
    "awgn_capacity",
]

LN2 = math.log(2.0)
ABS_TOL_FLOOR = 1e-12
_MAX_BISECTIONS = 200


@dataclass(frozen=True)
class WaterFillSolution:
    delta: float
    allocation: np.ndarray
    capacity_bits: float
    capacity_nats: float
    iterations: int

    @property
    def period_len(self):
        return self.allocation.size

    def capacity(self, log_base="2"):
        return self.capacity_bits if _base_is_two(log_base) else self.capacity_nats


def _base_is_two(log_base):
    key = str(log_base).lower()
    if key in ("2", "bits", "bit"):
        return True
    if key in ("e", "nats", "nat"):
        return False
    raise DomainError(f"log base must be 2 or e, got {log_base!r}", key="log_base")


def _check_power(power):
    if not (np.isfinite(power) and power > 0):
        raise DomainError(f"power must be positive and finite, got {power}", key="power")


def _polish(s, delta, power):
    # Exact root given the active set found by bisection.
    active = s < delta
    refined = (power * s.size + s[active].sum()) / active.sum()
    if np.array_equal(s < refined, active):
        return refined
    return delta


def water_level(vars_, power, tol=1e-12, return_iterations=False):
    """Water level by bisection on ``d -> mean((d - s)^+)``.

    The map is continuous, nondecreasing, zero at ``min(s)`` and at least
    ``P`` at ``max(s) + P``, and strictly increasing above ``min(s)``, so the
    root in that bracket is unique.

    Parameters
    ----------
    vars_ : DtVarianceSeq or array_like
        One period of strictly positive noise variances.
    power : float
        Average power constraint ``P > 0``.
    tol : float
        Relative tolerance on the power balance, floored at ``1e-12``.
    """
    s = as_variances(vars_)
    _check_power(power)
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}", key="tol")
    target = max(tol * power, ABS_TOL_FLOOR)

    def excess(d):
        return np.maximum(d - s, 0.0).mean() - power

    lo, hi = float(s.min()), float(s.max()) + power
    assert excess(lo) < 0 <= excess(hi) + target, "water level bracket failed"
    mid = hi
    it = 0
    for it in range(1, _MAX_BISECTIONS + 1):
        mid = 0.5 * (lo + hi)
        g = excess(mid)
        if abs(g) <= target:
            break
        if g < 0:
            lo = mid
        else:
            hi = mid
        if hi <= np.nextafter(lo, np.inf):
            break
    delta = _polish(s, mid, power)
    return (delta, it) if return_iterations else delta


def water_level_sorted(vars_, power):
    """Water level from the sorted-prefix closed form (cross-check path).

    With ``s`` sorted ascending, the active set is a prefix of length ``k``
    and ``delta = (p*P + sum(s[:k])) / k`` for the largest ``k`` whose
    candidate level exceeds ``s[k-1]``.
    """
    s = np.sort(as_variances(vars_))
    _check_power(power)
    budget = power * s.size
    prefix = np.cumsum(s)
    k = np.arange(1, s.size + 1)
    candidates = (budget + prefix) / k
    valid = candidates > s
    kstar = int(np.nonzero(valid)[0][-1])
    return float(candidates[kstar])


def sync_capacity(vars_, power, tol=1e-12) -> WaterFillSolution:
    """Capacity of the synchronously sampled channel for one variance period."""
    s = as_variances(vars_)
    delta, iterations = water_level(s, power, tol=tol, return_iterations=True)
    allocation = np.maximum(delta - s, 0.0)
    nats = np.maximum(np.log(delta / s), 0.0).sum() / (2.0 * s.size)
    return WaterFillSolution(
        delta=float(delta),
        allocation=allocation,
        capacity_bits=float(nats / LN2),
        capacity_nats=float(nats),
        iterations=iterations,
    )


def awgn_capacity(variance, power, log_base="2"):
    nats = 0.5 * math.log1p(power / variance)
    return nats / LN2 if _base_is_two(log_base) else nats


def kkt_residual(vars_, solution: WaterFillSolution):
    """Complementarity residual ``max |min(p, p - (delta - s))|``."""
    s = as_variances(vars_)
    p = solution.allocation
    return float(np.max(np.abs(np.minimum(p, p - (solution.delta - s)))))


def _rate_bits(alloc, s):
    return np.log2(1.0 + alloc / s).sum(axis=-1) / (2.0 * s.size)


def _simplex_grid(dim, steps):
    # All nonnegative integer vectors of length dim summing to steps, built
    # one coordinate at a time.
    heads = np.zeros((1, 0), dtype=np.int64)
    used = np.zeros(1, dtype=np.int64)
    for _ in range(dim - 1):
        counts = steps - used + 1
        parent = np.repeat(np.arange(used.size), counts)
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        value = np.arange(counts.sum()) - starts
        heads = np.column_stack([heads[parent], value])
        used = used[parent] + value
    return np.column_stack([heads, steps - used])


def bruteforce_capacity(vars_, power, grid_steps=200, refine_tol=1e-13):
    """Brute-force maximum of the parallel-channel rate, in bits.

    Searches every allocation on a simplex grid of ``grid_steps`` divisions
    of the total power, then refines by pairwise power transfers with a
    shrinking step.  Uses no water-filling structure.
    """
    s = as_variances(vars_)
    _check_power(power)
    if s.size > 4:
        raise UnsupportedError(f"brute force supports period <= 4, got {s.size}")
    if grid_steps < 100:
        raise DomainError(f"grid_steps must be >= 100, got {grid_steps}", key="grid_steps")
    total = power * s.size
    grid = _simplex_grid(s.size, grid_steps) * (total / grid_steps)
    rates = _rate_bits(grid, s)
    best = grid[int(np.argmax(rates))].astype(float)
    best_rate = float(rates.max())

    step = total / grid_steps
    pairs = [(i, j) for i in range(s.size) for j in range(s.size) if i != j]
    while step > refine_tol * total:
        improved = False
        for i, j in pairs:
            move = min(step, best[i])
            if move <= 0:
                continue
            trial = best.copy()
            trial[i] -= move
            trial[j] += move
            r = float(_rate_bits(trial, s))
            if r > best_rate:
                best, best_rate, improved = trial, r, True
        if not improved:
            step *= 0.5
    return best_rate
