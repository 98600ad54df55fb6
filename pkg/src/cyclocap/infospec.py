"""Monte Carlo information-spectrum lab for the Gaussian water-filling input.

With the capacity-achieving input ``X[i] ~ N(0, p_i)`` the per-sample
information density is ``V = A*B/2 + beta/2`` where

    A = Y/sigma_Y + W/sigma_W,   B = Y/sigma_Y - W/sigma_W,
    beta = log(sigma_Y^2 / sigma_W^2).

``A`` and ``B`` are uncorrelated jointly Gaussian, hence independent, with
variances ``2(1 + sigma_W/sigma_Y)`` and ``2(1 - sigma_W/sigma_Y)``.  The
block information density rate is ``Z_k = (1/k) sum V[i]``.  Everything here
is in nats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from cyclocap.asynccap import _pmap, async_capacity
from cyclocap.errors import DomainError, ResourceError
from cyclocap.profile import DEFAULT_PERIOD_CAP, as_variances, epsilon_n, sample_variances
from cyclocap.waterfill import sync_capacity

__all__ = [
    "DensityModelPerIndex",
    "DensityModel",
    "DensityBatch",
    "PlimEstimate",
    "CovarianceCheck",
    "InterchangeReport",
    "build_density_model",
    "validate_covariances",
    "sample_density",
    "sample_v",
    "charfn_v",
    "charfn_v_unscaled",
    "charfn_z",
    "empirical_charfn",
    "p_lim_estimate",
    "interchange_check",
]

MAX_BATCH_DRAWS = 10**9


@dataclass(frozen=True)
class DensityModelPerIndex:
    sigma_w2: float
    p_alloc: float
    sigma_y2: float
    beta: float
    sigma_a2: float
    sigma_b2: float


@dataclass(frozen=True)
class DensityModel:
    """Per-index model parameters for one noise period, stored as arrays."""

    sigma_w2: np.ndarray
    p_alloc: np.ndarray
    sigma_y2: np.ndarray
    beta: np.ndarray
    sigma_a2: np.ndarray
    sigma_b2: np.ndarray
    capacity_nats: float

    def __len__(self):
        return self.sigma_w2.size

    def __getitem__(self, i) -> DensityModelPerIndex:
        return DensityModelPerIndex(
            float(self.sigma_w2[i]), float(self.p_alloc[i]), float(self.sigma_y2[i]),
            float(self.beta[i]), float(self.sigma_a2[i]), float(self.sigma_b2[i]),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))


def build_density_model(vars_, power) -> DensityModel:
    """Water-fill ``vars_`` and derive the per-index information-density model."""
    s = as_variances(vars_)
    sol = sync_capacity(s, power)
    p = sol.allocation
    sy2 = p + s
    ratio = np.sqrt(s / sy2)
    beta = np.log(sy2 / s)
    inactive = p == 0
    beta[inactive] = 0.0
    sb2 = 2.0 * (1.0 - ratio)
    sb2[inactive] = 0.0
    return DensityModel(
        sigma_w2=s.copy(),
        p_alloc=p,
        sigma_y2=sy2,
        beta=beta,
        sigma_a2=2.0 * (1.0 + ratio),
        sigma_b2=sb2,
        capacity_nats=sol.capacity_nats,
    )


@dataclass(frozen=True)
class CovarianceCheck:
    ok: bool
    var_a: np.ndarray
    var_b: np.ndarray
    cov_ab: np.ndarray
    mean_v: np.ndarray
    identity_error: float
    z_scores: np.ndarray


def validate_covariances(model: DensityModel, n=200_000, seed=0, z_max=5.0) -> CovarianceCheck:
    """Check the closed-form A/B variances against simulated channel draws.

    Simulates ``X``, ``W`` and ``Y = X + W`` directly, forms ``A``, ``B`` from
    their definitions and the information density from the Gaussian
    log-likelihood ratio, then compares moments with the model.
    """
    rng = np.random.default_rng(seed)
    m = len(model)
    x = rng.standard_normal((m, n)) * np.sqrt(model.p_alloc)[:, None]
    w = rng.standard_normal((m, n)) * np.sqrt(model.sigma_w2)[:, None]
    y = x + w
    sy = np.sqrt(model.sigma_y2)[:, None]
    sw = np.sqrt(model.sigma_w2)[:, None]
    a = y / sy + w / sw
    b = y / sy - w / sw
    log_cond = -0.5 * (w / sw) ** 2 - np.log(sw)
    log_marg = -0.5 * (y / sy) ** 2 - np.log(sy)
    v_direct = log_cond - log_marg
    v_ab = 0.5 * a * b + 0.5 * model.beta[:, None]
    identity_error = float(np.max(np.abs(v_direct - v_ab)))

    var_a = a.var(axis=1)
    var_b = b.var(axis=1)
    cov_ab = (a * b).mean(axis=1)
    mean_v = v_direct.mean(axis=1)
    # Gaussian-moment standard errors: var -> s2*sqrt(2/n), E[AB] -> sa*sb/sqrt(n).
    act = model.sigma_b2 > 0
    z = np.zeros((4, m))
    z[0] = np.abs(var_a - model.sigma_a2) / (model.sigma_a2 * np.sqrt(2.0 / n))
    sab = np.sqrt(model.sigma_a2[act] * model.sigma_b2[act])
    z[1, act] = np.abs(var_b[act] - model.sigma_b2[act]) / (model.sigma_b2[act] * np.sqrt(2.0 / n))
    z[2, act] = np.abs(cov_ab[act]) / (sab / np.sqrt(n))
    z[3, act] = np.abs(mean_v[act] - model.beta[act] / 2) / (0.5 * sab / np.sqrt(n))
    # Inactive indices: B and V vanish identically.
    degenerate_ok = np.all(var_b[~act] < 1e-20) and np.all(np.abs(mean_v[~act]) < 1e-12)
    ok = bool(np.all(z < z_max) and degenerate_ok and identity_error < 1e-9)
    return CovarianceCheck(ok, var_a, var_b, cov_ab, mean_v, identity_error, z)


@dataclass(frozen=True)
class DensityBatch:
    k: int
    samples: np.ndarray
    seed: tuple

    @property
    def n_samples(self):
        return self.samples.size


def _entropy(seed):
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(s) for s in seed)


def _sample_rng(entropy, j):
    ss = np.random.SeedSequence(entropy=list(entropy), spawn_key=(int(j),))
    return np.random.Generator(np.random.PCG64(ss))


def sample_density(model: DensityModel, k, n_samples, seed, workers=None) -> DensityBatch:
    """Draw ``n_samples`` realizations of ``Z_k`` for one block length ``k``.

    Block index ``i`` (0-based) uses ``model[i mod period]``.  Sample ``j``
    has its own generator keyed on ``(seed, j)``, so the batch does not
    depend on how the work is split.
    """
    k, n_samples = int(k), int(n_samples)
    if k < 1 or n_samples < 1:
        raise DomainError("k and n_samples must be >= 1", key="k")
    if 2 * k * n_samples > MAX_BATCH_DRAWS:
        raise ResourceError(f"batch of {k} x {n_samples} exceeds draw cap")
    entropy = _entropy(seed)
    idx = np.arange(k) % len(model)
    coef = 0.5 * np.sqrt(model.sigma_a2 * model.sigma_b2)[idx]
    offset = 0.5 * model.beta[idx].sum() / k

    def one(j):
        g = _sample_rng(entropy, j).standard_normal((2, k))
        return float(np.dot(coef * g[0], g[1]) / k + offset)

    samples = np.array(_pmap(one, range(n_samples), workers))
    return DensityBatch(k, samples, entropy)


def sample_v(index: DensityModelPerIndex, n, seed=0):
    """Direct draws of ``V = A*B/2 + beta/2`` for one index."""
    g = np.random.default_rng(seed).standard_normal((2, int(n)))
    return 0.5 * np.sqrt(index.sigma_a2) * g[0] * np.sqrt(index.sigma_b2) * g[1] + 0.5 * index.beta


def charfn_v(alpha, index: DensityModelPerIndex):
    """Characteristic function of ``V``: ``exp(j*beta*a/2) / sqrt(1 + a^2 sA sB / 4)``."""
    a = np.asarray(alpha, dtype=float)
    out = np.exp(0.5j * index.beta * a) / np.sqrt(a * a * index.sigma_a2 * index.sigma_b2 / 4.0 + 1.0)
    return complex(out) if out.ndim == 0 else out


def charfn_v_unscaled(alpha, index: DensityModelPerIndex):
    """Variant without the 1/4 factor; kept only to show it disagrees with sampling."""
    a = np.asarray(alpha, dtype=float)
    out = np.exp(0.5j * index.beta * a) / np.sqrt(a * a * index.sigma_a2 * index.sigma_b2 + 1.0)
    return complex(out) if out.ndim == 0 else out


def charfn_z(alpha, model: DensityModel, k):
    """Characteristic function of ``Z_k`` as a product over the block."""
    a = np.atleast_1d(np.asarray(alpha, dtype=float)) / k
    idx = np.arange(int(k)) % len(model)
    beta = model.beta[idx][:, None]
    prod_ab = (model.sigma_a2 * model.sigma_b2)[idx][:, None]
    log_phi = 0.5j * beta * a - 0.5 * np.log(a * a * prod_ab / 4.0 + 1.0)
    out = np.exp(log_phi.sum(axis=0))
    return out if np.ndim(alpha) else complex(out[0])


def empirical_charfn(samples, alpha):
    s = np.asarray(samples, dtype=float)
    a = np.atleast_1d(np.asarray(alpha, dtype=float))
    out = np.exp(1j * np.outer(a, s)).mean(axis=1)
    return out if np.ndim(alpha) else complex(out[0])


@dataclass(frozen=True)
class PlimEstimate:
    value: float
    direction: str
    alpha_grid: tuple
    confidence_note: str
    flagged: bool
    tail_by_k: dict = field(default_factory=dict)


def _tail_increase_significant(tails, sizes, z):
    for (t1, n1), (t2, n2) in zip(zip(tails, sizes), zip(tails[1:], sizes[1:])):
        se = np.sqrt(t1 * (1 - t1) / n1 + t2 * (1 - t2) / n2)
        if t2 - t1 > z * se:
            return True
    return False


def p_lim_estimate(batches: Sequence[DensityBatch], direction="inf", delta=0.05,
                   alpha_resolution=1e-3, z_slack=3.0) -> PlimEstimate:
    """Finite-sample p-liminf / p-limsup estimate on a regular alpha grid.

    For ``inf``: the largest grid point ``a`` with empirical
    ``Pr(Z_k < a) < delta`` at the largest ``k``.  The empirical tail at
    ``a`` must be non-increasing across the supplied ``k``; an increase larger
    than ``z_slack`` binomial standard errors flags the estimate
    (``z_slack=0`` demands exact monotonicity).  ``sup`` mirrors this with
    ``Pr(Z_k > b)`` and the smallest grid point.
    """
    if direction not in ("inf", "sup"):
        raise DomainError(f"direction must be 'inf' or 'sup', got {direction!r}", key="direction")
    if not (0 < delta <= 0.1):
        raise DomainError(f"delta must lie in (0, 0.1], got {delta}", key="delta")
    if not alpha_resolution > 0:
        raise DomainError("alpha_resolution must be positive", key="alpha_resolution")
    ks = [b.k for b in batches]
    if len(set(ks)) < 3 or any(k2 <= k1 for k1, k2 in zip(ks, ks[1:])):
        raise DomainError(f"need >= 3 strictly increasing k values, got {ks}", key="k_list")

    res = float(alpha_resolution)
    lo = min(float(b.samples.min()) for b in batches)
    hi = max(float(b.samples.max()) for b in batches)
    i_lo, i_hi = int(np.floor(lo / res)) - 1, int(np.ceil(hi / res)) + 1
    grid = np.arange(i_lo, i_hi + 1) * res
    last = np.sort(batches[-1].samples)

    if direction == "inf":
        # Pr(Z < a) via the count of samples strictly below a.
        tail_last = np.searchsorted(last, grid, side="left") / last.size
        ok = np.nonzero(tail_last < delta)[0]
        a = grid[ok[-1]]
        tails = [float(np.mean(b.samples < a)) for b in batches]
    else:
        tail_last = 1.0 - np.searchsorted(last, grid, side="right") / last.size
        ok = np.nonzero(tail_last < delta)[0]
        a = grid[ok[0]]
        tails = [float(np.mean(b.samples > a)) for b in batches]

    sizes = [b.n_samples for b in batches]
    monotone = not _tail_increase_significant(tails, sizes, z_slack)
    note = (
        f"tail at {a:.6g} non-increasing over k={ks}"
        if monotone
        else f"non-monotone empirical tail over k={ks}: {tails}"
    )
    return PlimEstimate(
        value=float(a),
        direction=direction,
        alpha_grid=(float(grid[0]), float(grid[-1]), res),
        confidence_note=note,
        flagged=not monotone,
        tail_by_k=dict(zip(ks, tails)),
    )


@dataclass
class InterchangeReport:
    per_n: list
    proxy: dict
    asynccap_liminf_nats: float
    tol: float
    holds: bool
    inconclusive: bool
    notes: list = field(default_factory=list)

    @property
    def gaps(self):
        return [abs(row["estimate"] - self.proxy["estimate"]) for row in self.per_n]

    @property
    def flags_clean(self):
        return not self.proxy["flagged"] and not any(row["flagged"] for row in self.per_n)


def _family_estimate(vars_, power, k_list, n_samples, seed, direction, delta, res, workers):
    model = build_density_model(vars_, power)
    batches = [sample_density(model, k, n_samples, (*_entropy(seed), k), workers) for k in k_list]
    est = p_lim_estimate(batches, direction, delta, res)
    return model, est


def interchange_check(
    profile,
    td,
    eps,
    power,
    n_list,
    k_list,
    seed=0,
    *,
    n_samples=1000,
    proxy_order=10**5,
    delta=0.05,
    alpha_resolution=1e-3,
    tol=0.03,
    direction="inf",
    period_cap=DEFAULT_PERIOD_CAP,
    workers=None,
) -> InterchangeReport:
    """Numerically compare ``lim_n plim_k Z_{k,n}`` with ``plim_k Z_{k,eps}``.

    Each ``n`` in ``n_list`` gives the family of the synchronous channel at
    ``floor(n*eps)/n``; the asynchronous family is approximated by the
    rationalization of order ``proxy_order``.  All families share random
    numbers per ``k``.  The interchange is reported to hold when the last
    per-n estimate is within ``tol`` of the proxy estimate and no tail was
    flagged; flagged runs are reported inconclusive.
    """
    n_list = [int(n) for n in n_list]
    k_list = [int(k) for k in k_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise DomainError("n_list must be strictly increasing", key="n_list")
    if any(b <= a for a, b in zip(k_list, k_list[1:])):
        raise DomainError("k_list must be strictly increasing", key="k_list")

    def family(r: Fraction):
        vars_ = sample_variances(profile, td, r.numerator, r.denominator, period_cap)
        model, est = _family_estimate(vars_, power, k_list, n_samples, seed, direction,
                                      delta, alpha_resolution, workers)
        return vars_.period_len, model, est

    per_n = []
    for n in n_list:
        r = epsilon_n(eps, n)
        p, model, est = family(r)
        per_n.append({
            "n": n, "eps_n": r, "period_len": p, "estimate": est.value,
            "capacity_nats": model.capacity_nats, "flagged": est.flagged,
            "note": est.confidence_note,
        })

    r_proxy = Fraction(eps) if isinstance(eps, Fraction) else epsilon_n(eps, proxy_order)
    p, model, est = family(r_proxy)
    proxy = {
        "order": proxy_order, "eps": r_proxy, "period_len": p, "estimate": est.value,
        "capacity_nats": model.capacity_nats, "flagged": est.flagged,
        "note": est.confidence_note,
    }

    liminf = async_capacity(profile, td, eps, power, period_cap=period_cap).capacity_nats

    notes = []
    gap_last = abs(per_n[-1]["estimate"] - proxy["estimate"])
    flags = proxy["flagged"] or any(row["flagged"] for row in per_n)
    if flags:
        notes.append("at least one family had a non-monotone tail across k")
    holds = (gap_last <= tol) and not flags
    if gap_last > tol:
        notes.append(f"last per-n estimate is {gap_last:.4g} from the proxy (tol {tol})")
    return InterchangeReport(
        per_n=per_n,
        proxy=proxy,
        asynccap_liminf_nats=liminf,
        tol=tol,
        holds=holds,
        inconclusive=flags or not holds,
        notes=notes,
    )
