import math
from fractions import Fraction

import numpy as np
import pytest

from cyclocap.errors import DomainError, ResourceError
from cyclocap.infospec import (
    DensityBatch,
    build_density_model,
    charfn_v,
    charfn_v_unscaled,
    charfn_z,
    empirical_charfn,
    p_lim_estimate,
    sample_density,
    sample_v,
    interchange_check,
    validate_covariances,
)
from cyclocap.profile import reference_profile, sample_variances
from cyclocap.waterfill import sync_capacity

VARS = np.array([0.2, 1.0, 5.0, 0.5, 50.0])
POWER = 1.5


@pytest.fixture(scope="module")
def model():
    m = build_density_model(VARS, POWER)
    check = validate_covariances(m, n=200_000, seed=1)
    if not check.ok:
        pytest.fail(f"closed-form A/B moments disagree with simulation: {check.z_scores}")
    return m


def test_model_closed_forms(model):
    sol = sync_capacity(VARS, POWER)
    active = sol.allocation > 0
    assert not active.all(), "fixture should contain an inactive index"
    assert np.allclose(model.sigma_y2[active], sol.delta)
    assert np.allclose(model.beta[active], np.log(sol.delta / VARS[active]))
    r = np.sqrt(VARS / model.sigma_y2)
    assert np.allclose(model.sigma_a2, 2 * (1 + r))
    assert np.allclose(model.sigma_b2[active], 2 * (1 - r[active]))
    assert np.all(model.beta[~active] == 0) and np.all(model.sigma_b2[~active] == 0)


def test_mean_density_equals_capacity(model):
    # E[A*B] = 0, so E[V] = beta/2 per index.
    assert model.beta.mean() / 2 == pytest.approx(model.capacity_nats, rel=1e-12)


def test_per_index_access(model):
    idx = model[0]
    assert idx.sigma_w2 == VARS[0]
    assert len(list(model)) == len(model) == VARS.size


def test_charfn_quarter_form_matches_sampling(model):
    idx = model[int(np.argmax(model.sigma_a2 * model.sigma_b2))]
    alpha = np.linspace(-5, 5, 101)
    emp = empirical_charfn(sample_v(idx, 100_000, seed=3), alpha)
    assert np.max(np.abs(charfn_v(alpha, idx) - emp)) <= 0.01
    assert np.max(np.abs(charfn_v_unscaled(alpha, idx) - emp)) > 0.05


def test_charfn_scalar_and_origin(model):
    assert charfn_v(0.0, model[0]) == 1.0
    assert isinstance(charfn_z(0.3, model, 10), complex)


def test_charfn_z_matches_sampled_blocks(model):
    k = 7
    batch = sample_density(model, k, 40_000, seed=4)
    alpha = np.linspace(-10, 10, 41)
    emp = empirical_charfn(batch.samples, alpha)
    assert np.max(np.abs(charfn_z(alpha, model, k) - emp)) <= 0.02


def test_variance_decays_like_one_over_k(model):
    # Var(Z_k) = mean over the block of sA^2 sB^2 / 4, divided by k.
    k = 500
    analytic = np.mean((model.sigma_a2 * model.sigma_b2 / 4)[np.arange(k) % len(model)]) / k
    batch = sample_density(model, k, 4000, seed=5)
    assert batch.samples.var(ddof=1) == pytest.approx(analytic, rel=0.1)


def test_sampling_is_deterministic_and_worker_independent(model):
    a = sample_density(model, 50, 200, seed=9, workers=1)
    b = sample_density(model, 50, 200, seed=9, workers=3)
    c = sample_density(model, 50, 200, seed=10)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)
    # Sample j does not depend on how many samples are drawn.
    d = sample_density(model, 50, 100, seed=9)
    assert np.array_equal(a.samples[:100], d.samples)


def test_sample_density_errors(model):
    with pytest.raises(DomainError):
        sample_density(model, 0, 10, seed=0)
    with pytest.raises(ResourceError):
        sample_density(model, 10**6, 10**4, seed=0)


def _batches(tails):
    return [DensityBatch(k, np.asarray(s, dtype=float), (0,)) for k, s in tails]


def test_p_lim_estimate_on_known_samples():
    rng = np.random.default_rng(0)
    batches = _batches([(k, 1.0 + rng.standard_normal(4000) / math.sqrt(k)) for k in (10, 100, 1000)])
    est = p_lim_estimate(batches, "inf", delta=0.05, alpha_resolution=1e-3)
    # 5% quantile of N(1, 1/1000) is 1 - 1.645/sqrt(1000).
    assert est.value == pytest.approx(1 - 1.645 / math.sqrt(1000), abs=0.005)
    assert abs(est.value / 1e-3 - round(est.value / 1e-3)) < 1e-6
    assert not est.flagged
    sup = p_lim_estimate(batches, "sup", delta=0.05)
    assert sup.value == pytest.approx(1 + 1.645 / math.sqrt(1000), abs=0.005)


def test_p_lim_estimate_flags_growing_tail():
    rng = np.random.default_rng(1)
    # Spread grows with k: the lower tail mass increases.
    batches = _batches([(k, rng.standard_normal(4000) * s) for k, s in ((10, 0.1), (100, 1.0), (1000, 3.0))])
    strict = p_lim_estimate(batches, "inf", z_slack=0.0)
    assert strict.flagged


def test_p_lim_estimate_errors():
    b = _batches([(10, [0.0, 1.0]), (20, [0.0, 1.0])])
    with pytest.raises(DomainError):
        p_lim_estimate(b)
    b3 = _batches([(10, [0.0]), (20, [0.0]), (30, [0.0])])
    with pytest.raises(DomainError):
        p_lim_estimate(b3, delta=0.5)
    with pytest.raises(DomainError):
        p_lim_estimate(b3, direction="mid")


def test_interchange_check_synchronous_is_exact():
    rep = interchange_check(reference_profile(0.47), 2, Fraction(0), 1.0, [5, 10], [100, 1000, 5000],
                         seed=0, n_samples=400)
    estimates = {row["estimate"] for row in rep.per_n} | {rep.proxy["estimate"]}
    assert len(estimates) == 1
    assert rep.holds and rep.flags_clean
    assert rep.asynccap_liminf_nats == pytest.approx(rep.proxy["capacity_nats"])


def test_interchange_check_validates_lists():
    with pytest.raises(DomainError):
        interchange_check(reference_profile(0.47), 2, Fraction(0), 1.0, [10, 5], [1, 2, 3])


def test_common_random_numbers_across_families():
    # Same seed and k: identical standard normals drive different models.
    s = sample_variances(reference_profile(0.47), 2, 1, 2)
    m1 = build_density_model(s, 1.0)
    m2 = build_density_model(s, 2.0)
    a = sample_density(m1, 10, 5, seed=(0, 10))
    b = sample_density(m2, 10, 5, seed=(0, 10))
    assert np.corrcoef(a.samples, b.samples)[0, 1] > 0.5
