from math import pi, sqrt

import numpy as np
import pytest

from dirgof import goftest, parfit
from dirgof.kernels import VON_MISES, gof_asymptotic_variance
from dirgof.locreg import LocalFitConfig
from dirgof.sphere import sample_uniform


def make_cfg(q=1, degree=0, h=0.5, bootstrap=200, seed=0, **kw):
    return goftest.GofConfig(
        fit=LocalFitConfig(degree=degree, bandwidth=h),
        quadrature=goftest.default_quadrature(q),
        bootstrap=bootstrap,
        seed=seed,
        **kw,
    )


def sample_constant_model(rng, n=100, q=1, level=1.0, sd=0.5):
    predictors = sample_uniform(q, n, rng)
    responses = level + sd * rng.standard_normal(n)
    return predictors, responses


def test_golden_section_draws_moments(rng):
    draws = goftest.golden_section_draws(1_000_000, rng)
    values = np.unique(draws)
    assert values.size == 2
    assert np.allclose(sorted(values), [(1 - sqrt(5)) / 2, (1 + sqrt(5)) / 2])
    assert abs(draws.mean()) < 0.005
    assert abs(draws.var() - 1.0) < 0.005
    assert abs((draws**3).mean() - 1.0) < 0.01


def test_statistic_zero_for_interpolating_model(rng):
    predictors, _ = sample_constant_model(rng)
    responses = np.full(100, 2.0)
    cfg = make_cfg()
    value = goftest.statistic(predictors, responses, parfit.constant_family(), [2.0], cfg)
    assert value == 0.0


def test_statistic_zero_weight_function(rng):
    predictors, responses = sample_constant_model(rng)
    cfg = make_cfg(weight_fn=lambda nodes: np.zeros(len(nodes)))
    value = goftest.statistic(
        predictors, responses, parfit.constant_family(), [responses.mean()], cfg
    )
    assert value == 0.0


@pytest.mark.parametrize("degree", [0, 1])
def test_residual_form_equals_direct_form(degree, rng):
    for _ in range(10):
        predictors, responses = sample_constant_model(rng, n=60)
        family = parfit.linear_family(1)
        theta = parfit.fit(family, predictors, responses).theta
        cfg = make_cfg(degree=degree)
        cache = goftest.node_cache(predictors, cfg)
        residuals = responses - parfit.predict_batch(family, theta, predictors)
        residual_form = goftest.statistic_from_residuals(cache, residuals)
        fitted_curve = cache.rows @ responses
        smoothed_model = cache.rows @ parfit.predict_batch(family, theta, predictors)
        direct_form = float(cache.node_factor @ (fitted_curve - smoothed_model) ** 2)
        assert residual_form == pytest.approx(direct_form, abs=1e-10)
        assert residual_form >= 0.0


def test_statistic_permutation_invariant(rng):
    predictors, responses = sample_constant_model(rng)
    family = parfit.constant_family()
    theta = [responses.mean()]
    cfg = make_cfg()
    base = goftest.statistic(predictors, responses, family, theta, cfg)
    perm = rng.permutation(100)
    permuted = goftest.statistic(predictors[perm], responses[perm], family, theta, cfg)
    assert base == pytest.approx(permuted, rel=1e-12)


def test_constant_shift_absorbed_by_constant_family(rng):
    predictors, responses = sample_constant_model(rng)
    family = parfit.constant_family()
    cfg = make_cfg(bootstrap=50)
    base = goftest.bootstrap_test(predictors, responses, family, cfg)
    shifted = goftest.bootstrap_test(predictors, responses + 7.0, family, cfg)
    assert base.statistic == pytest.approx(shifted.statistic, abs=1e-12)
    assert np.allclose(base.bootstrap_statistics, shifted.bootstrap_statistics, atol=1e-12)


def test_bootstrap_single_replicate_pvalue(rng):
    predictors, responses = sample_constant_model(rng, n=40)
    cfg = make_cfg(bootstrap=1)
    result = goftest.bootstrap_test(predictors, responses, parfit.constant_family(), cfg)
    assert result.p_value in (0.0, 1.0)


def test_bootstrap_deterministic_and_reusable(rng):
    predictors, responses = sample_constant_model(rng)
    family = parfit.constant_family()
    cfg = make_cfg(bootstrap=100, seed=33)
    first = goftest.bootstrap_test(predictors, responses, family, cfg)
    second = goftest.bootstrap_test(predictors, responses, family, cfg)
    assert first.p_value == second.p_value
    assert np.array_equal(first.bootstrap_statistics, second.bootstrap_statistics)


def test_fast_path_equals_from_scratch(rng):
    predictors, responses = sample_constant_model(rng)
    family = parfit.linear_family(1)
    cfg = make_cfg(bootstrap=25, seed=5)
    result = goftest.bootstrap_test(predictors, responses, family, cfg)
    fitted = parfit.predict_batch(family, result.theta_hat, predictors)
    residuals = responses - fitted
    draws = goftest.golden_section_draws((25, 100), np.random.default_rng(5))
    for b in (0, 7, 24):
        star = fitted + residuals * draws[b]
        theta_star = parfit.fit(family, predictors, star).theta
        scratch = goftest.statistic(predictors, star, family, theta_star, cfg)
        assert scratch == pytest.approx(result.bootstrap_statistics[b], abs=1e-10)


def test_simple_hypothesis_skips_refit(rng):
    predictors, responses = sample_constant_model(rng)
    family = parfit.constant_family()
    cfg = make_cfg(bootstrap=64, hypothesis="simple", theta0=np.array([1.0]))
    result = goftest.bootstrap_test(predictors, responses, family, cfg)
    assert result.theta_hat[0] == 1.0
    assert 0.0 <= result.p_value <= 1.0
    assert result.failed_replicates == 0


def test_multiplier_block_shared_across_bandwidths(rng):
    predictors, responses = sample_constant_model(rng)
    family = parfit.constant_family()
    draws = goftest.golden_section_draws((80, 100), rng)
    p_values = []
    for h in (0.4, 0.8):
        cfg = make_cfg(h=h, bootstrap=80)
        result = goftest.bootstrap_test(
            predictors, responses, family, cfg, multipliers=draws
        )
        p_values.append(result.p_value)
    assert all(0.0 <= p <= 1.0 for p in p_values)
    with pytest.raises(ValueError):
        cfg = make_cfg(bootstrap=80)
        goftest.bootstrap_test(
            predictors, responses, family, cfg, multipliers=draws[:, :50]
        )


def _stubborn_family():
    """Predictions ignore theta while the gradient pretends otherwise."""

    def predict(theta, points):
        points = np.atleast_2d(points)
        return np.zeros(points.shape[0])

    def grad(theta, points):
        points = np.atleast_2d(points)
        return np.ones((points.shape[0], 1))

    return parfit.custom_family(predict, grad, 1, kind="stubborn")


def test_bootstrap_aborts_when_refits_fail(rng):
    predictors, responses = sample_constant_model(rng, n=30)
    cfg = make_cfg(bootstrap=20)
    with pytest.raises(RuntimeError, match="refits failed"):
        goftest.bootstrap_test(predictors, responses, _stubborn_family(), cfg)


def test_simple_null_rejection_rate():
    """Simple-hypothesis size stays near nominal over Monte Carlo reps."""
    family = parfit.constant_family()
    quad = goftest.default_quadrature(1)
    rejected = 0
    reps = 200
    for trial in range(reps):
        trial_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=404, spawn_key=(trial,))
        )
        predictors, responses = sample_constant_model(trial_rng)
        cfg = goftest.GofConfig(
            fit=LocalFitConfig(0, 0.5), quadrature=quad, bootstrap=100,
            seed=404, hypothesis="simple", theta0=np.array([1.0]),
        )
        draws = goftest.golden_section_draws((100, 100), trial_rng)
        result = goftest.bootstrap_test(
            predictors, responses, family, cfg, multipliers=draws
        )
        rejected += result.p_value < 0.05
    assert 0.02 <= rejected / reps <= 0.08


def test_config_validation():
    with pytest.raises(ValueError):
        make_cfg(bootstrap=0)
    with pytest.raises(ValueError):
        make_cfg(hypothesis="simple")
    with pytest.raises(ValueError):
        make_cfg(hypothesis="plain")


def test_center_scale_plugin_values():
    fit_cfg = LocalFitConfig(degree=0, bandwidth=0.2)
    variance = gof_asymptotic_variance(VON_MISES, 1, (0.5**2) * 2.0 * pi)
    center, scale = goftest.asymptotic_center_scale(fit_cfg, 1, 1000, 0.5 * 2.0 * pi, variance)
    assert center == pytest.approx(sqrt(pi) / 400.0, rel=1e-9)
    assert scale == pytest.approx(sqrt(0.626657), abs=1e-6)
    tighter, _ = goftest.asymptotic_center_scale(
        LocalFitConfig(degree=0, bandwidth=0.1), 1, 1000, 0.5 * 2.0 * pi, variance
    )
    assert tighter > center


def test_result_serialization_roundtrip(rng):
    import json

    predictors, responses = sample_constant_model(rng, n=50)
    cfg = make_cfg(bootstrap=40, seed=9)
    result = goftest.bootstrap_test(predictors, responses, parfit.constant_family(), cfg)
    payload = json.loads(result.to_json())
    assert payload["p_value"] == result.p_value
    assert payload["config"]["bootstrap"] == 40
    assert payload["config"]["seed"] == 9
    assert payload["bootstrap"]["replicates"] == 40
    assert "0.5" in payload["bootstrap"]["quantiles"]
