import math

import numpy as np
import pytest
from scipy import integrate, stats

from stackppc import kernels
from stackppc.dataset import generate_synthetic
from stackppc.design import build_design
from stackppc.loo import (LooError, LogLikMatrix, exact_loo, loglik_matrix, loo_expectation,
                          psis_log_weights, psis_loo, tail_length)
from stackppc.model import ModelSpec, log_likelihood, pointwise_log_lik
from stackppc.sampler import PosteriorDraws, SamplerConfig


def _draws(B):
    B = np.atleast_2d(np.asarray(B, dtype=float))
    S = B.shape[0]
    return PosteriorDraws(B, np.zeros(S, int), np.arange(S), tuple(f"b{j}" for j in range(B.shape[1])),
                          np.ones(1), np.ones((1, B.shape[1])), 0, 0, np.empty(0), np.empty(0), 0)


@pytest.fixture(scope="module")
def design50():
    d = generate_synthetic({"n": 50, "beta": [0.3, 1.0], "predictors": [{"name": "x"}]}, 8)
    return build_design(ModelSpec.from_formula("y ~ x"), d)


def test_loglik_matrix_zero_draw(design50):
    L = loglik_matrix(_draws([[0.0, 0.0]]), design50)
    np.testing.assert_allclose(L.values, math.log(0.5), rtol=1e-15)


def test_loglik_matrix_recomputation(design50, rng):
    B = rng.normal(size=(100, 2))
    L = loglik_matrix(_draws(B), design50).values
    for s in range(100):
        np.testing.assert_allclose(L[s], pointwise_log_lik(B[s], design50.X, design50.y),
                                   rtol=1e-13, atol=1e-15)
        assert L[s].sum() == pytest.approx(log_likelihood(B[s], design50.X, design50.y), rel=1e-12)


def test_loglik_matrix_rejects_non_finite():
    with pytest.raises(ValueError):
        LogLikMatrix(np.array([[0.0, -np.inf]]))


def test_tail_length():
    assert tail_length(4000) == 190
    assert tail_length(100) == 20


def test_constant_matrix_no_smoothing():
    c = -0.7
    res = psis_loo(np.full((400, 6), c))
    np.testing.assert_allclose(res.pointwise, c, rtol=1e-14)
    assert np.all(res.khat == -np.inf)
    assert res.flagged.size == 0


def test_heavy_tail_flagged(rng):
    S = 1000
    L = rng.normal(scale=0.1, size=(S, 3))
    # column 1: one draw carries > 90% of the ratio mass, and the tail is heavy
    L[:, 1] = -np.log(rng.pareto(1.2, size=S) + 1.0) * 2.0
    L[0, 1] = -40.0
    lw = -L[:, 1] - np.max(-L[:, 1])
    assert np.exp(lw).max() / np.exp(lw).sum() > 0.9
    res = psis_loo(L)
    assert res.khat[1] > 0.7
    assert 1 in res.flagged
    assert res.khat[0] < 0.7


def test_gpd_fit_recovers_shape():
    for k_true in (0.2, 0.5, 0.8):
        x = np.sort(stats.genpareto.rvs(k_true, scale=1.0, size=20000, random_state=7))
        k, sigma = kernels.gpd_fit(x)
        assert abs(k - k_true) < 0.05
        assert abs(sigma - 1.0) < 0.08


def test_smoothed_weights_truncated_at_raw_max(rng):
    lw = rng.standard_t(2, size=2000)
    out, k = kernels.psis_column(lw.copy(), tail_length(2000))
    assert np.isfinite(k)
    assert out.max() <= 0.0
    order = np.argsort(lw)
    m = tail_length(2000)
    # the body is untouched and the smoothed tail keeps the original ranking
    np.testing.assert_allclose(out[order[:-m]], (lw - lw.max())[order[:-m]])
    assert np.all(np.diff(out[order[-m:]]) >= 0)


def test_normalized_weights(rng):
    lw, k = psis_log_weights(rng.normal(size=(300, 4)))
    np.testing.assert_allclose(np.exp(lw).sum(axis=0), 1.0, rtol=1e-12)
    assert k.shape == (4,)


def test_psis_needs_enough_draws():
    with pytest.raises(LooError, match="at least 100"):
        psis_loo(np.zeros((50, 3)))


def test_loo_expectation_uniform_weights(rng):
    values = rng.random((200, 3))
    np.testing.assert_allclose(loo_expectation(np.zeros((200, 3)), values), values.mean(axis=0),
                               rtol=1e-12)


def test_exact_loo_single_row_fails():
    d = generate_synthetic({"n": 1, "predictors": []}, 0)
    with pytest.raises(LooError, match="empty"):
        exact_loo(build_design(ModelSpec.from_formula("y ~ 1"), d))


def _intercept_loo_oracle(ones, zeros, held_out, scale=2.5):
    # posterior predictive of the held-out outcome by quadrature over the intercept
    def post(b):
        return np.exp(ones * -np.logaddexp(0, -b) + zeros * -np.logaddexp(0, b)) * stats.norm.pdf(b, 0, scale)

    def pred(b):
        p = 1 / (1 + np.exp(-b))
        return (p if held_out == 1 else 1 - p) * post(b)

    return math.log(integrate.quad(pred, -30, 30)[0] / integrate.quad(post, -30, 30)[0])


def test_exact_loo_intercept_only_symmetry():
    from stackppc.dataset import Column, Dataset
    y = np.array([1.0, 0.0] * 5)
    d = Dataset({"y": Column("y", y)}, {"y": "outcome"})
    design = build_design(ModelSpec.from_formula("y ~ 1"), d)
    res = exact_loo(design, None, SamplerConfig(chains=2, warmup=300, draws=1000, seed=4))
    assert res.method == "exact" and res.khat is None
    oracle = _intercept_loo_oracle(4, 5, 1)
    assert oracle == pytest.approx(_intercept_loo_oracle(5, 4, 0), abs=1e-10)
    np.testing.assert_array_less(np.abs(res.pointwise - oracle), 0.05)
