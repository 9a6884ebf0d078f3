import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stackppc.dataset import Column, Dataset
from stackppc.design import DesignWarning, build_design, drop_row
from stackppc.model import (ModelEnsemble, ModelSpec, PriorConfig, grad_log_posterior,
                            log_likelihood, log_posterior, pointwise_log_lik, predict_prob)


def bernoulli_loglik(beta, X, y):
    # plain-python oracle
    total = 0.0
    for row, yi in zip(X, y):
        eta = sum(b * x for b, x in zip(beta, row))
        p = 1.0 / (1.0 + math.exp(-eta))
        total += math.log(p) if yi == 1 else math.log(1.0 - p)
    return total


def test_zero_beta_four_rows():
    X = np.ones((4, 2))
    assert log_likelihood([0.0, 0.0], X, [1, 0, 1, 1]) == pytest.approx(4 * math.log(0.5), abs=1e-12)


def test_saturation_limit():
    assert log_likelihood([800.0], np.ones((1, 1)), [1]) == 0.0
    assert np.isfinite(log_likelihood([-800.0], np.ones((1, 1)), [1]))


def test_three_rows_against_oracle():
    X, y = np.ones((3, 1)), [1, 0, 1]
    expected = bernoulli_loglik([0.5], X, y)
    assert expected == pytest.approx(-1.922231, abs=1e-6)
    assert log_likelihood([0.5], X, y) == pytest.approx(expected, abs=1e-12)


def test_pointwise_values():
    np.testing.assert_allclose(pointwise_log_lik([0.0], np.ones((3, 1)), [0, 1, 1]), math.log(0.5))
    eta = math.log(9.0)  # p = 0.9
    assert pointwise_log_lik([eta], np.ones((1, 1)), [1])[0] == pytest.approx(math.log(0.9), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (7, 3), elements=st.floats(-5, 5)),
       arrays(np.float64, 3, elements=st.floats(-3, 3)),
       arrays(np.int8, 7, elements=st.integers(0, 1)))
def test_pointwise_sums_to_total(X, beta, y):
    y = y.astype(float)
    assert pointwise_log_lik(beta, X, y).sum() == pytest.approx(log_likelihood(beta, X, y), abs=1e-9)
    assert log_likelihood(beta, X, y) == pytest.approx(bernoulli_loglik(beta, X, y), rel=1e-9, abs=1e-9)


def test_gradient_zero_by_symmetry():
    X = np.column_stack([np.ones(4), np.zeros(4)])
    g = grad_log_posterior(np.zeros(2), X, [1, 0, 1, 0], PriorConfig(autoscale=False))
    assert g[0] == 0.0


def _fd(f, beta, h=1e-5):
    g = np.empty_like(beta)
    for j in range(beta.size):
        e = np.zeros_like(beta)
        e[j] = h
        g[j] = (f(beta + e) - f(beta - e)) / (2 * h)
    return g


def test_gradient_matches_finite_differences(rng):
    X = np.column_stack([np.ones(60), rng.normal(size=(60, 4))])
    y = (rng.random(60) < 0.4).astype(float)
    beta = rng.normal(size=5)
    prior = PriorConfig()
    g = grad_log_posterior(beta, X, y, prior)
    fd = _fd(lambda b: log_posterior(b, X, y, prior), beta)
    assert np.max(np.abs(g - fd) / np.maximum(np.abs(g), 1.0)) < 1e-6


def test_prior_dominates_far_out(rng):
    X = np.column_stack([np.ones(20), rng.normal(size=20)])
    y = (rng.random(20) < 0.5).astype(float)
    d = np.array([0.6, -0.8])
    vals = [log_posterior(r * d, X, y) for r in (1, 10, 100, 1000)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_prior_autoscale():
    X = np.column_stack([np.ones(4), [0.0, 2.0, 4.0, 6.0]])
    s = PriorConfig().scales(X)
    assert s[0] == 2.5
    assert s[1] == pytest.approx(2.5 / np.std(X[:, 1], ddof=1))
    assert PriorConfig(autoscale=False).scales(X)[1] == 2.5
    with pytest.raises(ValueError):
        PriorConfig(coef_scale=0.0)


def test_predict_prob_values():
    assert predict_prob([0.0], np.ones((1, 1)))[0] == 0.5
    assert predict_prob([0.0820], np.ones((1, 1)))[0] == pytest.approx(0.5205, abs=5e-5)
    assert predict_prob([-10.0], np.ones((1, 1)))[0] == pytest.approx(4.5398e-5, rel=1e-4)


def test_non_finite_beta_rejected():
    with pytest.raises(ValueError):
        log_likelihood([np.nan], np.ones((1, 1)), [1])
    with pytest.raises(ValueError):
        log_likelihood([0.0, 1.0], np.ones((2, 1)), [1, 0])


def _data(**cols):
    columns = {"y": Column("y", np.array([0.0, 1.0, 1.0, 0.0]))}
    roles = {"y": "outcome"}
    for name, (values, levels, role) in cols.items():
        columns[name] = Column(name, values, levels)
        roles[name] = role
    return Dataset(columns, roles)


def test_design_single_binary():
    d = _data(FEM=([0, 1, 1, 0], ("0", "1"), "focal"))
    des = build_design(ModelSpec.from_formula("y ~ FEM"), d)
    assert des.labels == ("(Intercept)", "FEM1")
    np.testing.assert_array_equal(des.X[:, 1], [0, 1, 1, 0])


@pytest.mark.filterwarnings("ignore::stackppc.design.DesignWarning")
def test_design_core_model_five_columns():
    d = _data(FEM=([0, 1, 1, 0], ("0", "1"), "focal"),
              SES=([0, 1, 2, 3], ("1", "2", "3", "4"), "focal"))
    des = build_design(ModelSpec.from_formula("y ~ FEM + SES"), d)
    assert des.labels == ("(Intercept)", "FEM1", "SES2", "SES3", "SES4")
    assert des.p == 5


def test_design_interaction_truth_table():
    a, b = [0.0, 0.0, 1.0, 1.0], [0.0, 1.0, 0.0, 1.0]
    d = _data(A=(a, None, "nonfocal"), B=(b, None, "nonfocal"))
    des = build_design(ModelSpec.from_formula("y ~ A + B + A:B"), d)
    assert des.labels[-1] == "A:B"
    np.testing.assert_array_equal(des.X[:, 3], np.multiply(a, b))
    assert des.term_columns["A:B"] == (3, 4)


def test_design_rejects_holdout_and_unknown():
    d = _data(H=([0.0, 1.0, 0.0, 1.0], None, "holdout"))
    with pytest.raises(ValueError, match="hold-out"):
        build_design(ModelSpec.from_formula("y ~ H"), d)
    with pytest.raises(ValueError, match="unknown term"):
        build_design(ModelSpec.from_formula("y ~ Z"), d)


def test_design_rank_deficiency_warns():
    d = _data(A=([1.0, 2.0, 3.0, 4.0], None, "nonfocal"), B=([2.0, 4.0, 6.0, 8.0], None, "nonfocal"))
    with pytest.warns(DesignWarning, match="rank deficient"):
        des = build_design(ModelSpec.from_formula("y ~ A + B"), d)
    assert des.warnings


def test_drop_row():
    d = _data(A=([1.0, 2.0, 3.0, 4.0], None, "nonfocal"))
    des = drop_row(build_design(ModelSpec.from_formula("y ~ A"), d), 1)
    np.testing.assert_array_equal(des.X[:, 1], [1, 3, 4])
    np.testing.assert_array_equal(des.y, [0, 1, 0])


def test_formula_and_dict_roundtrip():
    spec = ModelSpec.from_formula("y ~ A + B + A:B", "m")
    assert spec.terms == ("A", "B") and spec.interactions == (("A", "B"),)
    assert ModelSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ValueError):
        ModelSpec.from_formula("A + B")


def test_ensemble_validation():
    core = ModelSpec.from_formula("y ~ F", "core")
    c1 = ModelSpec.from_formula("y ~ F + A", "c1")
    c2 = ModelSpec.from_formula("y ~ F + B", "c2")
    assert ModelEnsemble(core, [c1, c2]).models == (core, c1, c2)
    with pytest.raises(ValueError, match="lacks core terms"):
        ModelEnsemble(core, [ModelSpec.from_formula("y ~ A", "bad")])
    with pytest.raises(ValueError, match="share non-core"):
        ModelEnsemble(core, [c1, ModelSpec.from_formula("y ~ F + A + B", "c3")])
    with pytest.raises(ValueError, match="at least one candidate"):
        ModelEnsemble(core, [])
