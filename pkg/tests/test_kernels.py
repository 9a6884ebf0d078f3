import os
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from stackppc import kernels
from stackppc._accel import NUMBA_ENABLED, python_version


def _problem(rng, n=80, d=4):
    X = np.column_stack([np.ones(n), rng.normal(size=(n, d - 1))])
    y = (rng.random(n) < 0.4).astype(float)
    return X, y, rng.normal(size=d), np.full(d, 0.3)


def test_gradient_bodies_agree(rng):
    X, y, theta, prec = _problem(rng)
    lp_a, g_a = kernels._logp_grad_numpy(theta, X, y, prec)
    lp_b, g_b = kernels._logp_grad_loop(theta, X, y, prec)
    lp_c, g_c = kernels.logistic_logp_grad(theta, X, y, prec)
    assert lp_a == pytest.approx(lp_b, rel=1e-12)
    assert lp_a == pytest.approx(lp_c, rel=1e-12)
    np.testing.assert_allclose(g_a, g_b, rtol=1e-11, atol=1e-12)
    np.testing.assert_allclose(g_a, g_c, rtol=1e-11, atol=1e-12)


def test_gradient_empty_data():
    lp, g = kernels._logp_grad_numpy(np.array([1.0, 2.0]), np.empty((0, 2)), np.empty(0),
                                     np.array([1.0, 1.0]))
    assert lp == pytest.approx(-2.5)
    np.testing.assert_allclose(g, [-1.0, -2.0])


def test_sigmoid_and_log1p_exp_extremes():
    eta = np.array([-800.0, -30.0, 0.0, 30.0, 800.0])
    p = kernels.sigmoid(eta)
    assert p[0] == 0.0 and p[2] == 0.5 and p[4] == 1.0
    np.testing.assert_allclose(kernels.log1p_exp(eta), np.logaddexp(0.0, eta), rtol=1e-14)


def test_leapfrog_reversible(rng):
    X, y, theta, prec = _problem(rng)
    inv_metric = np.ones(theta.size)
    lp, grad = kernels.logistic_logp_grad(theta, X, y, prec)
    p = rng.normal(size=theta.size)
    th, q = theta.copy(), p.copy()
    g = grad
    for _ in range(10):
        th, q, _, g = kernels.leapfrog(th, q, g, 0.05, inv_metric, X, y, prec)
    q = -q
    for _ in range(10):
        th, q, _, g = kernels.leapfrog(th, q, g, 0.05, inv_metric, X, y, prec)
    np.testing.assert_allclose(th, theta, atol=1e-10)
    np.testing.assert_allclose(-q, p, atol=1e-10)


@pytest.mark.skipif(not NUMBA_ENABLED, reason="compiled path disabled")
def test_compiled_kernels_match_python(rng):
    X, y, theta, prec = _problem(rng)
    inv_metric = np.full(theta.size, 0.8)
    lp, grad = kernels.logistic_logp_grad(theta, X, y, prec)
    z = rng.normal(size=theta.size)
    u = rng.random(2 ** 6 + 2 * 6 + 1)
    args = (theta, lp, grad, 0.1, inv_metric, X, y, prec, 6, z, u)
    out_c = kernels.nuts_transition(*args)
    out_p = python_version(kernels.nuts_transition)(*args)
    np.testing.assert_allclose(out_c[0], out_p[0], rtol=1e-10)
    assert out_c[3:] == pytest.approx(out_p[3:])
    L = rng.standard_t(3, size=(300, 4))
    lw_c, k_c = kernels.psis_matrix(L, 50)
    lw_p, k_p = python_version(kernels.psis_matrix)(L, 50)
    np.testing.assert_allclose(lw_c, lw_p, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(k_c, k_p, rtol=1e-12)


_SCRIPT = textwrap.dedent("""
    import sys, numpy as np
    from stackppc import NUMBA_ENABLED, kernels
    from stackppc.dataset import generate_synthetic
    from stackppc.design import build_design
    from stackppc.model import ModelSpec
    from stackppc.sampler import SamplerConfig, sample
    d = generate_synthetic({"n": 300, "beta": [-0.5, 1.0, -1.0],
                            "predictors": [{"name": "a"}, {"name": "b"}]}, 4)
    des = build_design(ModelSpec.from_formula("y ~ a + b"), d)
    dr = sample(des, None, SamplerConfig(chains=2, warmup=150, draws=150, seed=9))
    L = np.random.default_rng(1).standard_t(3, size=(400, 5))
    lw, k = kernels.psis_matrix(L, 60)
    np.savez(sys.argv[1], draws=dr.draws, lw=lw, k=k, flag=NUMBA_ENABLED)
""")


def _run(tmp_path, name, disable):
    env = dict(os.environ)
    env.pop("STACKPPC_DISABLE_NUMBA", None)
    if disable:
        env["STACKPPC_DISABLE_NUMBA"] = "1"
    out = tmp_path / f"{name}.npz"
    subprocess.run([sys.executable, "-c", _SCRIPT, str(out)], env=env, check=True, timeout=600)
    return np.load(out)


def test_numba_and_numpy_paths_agree(tmp_path):
    fast = _run(tmp_path, "fast", disable=False)
    slow = _run(tmp_path, "slow", disable=True)
    assert not bool(slow["flag"])
    np.testing.assert_allclose(fast["lw"], slow["lw"], rtol=0, atol=1e-12)
    np.testing.assert_allclose(fast["k"], slow["k"], rtol=0, atol=1e-12)
    # same random streams; only libm rounding differs between the paths
    np.testing.assert_allclose(fast["draws"], slow["draws"], rtol=0, atol=1e-6)
