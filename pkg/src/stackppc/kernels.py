"""Hot numeric kernels.

The ``@jit`` functions are valid both as numba ``nopython`` code and as
plain numpy code; :mod:`stackppc._accel` decides which one runs. The
log-posterior gradient has two bodies (a fused loop for numba, whole-array
ops for numpy). Bulk array helpers stay numpy-only. Arrays passed in must
be C-contiguous float64.

The HMC kernels are specialised to the logistic-regression log posterior
with independent zero-mean normal priors (``prec`` holds 1 / scale**2).
Randomness is never drawn inside a kernel: callers pass standard-normal
momentum draws and a buffer of uniforms, so both execution paths consume
identical random streams.
"""
import numpy as np

from ._accel import NUMBA_ENABLED, jit


def log1p_exp(eta):
    """Elementwise ``log(1 + exp(eta))`` without overflow."""
    return np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))


def sigmoid(eta):
    e = np.exp(-np.abs(eta))
    return np.where(eta >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))


def pointwise_loglik(theta, X, y):
    eta = X @ theta
    return y * eta - log1p_exp(eta)


def loglik_matrix(draws, X, y):
    """S x n matrix of pointwise log-likelihoods, one row per draw."""
    eta = draws @ X.T
    return y * eta - log1p_exp(eta)


def _logp_grad_numpy(theta, X, y, prec):
    """Log posterior (up to a constant) and its gradient."""
    lp = -0.5 * np.sum(prec * theta * theta)
    grad = -prec * theta
    if X.shape[0] > 0:
        eta = X @ theta
        lp += np.sum(y * eta - log1p_exp(eta))
        grad += X.T @ (y - sigmoid(eta))
    return lp, grad


def _logp_grad_loop(theta, X, y, prec):
    n, d = X.shape
    lp = -0.5 * np.sum(prec * theta * theta)
    grad = -prec * theta
    for i in range(n):
        eta = 0.0
        for j in range(d):
            eta += X[i, j] * theta[j]
        if eta >= 0.0:
            e = np.exp(-eta)
            p = 1.0 / (1.0 + e)
            lp += y[i] * eta - eta - np.log1p(e)
        else:
            e = np.exp(eta)
            p = e / (1.0 + e)
            lp += y[i] * eta - np.log1p(e)
        r = y[i] - p
        for j in range(d):
            grad[j] += X[i, j] * r
    return lp, grad


# A fused single pass is fastest under numba; numpy prefers whole-array ops.
if NUMBA_ENABLED:
    logistic_logp_grad = jit(_logp_grad_loop)
else:
    logistic_logp_grad = _logp_grad_numpy


@jit
def kinetic(p, inv_metric):
    return 0.5 * np.sum(inv_metric * p * p)


@jit
def leapfrog(theta, p, grad, step, inv_metric, X, y, prec):
    """One leapfrog step. Returns new (theta, p, logp, grad); inputs untouched."""
    p_half = p + 0.5 * step * grad
    theta_new = theta + step * inv_metric * p_half
    lp, grad_new = logistic_logp_grad(theta_new, X, y, prec)
    p_new = p_half + 0.5 * step * grad_new
    return theta_new, p_new, lp, grad_new


@jit
def _logaddexp(a, b):
    if a == -np.inf:
        return b
    if b == -np.inf:
        return a
    m = max(a, b)
    return m + np.log(np.exp(a - m) + np.exp(b - m))


@jit
def nuts_transition(theta, logp, grad, step, inv_metric, X, y, prec,
                    max_depth, z, u):
    """One multinomial NUTS transition.

    ``z`` holds ``dim`` standard normals for the momentum and ``u`` at least
    ``2**max_depth + 2*max_depth`` uniforms. Returns
    ``(theta, logp, grad, accept_stat, n_leapfrog, depth, divergent)``.
    """
    dim = theta.shape[0]
    p0 = z / np.sqrt(inv_metric)
    h0 = -logp + kinetic(p0, inv_metric)

    theta_m = theta.copy()
    p_m = p0.copy()
    g_m = grad.copy()
    theta_p = theta.copy()
    p_p = p0.copy()
    g_p = grad.copy()

    sample = theta.copy()
    sample_lp = logp
    sample_grad = grad.copy()

    log_w = 0.0
    rho = p0.copy()
    sum_accept = 0.0
    n_leap = 0
    divergent = False
    ui = 0
    depth = 0
    ck_rho = np.zeros((max_depth + 1, dim))
    ck_sharp = np.zeros((max_depth + 1, dim))

    while depth < max_depth:
        forward = u[ui] < 0.5
        ui += 1
        if forward:
            th = theta_p
            pp = p_p
            gg = g_p
            eps = step
        else:
            th = theta_m
            pp = p_m
            gg = g_m
            eps = -step

        n_leaves = 1 << depth
        sub_lw = -np.inf
        sub_rho = np.zeros(dim)
        sub_sample = th
        sub_lp = 0.0
        sub_grad = gg
        stop = False
        for j in range(n_leaves):
            th, pp, lp, gg = leapfrog(th, pp, gg, eps, inv_metric, X, y, prec)
            n_leap += 1
            h = -lp + kinetic(pp, inv_metric)
            if np.isnan(h):
                h = np.inf
            dh = h - h0
            if dh > 1000.0:
                divergent = True
                stop = True
                break
            if dh > 0.0:
                sum_accept += np.exp(-dh)
            else:
                sum_accept += 1.0
            lw = -dh
            new_lw = _logaddexp(sub_lw, lw)
            if u[ui] < np.exp(lw - new_lw):
                sub_sample = th
                sub_lp = lp
                sub_grad = gg
            ui += 1
            sub_lw = new_lw

            sharp = inv_metric * pp
            for lev in range(1, depth + 1):
                if j % (1 << lev) == 0:
                    ck_rho[lev, :] = sub_rho
                    ck_sharp[lev, :] = sharp
            sub_rho = sub_rho + pp
            for lev in range(1, depth + 1):
                if (j + 1) % (1 << lev) == 0:
                    r = sub_rho - ck_rho[lev]
                    if np.sum(sharp * r) <= 0.0 or np.sum(ck_sharp[lev] * r) <= 0.0:
                        stop = True
            if stop:
                break
        if stop:
            break

        if u[ui] < np.exp(sub_lw - log_w):
            sample = sub_sample
            sample_lp = sub_lp
            sample_grad = sub_grad
        ui += 1
        log_w = _logaddexp(log_w, sub_lw)
        if forward:
            theta_p = th
            p_p = pp
            g_p = gg
        else:
            theta_m = th
            p_m = pp
            g_m = gg
        rho = rho + sub_rho
        depth += 1
        if (np.sum(inv_metric * p_p * rho) <= 0.0
                or np.sum(inv_metric * p_m * rho) <= 0.0):
            break

    accept = sum_accept / max(n_leap, 1)
    return sample, sample_lp, sample_grad, accept, n_leap, depth, divergent


@jit
def hmc_transition(theta, logp, grad, step, inv_metric, X, y, prec, n_steps, z, u):
    """Fixed-length HMC with a Metropolis correction (debugging fallback)."""
    p = z / np.sqrt(inv_metric)
    h0 = -logp + kinetic(p, inv_metric)
    th = theta
    gg = grad
    lp = logp
    for _ in range(n_steps):
        th, p, lp, gg = leapfrog(th, p, gg, step, inv_metric, X, y, prec)
    h = -lp + kinetic(p, inv_metric)
    if np.isnan(h):
        h = np.inf
    dh = h - h0
    accept = 1.0 if dh <= 0.0 else np.exp(-dh)
    divergent = dh > 1000.0
    if u[0] < accept:
        return th, lp, gg, accept, n_steps, 0, divergent
    return theta, logp, grad, accept, n_steps, 0, divergent


@jit
def gpd_fit(x):
    """Generalized Pareto fit to sorted exceedances ``x`` (ascending, >= 0).

    Profile-likelihood estimator over a fixed grid with the weakly
    informative adjustment of the shape toward 0.5. Returns (k, sigma).
    """
    n = x.shape[0]
    prior = 3.0
    m = 30 + int(np.floor(np.sqrt(n)))
    xstar = x[int(np.floor(n / 4.0 + 0.5)) - 1]
    if xstar <= 0.0:
        pos = x[x > 0.0]
        xstar = pos[0]
    theta = np.empty(m)
    for j in range(m):
        theta[j] = 1.0 / x[n - 1] + (1.0 - np.sqrt(m / (j + 0.5))) / prior / xstar
    prof = np.empty(m)
    for j in range(m):
        a = -theta[j]
        kk = np.mean(np.log1p(a * x))
        prof[j] = n * (np.log(a / kk) - kk - 1.0)
    prof = prof - np.max(prof)
    w = np.exp(prof)
    w = w / np.sum(w)
    theta_hat = np.sum(theta * w)
    k = np.mean(np.log1p(-theta_hat * x))
    sigma = -k / theta_hat
    k = k * n / (n + 10.0) + 10.0 * 0.5 / (n + 10.0)
    return k, sigma


@jit
def psis_column(lw, tail_len):
    """Pareto-smooth one column of log importance ratios.

    Returns log weights shifted so the largest raw ratio is 1 (smoothed
    values are truncated there) and the tail shape estimate. A column whose
    tail carries no spread is left unsmoothed and reported with ``k = -inf``.
    """
    s = lw.shape[0]
    out = lw - np.max(lw)
    order = np.argsort(out, kind="mergesort")
    cutoff = out[order[s - tail_len - 1]]
    tail_idx = order[s - tail_len:]
    exp_cut = np.exp(cutoff)
    x = np.exp(out[tail_idx]) - exp_cut
    k = -np.inf
    if x[tail_len - 1] > 0.0:
        k, sigma = gpd_fit(x)
        if np.isfinite(k):
            for j in range(tail_len):
                prob = (j + 0.5) / tail_len
                if k == 0.0:
                    q = -sigma * np.log1p(-prob)
                else:
                    q = sigma * np.expm1(-k * np.log1p(-prob)) / k
                out[tail_idx[j]] = np.log(exp_cut + q)
            out = np.minimum(out, 0.0)
    return out, k


@jit
def psis_matrix(log_ratios, tail_len):
    """Column-wise :func:`psis_column` over an S x n matrix."""
    s, n = log_ratios.shape
    lw = np.empty((s, n))
    ks = np.empty(n)
    for i in range(n):
        col = np.ascontiguousarray(log_ratios[:, i])
        w, k = psis_column(col, tail_len)
        lw[:, i] = w
        ks[i] = k
    return lw, ks
