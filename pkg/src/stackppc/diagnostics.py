"""Convergence diagnostics: split-R-hat and effective sample sizes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats


class DiagnosticsError(ValueError):
    pass


@dataclass(frozen=True)
class Diagnostics:
    labels: tuple[str, ...]
    rhat: np.ndarray  # max of the three variants below
    rhat_bulk: np.ndarray
    rhat_tail: np.ndarray
    rhat_classic: np.ndarray
    ess_bulk: np.ndarray
    ess_tail: np.ndarray
    divergences: int
    saturated: int

    def worst(self):
        j = int(np.argmax(self.rhat))
        return self.labels[j], float(self.rhat[j])

    def to_dict(self) -> dict:
        return {
            "parameters": [
                {"name": lab, "rhat": float(self.rhat[j]), "rhat_bulk": float(self.rhat_bulk[j]),
                 "rhat_tail": float(self.rhat_tail[j]), "rhat_classic": float(self.rhat_classic[j]),
                 "ess_bulk": float(self.ess_bulk[j]), "ess_tail": float(self.ess_tail[j])}
                for j, lab in enumerate(self.labels)
            ],
            "divergences": self.divergences,
            "saturated": self.saturated,
        }


def _split(x):
    """(chains, n) -> (2*chains, n//2); the middle draw of odd chains is dropped."""
    half = x.shape[1] // 2
    return np.concatenate([x[:, :half], x[:, x.shape[1] - half:]], axis=0)


def _z_scale(x):
    r = stats.rankdata(x, method="average").reshape(x.shape)
    return stats.norm.ppf((r - 0.375) / (x.size + 0.25))


def _rhat(x):
    m, n = x.shape
    if n < 2:
        return np.nan
    w = x.var(axis=1, ddof=1).mean()
    b = n * x.mean(axis=1).var(ddof=1)
    var_hat = (n - 1) / n * w + b / n
    if w == 0:
        return 1.0 if var_hat == 0 else np.inf
    return float(np.sqrt(var_hat / w))


def _autocov(x):
    """Autocovariance of each row of x via FFT (biased, lag 0..n-1)."""
    m, n = x.shape
    xc = x - x.mean(axis=1, keepdims=True)
    size = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(xc, size, axis=1)
    ac = np.fft.irfft(f * np.conj(f), size, axis=1)[:, :n]
    return ac / n


def _ess(x):
    """ESS of (chains, n) draws with Geyer's initial monotone sequence."""
    m, n = x.shape
    if n < 4:
        return np.nan
    acov = _autocov(x)
    chain_var = acov[:, 0] * n / (n - 1.0)
    mean_var = chain_var.mean()
    var_plus = mean_var * (n - 1.0) / n
    if m > 1:
        var_plus += x.mean(axis=1).var(ddof=1)
    if var_plus <= 0:
        return float(m * n)
    rho = 1.0 - (mean_var - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # initial positive sequence over pair sums
    pair_sums = []
    t = 0
    while t + 1 < n:
        s = rho[t] + rho[t + 1]
        if s <= 0:
            break
        pair_sums.append(s)
        t += 2
    pair_sums = np.array(pair_sums) if pair_sums else np.array([rho[0]])
    # enforce monotone decrease
    pair_sums = np.minimum.accumulate(pair_sums)
    tau = -1.0 + 2.0 * pair_sums.sum()
    tau = max(tau, 1.0 / np.log10(m * n))
    return float(min(m * n / tau, m * n))


def rhat(x):
    """Rank-normalised split-R-hat for (chains, n) draws of one parameter."""
    bulk = _rhat(_z_scale(_split(x)))
    folded = np.abs(x - np.median(x))
    tail = _rhat(_z_scale(_split(folded)))
    classic = _rhat(_split(x))
    return bulk, tail, classic


def ess_bulk(x):
    return _ess(_z_scale(_split(x)))


def ess_tail(x):
    lo, hi = np.quantile(x, [0.05, 0.95])
    e_lo = _ess(_split((x <= lo).astype(float)))
    e_hi = _ess(_split((x <= hi).astype(float)))
    return float(min(e_lo, e_hi))


def diagnose_array(x, labels=None, divergences=0, saturated=0) -> Diagnostics:
    """Diagnostics for an array of shape (chains, draws) or (chains, draws, p)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = x[:, :, None]
    m, n, p = x.shape
    if m < 2:
        raise DiagnosticsError("R-hat is undefined for a single chain; run at least 2 chains")
    if n < 4:
        raise DiagnosticsError("need at least 4 draws per chain")
    cols = {k: np.empty(p) for k in ("bulk", "tail", "classic", "eb", "et")}
    for j in range(p):
        xj = x[:, :, j]
        cols["bulk"][j], cols["tail"][j], cols["classic"][j] = rhat(xj)
        cols["eb"][j] = ess_bulk(xj)
        cols["et"][j] = ess_tail(xj)
    combined = np.fmax(np.fmax(cols["bulk"], cols["tail"]), cols["classic"])
    labels = tuple(labels) if labels is not None else tuple(f"b{j}" for j in range(p))
    return Diagnostics(labels, combined, cols["bulk"], cols["tail"], cols["classic"],
                       cols["eb"], cols["et"], int(divergences), int(saturated))


def diagnose(draws) -> Diagnostics:
    """Diagnostics for :class:`~stackppc.sampler.PosteriorDraws`."""
    if draws.n_chains < 2:
        raise DiagnosticsError("R-hat is undefined for a single chain; run at least 2 chains")
    return diagnose_array(draws.by_chain(), draws.labels, draws.divergences, draws.saturated)
