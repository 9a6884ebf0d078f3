"""Pointwise leave-one-out predictive densities.

Two routes: Pareto-smoothed importance sampling over the full-data draws
(fast), and brute-force refits with one observation removed (exact, used
as the oracle).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from . import kernels
from .design import drop_row
from .diagnostics import diagnose
from .sampler import SamplerConfig, sample

log = logging.getLogger(__name__)

KHAT_WARN = 0.7


class LooError(RuntimeError):
    pass


@dataclass(frozen=True)
class LogLikMatrix:
    values: np.ndarray  # S x n
    model: str = ""
    chain: np.ndarray | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("log-likelihood matrix must be 2-D")
        if not np.all(np.isfinite(v)):
            raise ValueError("log-likelihood matrix has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class LooResult:
    pointwise: np.ndarray
    method: str  # "psis" or "exact"
    khat: np.ndarray | None = None
    model: str = ""

    def __post_init__(self):
        if (self.khat is not None) != (self.method == "psis"):
            raise ValueError("khat is present exactly when method is 'psis'")

    @property
    def elpd(self) -> float:
        return float(np.sum(self.pointwise))

    @property
    def flagged(self) -> np.ndarray:
        """Observations whose tail shape exceeds the reliability threshold."""
        if self.khat is None:
            return np.array([], dtype=int)
        return np.flatnonzero(self.khat > KHAT_WARN)


def loglik_matrix(draws, design) -> LogLikMatrix:
    D = np.ascontiguousarray(draws.draws, dtype=float)
    X = np.ascontiguousarray(design.X, dtype=float)
    if D.shape[1] != X.shape[1]:
        raise ValueError(f"draws have {D.shape[1]} parameters, design has {X.shape[1]} columns")
    L = kernels.loglik_matrix(D, X, np.asarray(design.y, dtype=float))
    return LogLikMatrix(L, getattr(design, "name", ""), draws.chain)


def tail_length(S: int) -> int:
    return min(math.ceil(0.2 * S), math.ceil(3.0 * math.sqrt(S)))


def psis_log_weights(L):
    """Normalized smoothed log weights (S x n) and tail shapes (n)."""
    values = getattr(L, "values", L)
    values = np.ascontiguousarray(values, dtype=float)
    S = values.shape[0]
    if S < 100:
        raise LooError(f"PSIS needs at least 100 draws (got {S}); use exact_loo instead")
    lw, khat = kernels.psis_matrix(np.ascontiguousarray(-values), tail_length(S))
    lw = lw - logsumexp(lw, axis=0)
    return lw, khat


def psis_loo(L) -> LooResult:
    """PSIS-LOO pointwise elpd with tail-shape diagnostics."""
    values = getattr(L, "values", L)
    lw, khat = psis_log_weights(values)
    elpd = logsumexp(lw + values, axis=0)
    res = LooResult(elpd, "psis", khat, getattr(L, "model", ""))
    if res.flagged.size:
        log.warning("%d observation(s) with Pareto k > %.1f: %s", res.flagged.size,
                    KHAT_WARN, res.flagged.tolist())
    return res


def loo_expectation(L, values) -> np.ndarray:
    """PSIS-LOO expectation of per-draw ``values`` (S x n) for each observation."""
    lw, _ = psis_log_weights(L)
    return np.sum(np.exp(lw) * values, axis=0)


def exact_loo(design, prior=None, config: SamplerConfig | None = None,
              max_n: int = 2000, rhat_max: float = 1.05) -> LooResult:
    """Refit the model n times, each time without one observation."""
    cfg = config or SamplerConfig()
    n = design.n
    if n < 2:
        raise LooError("exact LOO needs at least 2 observations (training fold would be empty)")
    if n > max_n:
        raise LooError(f"exact LOO with n={n} exceeds max_n={max_n}")
    out = np.empty(n)
    X = np.asarray(design.X)
    y = np.asarray(design.y)
    for i in range(n):
        fold = drop_row(design, i)
        draws = sample(fold, prior, replace(cfg, seed=cfg.seed + 1 + i))
        if draws.n_chains >= 2:
            worst, value = diagnose(draws).worst()
            if value > rhat_max:
                raise LooError(f"refit without observation {i} failed diagnostics: "
                               f"R-hat {value:.3f} for {worst}")
        ll = kernels.loglik_matrix(np.ascontiguousarray(draws.draws),
                                   np.ascontiguousarray(X[i:i + 1]), y[i:i + 1])[:, 0]
        out[i] = logsumexp(ll) - math.log(ll.size)
    return LooResult(out, "exact", None, "")
