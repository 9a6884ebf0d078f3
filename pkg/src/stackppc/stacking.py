"""Stacking weights on the simplex, stacked predictive draws, Brier score."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp, softmax

from . import kernels

LPD_FLOOR = 1e-300


@dataclass(frozen=True)
class LpdMatrix:
    """n x K pointwise LOO predictive densities (not logs)."""

    values: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("LPD matrix must be n x K with n, K >= 1")
        v = np.maximum(v, LPD_FLOOR)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        names = tuple(self.names) or tuple(f"model{k + 1}" for k in range(v.shape[1]))
        if len(names) != v.shape[1]:
            raise ValueError("one name per column required")
        object.__setattr__(self, "names", names)

    @classmethod
    def from_loo(cls, results, names: Sequence[str] | None = None) -> "LpdMatrix":
        elpd = np.column_stack([r.pointwise for r in results])
        names = names or [r.model or f"model{k + 1}" for k, r in enumerate(results)]
        return cls(np.exp(np.maximum(elpd, np.log(LPD_FLOOR))), tuple(names))

    @property
    def log_values(self) -> np.ndarray:
        return np.log(self.values)


@dataclass(frozen=True)
class StackingWeights:
    weights: np.ndarray
    objective: float
    tag: str  # "log-score" or "squared-error"
    trace: tuple[float, ...] = ()
    names: tuple[str, ...] = ()

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.weights.tolist()))


def _clean_simplex(w):
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    return w / w.sum()


def log_score(w, log_p) -> float:
    """Mean log of the mixture density, ``(1/n) sum_i log sum_k w_k P_ik``."""
    with np.errstate(divide="ignore"):
        lw = np.log(np.asarray(w, dtype=float))
    return float(np.mean(logsumexp(log_p + lw, axis=1)))


def stack_weights_logscore(P, max_iter: int = 500, gtol: float = 1e-8) -> StackingWeights:
    """Maximize the mean log score of the mixture over the simplex.

    Softmax parameterization (last logit pinned at 0) and BFGS from the
    uniform point. Weights that end up negligible are zeroed when doing so
    does not lower the objective.
    """
    lpd = P if isinstance(P, LpdMatrix) else LpdMatrix(P)
    log_p = lpd.log_values
    n, K = log_p.shape
    if K == 1:
        return StackingWeights(np.ones(1), log_score([1.0], log_p), "log-score",
                               (log_score([1.0], log_p),), lpd.names)
    if not np.all(np.isfinite(log_p)):
        raise ValueError("non-finite log predictive densities")

    def negobj(z):
        w = softmax(np.append(z, 0.0))
        mix = logsumexp(log_p + np.log(w), axis=1)
        # d/dw_k of mean log mixture
        g_w = np.mean(np.exp(log_p - mix[:, None]), axis=0)
        g_z = w * (g_w - np.dot(w, g_w))
        return -float(np.mean(mix)), -g_z[:-1]

    trace = []
    res = minimize(negobj, np.zeros(K - 1), jac=True, method="BFGS",
                   options={"gtol": gtol, "maxiter": max_iter},
                   callback=lambda z: trace.append(-negobj(z)[0]))
    w = _clean_simplex(softmax(np.append(res.x, 0.0)))
    best = log_score(w, log_p)
    pruned = np.where(w < 1e-6, 0.0, w)
    if pruned.sum() > 0:
        pruned = pruned / pruned.sum()
        val = log_score(pruned, log_p)
        if val >= best:
            w, best = pruned, val
    trace.append(best)
    return StackingWeights(w, best, "log-score", tuple(trace), lpd.names)


def _lsq_objective(w, F, y):
    r = y - F @ w
    return float(r @ r)


def _lsq_on_face(F, y, support):
    """Least squares restricted to sum(w)=1 on the given support (KKT solve)."""
    Fs = F[:, support]
    m = len(support)
    A = np.zeros((m + 1, m + 1))
    A[:m, :m] = 2.0 * Fs.T @ Fs
    A[:m, m] = 1.0
    A[m, :m] = 1.0
    b = np.zeros(m + 1)
    b[:m] = 2.0 * Fs.T @ y
    b[m] = 1.0
    sol = np.linalg.lstsq(A, b, rcond=None)[0]
    return sol[:m]


def _project_simplex(v):
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u * idx > (css - 1.0))[0][-1]
    tau = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def stack_weights_lsq(F, y, names: Sequence[str] = (), max_iter: int = 500) -> StackingWeights:
    """Minimize ``sum_i (y_i - sum_k w_k F_ik)^2`` over the simplex.

    Small K is solved exactly by an active-set search over supports; larger
    K falls back to accelerated projected gradient.
    """
    F = np.asarray(F, dtype=float)
    y = np.asarray(y, dtype=float)
    if F.ndim != 2 or F.shape[0] != y.shape[0]:
        raise ValueError(f"dimension mismatch: F {F.shape}, y {y.shape}")
    n, K = F.shape
    names = tuple(names) or tuple(f"model{k + 1}" for k in range(K))
    if K == 1:
        obj = _lsq_objective(np.ones(1), F, y)
        return StackingWeights(np.ones(1), obj, "squared-error", (obj,), names)
    trace = []
    if K <= 12:
        best_w, best = None, np.inf
        for size in range(1, K + 1):
            for support in itertools.combinations(range(K), size):
                ws = _lsq_on_face(F, y, list(support))
                if np.any(ws < -1e-12):
                    continue
                w = np.zeros(K)
                w[list(support)] = ws
                w = _clean_simplex(w)
                obj = _lsq_objective(w, F, y)
                if obj < best - 1e-14:
                    best_w, best = w, obj
                    trace.append(obj)
        return StackingWeights(best_w, best, "squared-error", tuple(trace), names)

    G = 2.0 * F.T @ F
    lip = np.linalg.eigvalsh(G).max()
    w = np.full(K, 1.0 / K)
    v = w.copy()
    t = 1.0
    for _ in range(max_iter * 10):
        grad = G @ v - 2.0 * F.T @ y
        w_new = _project_simplex(v - grad / lip)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        v = w_new + ((t - 1.0) / t_new) * (w_new - w)
        if np.linalg.norm(w_new - w) < 1e-12:
            w = w_new
            break
        w, t = w_new, t_new
        trace.append(_lsq_objective(w, F, y))
    w = _clean_simplex(w)
    return StackingWeights(w, _lsq_objective(w, F, y), "squared-error", tuple(trace), names)


# --------------------------------------------------------------------------
# Stacked predictive distribution


def allocate(weights, S: int) -> np.ndarray:
    """Largest-remainder allocation of S slots proportional to ``weights``."""
    w = np.asarray(weights, dtype=float)
    raw = w * S
    counts = np.floor(raw + 1e-9).astype(np.int64)
    rem = raw - counts
    short = S - int(counts.sum())
    if short > 0:
        order = np.argsort(-rem, kind="stable")
        counts[order[:short]] += 1
    return counts


@dataclass(frozen=True)
class StackedDraws:
    """Per-slot model and draw index into each model's posterior draws."""

    counts: np.ndarray
    slot_model: np.ndarray
    slot_draw: np.ndarray
    sources: tuple = field(repr=False)  # PosteriorDraws per model
    names: tuple[str, ...] = ()
    weights: np.ndarray | None = None

    @property
    def n_slots(self) -> int:
        return self.slot_model.size

    def beta(self, slot: int) -> np.ndarray:
        return self.sources[self.slot_model[slot]].draws[self.slot_draw[slot]]


def stack_draws(weights, draws: Sequence, names: Sequence[str] = ()) -> StackedDraws:
    w = np.asarray(getattr(weights, "weights", weights), dtype=float)
    if w.size != len(draws):
        raise ValueError(f"{w.size} weights for {len(draws)} models")
    sizes = {d.n_draws for d in draws}
    if len(sizes) != 1:
        raise ValueError("all models must carry the same number of draws")
    S = sizes.pop()
    counts = allocate(w, S)
    models, idx = [], []
    for k, c in enumerate(counts):
        models.append(np.full(c, k, dtype=np.int64))
        # evenly spread over the model's draws, so every chain contributes
        idx.append((np.arange(c, dtype=np.int64) * S) // max(c, 1))
    names = tuple(names) or tuple(getattr(weights, "names", ())) or tuple(
        f"model{k + 1}" for k in range(len(draws)))
    return StackedDraws(counts, np.concatenate(models), np.concatenate(idx), tuple(draws),
                        names, w)


def slot_probabilities(stacked: StackedDraws, X_by_model: Sequence) -> np.ndarray:
    """S x n matrix of predicted probabilities, one row per stacked slot."""
    X_by_model = [np.asarray(getattr(X, "X", X), dtype=float) for X in X_by_model]
    if len(X_by_model) != len(stacked.sources):
        raise ValueError("one design per stacked model required")
    rows = {X.shape[0] for X in X_by_model}
    if len(rows) != 1:
        raise ValueError("designs must share the same rows")
    n = rows.pop()
    out = np.empty((stacked.n_slots, n))
    for k, X in enumerate(X_by_model):
        sel = np.flatnonzero(stacked.slot_model == k)
        if sel.size:
            B = stacked.sources[k].draws[stacked.slot_draw[sel]]
            out[sel] = kernels.sigmoid(B @ X.T)
    return out


def stacked_predictive(weights, draws: Sequence, X_new: Sequence, names: Sequence[str] = ()):
    """Stacked draws and the per-row stacked mean probability."""
    stacked = stack_draws(weights, draws, names)
    probs = slot_probabilities(stacked, X_new)
    return stacked, probs.mean(axis=0)


def brier(p, y, orientation: str = "positive") -> float:
    """Brier score.

    ``positive``: mean of ``(y - p)**2``, lower is better. ``negative``: the
    mean of ``-||e - p||**2`` over the two-outcome indicator vectors, which
    is ``-2 (y - p)**2`` per observation.
    """
    p = np.asarray(p, dtype=float)
    y = np.asarray(y, dtype=float)
    if p.shape != y.shape:
        raise ValueError(f"shape mismatch: p {p.shape}, y {y.shape}")
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError("probabilities must lie in [0, 1]")
    sq = (y - p) ** 2
    if orientation == "positive":
        return float(np.mean(sq))
    if orientation == "negative":
        return float(np.mean(-2.0 * sq))
    raise ValueError(f"unknown orientation {orientation!r}")
