"""Posterior predictive checks on grouped test statistics."""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .dataset import Column, Dataset
from .stacking import StackedDraws, slot_probabilities


class PpcError(ValueError):
    pass


@dataclass(frozen=True)
class ReplicatedOutcomes:
    y_rep: np.ndarray  # S x n, uint8
    source: str
    seed: int


def _draw_probabilities(source, X) -> np.ndarray:
    if isinstance(source, StackedDraws):
        if not isinstance(X, (list, tuple)):
            raise PpcError("stacked draws need one design per model")
        return slot_probabilities(source, X)
    X = np.asarray(getattr(X, "X", X), dtype=float)
    B = np.asarray(source.draws, dtype=float)
    if B.shape[1] != X.shape[1]:
        raise PpcError(f"draws have {B.shape[1]} parameters, design has {X.shape[1]} columns")
    return kernels.sigmoid(B @ X.T)


def replicate(source, X, seed: int, name: str = "") -> ReplicatedOutcomes:
    """Simulate one replicated outcome vector per draw (or stacked slot)."""
    p = _draw_probabilities(source, X)
    rng = np.random.Generator(np.random.PCG64(seed))
    y_rep = (rng.random(p.shape) < p).astype(np.uint8)
    return ReplicatedOutcomes(y_rep, name or ("stack" if isinstance(source, StackedDraws) else ""), seed)


# --------------------------------------------------------------------------
# Grouped statistics


def _statistic(stat: str):
    if stat == "mean":
        return lambda a: a.mean(axis=-1)
    if stat == "sd":
        return lambda a: a.std(axis=-1, ddof=1) if a.shape[-1] > 1 else np.zeros(a.shape[:-1])
    if stat.startswith("quantile:"):
        q = float(stat.split(":", 1)[1])
        return lambda a: np.quantile(a, q, axis=-1)
    raise PpcError(f"unknown test statistic {stat!r}")


@dataclass(frozen=True)
class GroupStat:
    level: tuple[str, ...]
    size: int
    observed: float
    replicated: np.ndarray


@dataclass(frozen=True)
class GroupedPpc:
    grouping: tuple[str, ...]
    statistic: str
    groups: tuple[GroupStat, ...]
    skipped: tuple[tuple[str, ...], ...] = ()


def as_categorical(col: Column, max_levels: int = 20) -> Column:
    """Categorical view of a column; numeric columns need few distinct values."""
    if col.is_categorical:
        return col
    values = np.unique(col.values)
    if values.size > max_levels:
        raise PpcError(f"grouping column {col.name!r} is numeric with {values.size} distinct values")
    codes = np.searchsorted(values, col.values)
    labels = tuple(format(v, "g") for v in values)
    return Column(col.name, codes, labels)


def group_index(data: Dataset, grouping: Sequence[str]):
    """Crossed levels (row-major) and a row -> cell index array."""
    if not grouping:
        return [()], np.zeros(data.n, dtype=np.int64)
    cols = [as_categorical(data[name]) for name in grouping]
    levels = list(itertools.product(*[c.levels for c in cols]))
    idx = np.zeros(data.n, dtype=np.int64)
    for c in cols:
        idx = idx * len(c.levels) + c.values
    return levels, idx


def grouped_stat(y_rep, y, data: Dataset, grouping: Sequence[str] = (),
                 statistic: str = "mean") -> GroupedPpc:
    """Observed and replicated test statistics within crossed levels."""
    y_rep = np.asarray(getattr(y_rep, "y_rep", y_rep))
    y = np.asarray(y, dtype=float)
    if y_rep.ndim != 2 or y_rep.shape[1] != y.shape[0] or data.n != y.shape[0]:
        raise PpcError("y_rep, y and data disagree on the number of rows")
    stat = _statistic(statistic)
    levels, idx = group_index(data, list(grouping))
    groups, skipped = [], []
    for j, lev in enumerate(levels):
        rows = np.flatnonzero(idx == j)
        if rows.size == 0:
            warnings.warn(f"empty group {dict(zip(grouping, lev))} excluded", stacklevel=2)
            skipped.append(tuple(lev))
            continue
        sub = y_rep[:, rows].astype(float)
        groups.append(GroupStat(tuple(lev), int(rows.size), float(stat(y[rows])),
                                np.asarray(stat(sub), dtype=float)))
    return GroupedPpc(tuple(grouping), statistic, tuple(groups), tuple(skipped))


# --------------------------------------------------------------------------
# p-values


def p_one_sided(t_rep, t_obs) -> float:
    """P(T_rep > T_obs), ties counted with weight one half."""
    t = np.asarray(t_rep, dtype=float)
    return float((np.sum(t > t_obs) + 0.5 * np.sum(t == t_obs)) / t.size)


def p_lower(t_rep, t_obs) -> float:
    """P(T_rep < T_obs), ties counted with weight one half.

    Under the half-tie rule this is exactly ``1 - p_one_sided``; computing it
    that way keeps the two tails summing to 1.0 in floating point.
    """
    return 1.0 - p_one_sided(t_rep, t_obs)


def tspppv(t_rep, t_obs) -> float:
    """Two-sided posterior predictive p-value: twice the smaller tail."""
    return min(1.0, 2.0 * min(p_one_sided(t_rep, t_obs), p_lower(t_rep, t_obs)))


def histogram(values, min_bins: int = 10):
    """Freedman-Diaconis bin edges (at least ``min_bins``) and counts."""
    v = np.asarray(values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, min_bins + 1)
    else:
        edges = np.histogram_bin_edges(v, bins="fd")
        if edges.size - 1 < min_bins:
            edges = np.linspace(lo, hi, min_bins + 1)
    counts, edges = np.histogram(v, bins=edges)
    return edges, counts


@dataclass(frozen=True)
class PpcGroupResult:
    level: tuple[str, ...]
    size: int
    observed: float
    p_plus: float
    p_minus: float
    tspppv: float
    edges: np.ndarray
    counts: np.ndarray

    def label(self, grouping) -> str:
        return ", ".join(f"{g}={v}" for g, v in zip(grouping, self.level)) or "all"


@dataclass(frozen=True)
class PpcReport:
    source: str
    grouping: tuple[str, ...]
    statistic: str
    groups: tuple[PpcGroupResult, ...]

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "grouping": list(self.grouping),
            "statistic": self.statistic,
            "groups": [
                {"group": g.label(self.grouping), "levels": list(g.level), "size": g.size,
                 "observed": g.observed, "p_plus": g.p_plus, "p_minus": g.p_minus,
                 "tspppv": g.tspppv,
                 "histogram": {"edges": g.edges.tolist(), "counts": g.counts.tolist()}}
                for g in self.groups
            ],
        }

    def min_tspppv(self) -> float:
        return min(g.tspppv for g in self.groups)


def ppc_report(grouped: GroupedPpc, source: str) -> PpcReport:
    out = []
    for g in grouped.groups:
        edges, counts = histogram(g.replicated)
        out.append(PpcGroupResult(g.level, g.size, g.observed,
                                  p_one_sided(g.replicated, g.observed),
                                  p_lower(g.replicated, g.observed),
                                  tspppv(g.replicated, g.observed), edges, counts))
    return PpcReport(source, grouped.grouping, grouped.statistic, tuple(out))


def run_ppc(source, X, data: Dataset, grouping: Sequence[str], seed: int,
            name: str, statistic: str = "mean") -> PpcReport:
    rep = replicate(source, X, seed, name)
    return ppc_report(grouped_stat(rep.y_rep, data.y, data, grouping, statistic), name)


def holdout_check(sources: Mapping[str, tuple], data: Dataset, holdout: str, specs=(),
                  seed: int = 0, statistic: str = "mean") -> dict[str, PpcReport]:
    """Group PPCs by a predictor that no model uses.

    ``sources`` maps a source name to ``(draws, X)``; for the stack, ``draws``
    is a :class:`StackedDraws` and ``X`` the list of per-model designs.
    """
    if data.roles.get(holdout) != "holdout":
        raise PpcError(f"column {holdout!r} does not have role 'holdout'")
    for spec in specs:
        if holdout in spec.variables:
            raise PpcError(f"hold-out column {holdout!r} is used by model {spec.name!r}")
    reports = {}
    for j, (name, (draws, X)) in enumerate(sources.items()):
        reports[name] = run_ppc(draws, X, data, [holdout], seed + j, name, statistic)
    return reports
