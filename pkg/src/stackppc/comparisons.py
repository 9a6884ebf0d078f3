"""Focal-grid predictive comparisons and gap posteriors."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._util import quantile7
from .dataset import Column, Dataset
from .design import encode_columns
from .ppc import as_categorical
from .stacking import StackedDraws, slot_probabilities


class ComparisonError(ValueError):
    pass


@dataclass(frozen=True)
class FocalGrid:
    focal: tuple[str, ...]
    cells: tuple[tuple[str, ...], ...]
    sizes: np.ndarray
    fractions: np.ndarray  # nan where the cell is empty

    @property
    def defined(self) -> np.ndarray:
        return self.sizes > 0

    def rows(self):
        for cell, size, frac in zip(self.cells, self.sizes, self.fractions):
            yield cell, int(size), float(frac)


def focal_grid(data: Dataset, focal: Sequence[str]) -> FocalGrid:
    """Observed outcome fraction and size for every crossed focal level."""
    cols = [as_categorical(data[f]) for f in focal]
    cells = list(itertools.product(*[c.levels for c in cols]))
    idx = np.zeros(data.n, dtype=np.int64)
    for c in cols:
        idx = idx * len(c.levels) + c.values
    sizes = np.bincount(idx, minlength=len(cells))
    hits = np.bincount(idx, weights=data.y, minlength=len(cells))
    with np.errstate(invalid="ignore", divide="ignore"):
        fractions = np.where(sizes > 0, hits / np.maximum(sizes, 1), np.nan)
    return FocalGrid(tuple(focal), tuple(cells), sizes, fractions)


@dataclass(frozen=True)
class HypotheticalProfile:
    tag: float
    # numeric variables -> float, categorical -> level label
    values: Mapping[str, object]


def _bracketing_index(codes, n_levels: int, q: float) -> int:
    """Mode at q = 0.5, otherwise the first level whose cumulative frequency reaches q."""
    freq = np.bincount(codes, minlength=n_levels) / len(codes)
    if q == 0.5:
        return int(np.argmax(freq))
    cum = np.cumsum(freq)
    j = int(np.searchsorted(cum, q - 1e-12, side="left"))
    return min(j, n_levels - 1)


def build_profiles(data: Dataset, nonfocal: Sequence[str],
                   quantiles: Sequence[float] = (0.25, 0.5, 0.75)) -> list[HypotheticalProfile]:
    """Marginal quantile profiles, one per quantile level.

    Numeric columns take the type-7 sample quantile; categorical and 0/1
    columns take the mode at the median and the bracketing level otherwise.
    """
    out = []
    for q in quantiles:
        values = {}
        for name in nonfocal:
            col = data[name]
            if col.is_categorical:
                values[name] = col.levels[_bracketing_index(col.values, len(col.levels), q)]
            elif np.all((col.values == 0.0) | (col.values == 1.0)):
                # 0/1 indicators are treated as discrete, like a two-level factor
                values[name] = float(_bracketing_index(col.values.astype(np.int64), 2, q))
            else:
                values[name] = float(quantile7(col.values, q))
        out.append(HypotheticalProfile(float(q), values))
    return out


@dataclass(frozen=True)
class CellPosterior:
    cell: tuple[str, ...]
    tag: float
    draws: np.ndarray
    median: float
    q05: float
    q95: float


def summarize(draws) -> tuple[float, float, float]:
    """(median, 5% quantile, 95% quantile), type 7."""
    m, lo, hi = quantile7(draws, [0.5, 0.05, 0.95])
    return float(m), float(lo), float(hi)


def _hypothetical_columns(data: Dataset, focal: Sequence[str], grid: FocalGrid,
                          profiles: Sequence[HypotheticalProfile], needed: set[str]):
    n_rows = len(grid.cells) * len(profiles)
    cols = {}
    for j, name in enumerate(focal):
        src = data[name]
        labels = [cell[j] for cell in grid.cells for _ in profiles]
        if src.is_categorical:
            index = {lev: k for k, lev in enumerate(src.levels)}
            cols[name] = Column(name, [index[v] for v in labels], src.levels)
        else:
            cols[name] = Column(name, [float(v) for v in labels])
    for name in sorted(needed - set(focal)):
        missing = [p.tag for p in profiles if name not in p.values]
        if missing:
            raise ComparisonError(f"profile(s) {missing} lack variable {name!r} needed by a model")
        src = data[name]
        vals = [p.values[name] for _ in grid.cells for p in profiles]
        if src.is_categorical:
            index = {lev: k for k, lev in enumerate(src.levels)}
            cols[name] = Column(name, [index[str(v)] for v in vals], src.levels)
        else:
            cols[name] = Column(name, [float(v) for v in vals])
    assert all(len(c) == n_rows for c in cols.values())
    return cols


def predict_cells(stacked: StackedDraws, specs: Sequence, data: Dataset, grid: FocalGrid,
                  profiles: Sequence[HypotheticalProfile]) -> list[CellPosterior]:
    """Stacked posterior of the predicted probability for every cell x profile.

    Output order is grid row-major, then profile.
    """
    needed = set().union(*(s.variables for s in specs))
    cols = _hypothetical_columns(data, grid.focal, grid, profiles, needed)
    designs = [encode_columns(spec, cols)[0] for spec in specs]
    probs = slot_probabilities(stacked, designs)
    out = []
    r = 0
    for cell in grid.cells:
        for prof in profiles:
            d = probs[:, r]
            d.setflags(write=False)
            out.append(CellPosterior(cell, prof.tag, d, *summarize(d)))
            r += 1
    return out


@dataclass(frozen=True)
class GapPosterior:
    label: str
    tag: float
    draws: np.ndarray
    median: float
    q05: float
    q95: float


def gap_posterior(reference: CellPosterior, comparison: CellPosterior,
                  label: str = "") -> GapPosterior:
    """Per-slot difference ``reference - comparison``."""
    if reference.draws.shape != comparison.draws.shape:
        raise ComparisonError("cell posteriors have different draw counts")
    if reference.tag != comparison.tag:
        raise ComparisonError("cells belong to different profiles")
    d = reference.draws - comparison.draws
    return GapPosterior(label, reference.tag, d, *summarize(d))


def contrast_gaps(cells: Sequence[CellPosterior], focal: Sequence[str], column: str,
                  reference: str, comparison: str, tag: float,
                  convention: str = "interpretation") -> list[GapPosterior]:
    """Gaps between two levels of one focal variable within every other cell.

    ``interpretation`` gives reference minus comparison; ``formula`` the
    reverse.
    """
    if convention not in ("interpretation", "formula"):
        raise ComparisonError(f"unknown sign convention {convention!r}")
    j = list(focal).index(column)
    index = {(c.cell, c.tag): c for c in cells}
    others = []
    for c in cells:
        key = c.cell[:j] + c.cell[j + 1:]
        if c.tag == tag and key not in others:
            others.append(key)
    out = []
    for key in others:
        ref_cell = key[:j] + (reference,) + key[j:]
        cmp_cell = key[:j] + (comparison,) + key[j:]
        try:
            a, b = index[(ref_cell, tag)], index[(cmp_cell, tag)]
        except KeyError:
            raise ComparisonError(f"missing cell for contrast at {key}") from None
        if convention == "formula":
            a, b = b, a
        names = [f for f in focal if f != column]
        label = ", ".join(f"{f}={v}" for f, v in zip(names, key)) or "all"
        out.append(gap_posterior(a, b, label))
    return out
