"""Tabular data with variable roles: CSV ingestion, quartile binning and
synthetic data generation."""
from __future__ import annotations

import csv
import json
import os
import warnings
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping

import numpy as np

from ._util import atomic_write_text, fmt17, quantile7
from .kernels import sigmoid

ROLES = ("outcome", "focal", "nonfocal", "holdout", "ignore", "weight")
MISSING_TOKENS = {"", "na", "nan", "null", "none"}


class DataError(ValueError):
    """Raised when input data violate the dataset contract."""


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Column:
    """One column: float64 values, or integer codes into ``levels``."""

    name: str
    values: np.ndarray
    levels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.levels is None:
            vals = np.asarray(self.values, dtype=float)
        else:
            object.__setattr__(self, "levels", tuple(str(v) for v in self.levels))
            vals = np.asarray(self.values, dtype=np.int64)
            if vals.size and (vals.min() < 0 or vals.max() >= len(self.levels)):
                raise DataError(f"column {self.name!r}: level code out of range")
        object.__setattr__(self, "values", _frozen(vals))

    @property
    def is_categorical(self) -> bool:
        return self.levels is not None

    def __len__(self):
        return self.values.shape[0]

    def labels(self) -> list[str]:
        if self.levels is None:
            return [fmt17(v) for v in self.values]
        return [self.levels[c] for c in self.values]

    def take(self, rows) -> "Column":
        return Column(self.name, self.values[rows], self.levels)


@dataclass(frozen=True)
class QuartileBinning:
    source: str
    name: str
    cuts: tuple[float, float, float]
    # median of the source variable within each level, used for plotting
    level_medians: tuple[float, float, float, float]

    def ranges(self, lo: float, hi: float) -> list[str]:
        edges = [lo, *self.cuts, hi]
        out = []
        for j in range(4):
            left = "[" if j == 0 else "("
            out.append(f"{left}{edges[j]:.4g},{edges[j + 1]:.4g}]")
        return out


@dataclass(frozen=True)
class Dataset:
    """Immutable table of equally long columns with one role per column."""

    columns: Mapping[str, Column]
    roles: Mapping[str, str]
    truth: Mapping[str, float] | None = None
    binnings: Mapping[str, QuartileBinning] = field(default_factory=dict)

    def __post_init__(self):
        cols = dict(self.columns)
        roles = {name: self.roles.get(name, "ignore") for name in cols}
        unknown = set(self.roles) - set(cols)
        if unknown:
            raise DataError(f"roles given for unknown columns: {sorted(unknown)}")
        for name, role in roles.items():
            if role not in ROLES:
                raise DataError(f"column {name!r}: unknown role {role!r}")
        lengths = {len(c) for c in cols.values()}
        if len(lengths) > 1:
            raise DataError("columns have different lengths")
        outcomes = [n for n, r in roles.items() if r == "outcome"]
        if len(outcomes) != 1:
            raise DataError(f"exactly one outcome column required, found {len(outcomes)}")
        out = cols[outcomes[0]]
        if out.is_categorical:
            raise DataError(f"outcome {outcomes[0]!r} must be numeric 0/1")
        if not np.all((out.values == 0.0) | (out.values == 1.0)):
            raise DataError(f"non-binary outcome in column {outcomes[0]!r}")
        object.__setattr__(self, "columns", MappingProxyType(cols))
        object.__setattr__(self, "roles", MappingProxyType(roles))
        object.__setattr__(self, "binnings", MappingProxyType(dict(self.binnings)))
        if self.truth is not None:
            object.__setattr__(self, "truth", MappingProxyType(dict(self.truth)))

    @property
    def n(self) -> int:
        return len(next(iter(self.columns.values())))

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    @property
    def outcome(self) -> str:
        return next(n for n, r in self.roles.items() if r == "outcome")

    @property
    def y(self) -> np.ndarray:
        return self.columns[self.outcome].values

    def with_role(self, role: str) -> list[str]:
        return [n for n, r in self.roles.items() if r == role]

    def __getitem__(self, name: str) -> Column:
        try:
            return self.columns[name]
        except KeyError:
            raise KeyError(f"unknown column {name!r}") from None

    def with_column(self, column: Column, role: str) -> "Dataset":
        if len(column) != self.n:
            raise DataError(f"column {column.name!r} has wrong length")
        cols = dict(self.columns)
        cols[column.name] = column
        roles = dict(self.roles)
        roles[column.name] = role
        return replace(self, columns=cols, roles=roles)

    def with_roles(self, **roles: str) -> "Dataset":
        merged = dict(self.roles)
        merged.update(roles)
        return replace(self, roles=merged)

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        cols = {n: c.take(rows) for n, c in self.columns.items()}
        return replace(self, columns=cols)

    def drop_row(self, i: int) -> "Dataset":
        keep = np.ones(self.n, dtype=bool)
        keep[i] = False
        return self.take(np.flatnonzero(keep))


# --------------------------------------------------------------------------
# CSV ingestion


def _parse_schema(schema) -> dict[str, dict]:
    if isinstance(schema, (str, os.PathLike)):
        with open(schema, encoding="utf-8") as fh:
            schema = json.load(fh)
    if not isinstance(schema, Mapping):
        raise DataError("schema must be a JSON object mapping column -> role")
    out = {}
    for name, entry in schema.items():
        if isinstance(entry, str):
            entry = {"role": entry}
        elif not isinstance(entry, Mapping) or "role" not in entry:
            raise DataError(f"schema entry for {name!r} must be a role string or an object with 'role'")
        if entry["role"] not in ROLES:
            raise DataError(f"schema entry for {name!r}: unknown role {entry['role']!r}")
        kind = entry.get("type")
        if kind not in (None, "numeric", "categorical"):
            raise DataError(f"schema entry for {name!r}: unknown type {kind!r}")
        out[name] = dict(entry)
    return out


def _numeric_or_none(cells):
    try:
        return np.array([float(c) for c in cells], dtype=float)
    except ValueError:
        return None


def _level_sort_key(level):
    try:
        return (0, float(level), level)
    except ValueError:
        return (1, 0.0, level)


def load_csv(path, schema) -> Dataset:
    """Read a CSV file and attach roles from ``schema``.

    ``schema`` maps column names to a role string or to an object with
    ``role`` and optional ``type`` / ``levels``. Columns absent from the
    schema are kept with role ``ignore``.
    """
    spec = _parse_schema(schema)
    if not os.path.exists(path):
        raise DataError(f"data file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file, header row required") from None
        rows = [r for r in reader if r]
    missing = [n for n in spec if n not in header]
    if missing:
        raise DataError(f"schema column(s) not in CSV header: {missing}")
    for r, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise DataError(f"row {r}: expected {len(header)} cells, got {len(row)}")
        for c, cell in enumerate(row):
            if cell.strip().lower() in MISSING_TOKENS:
                raise DataError(f"missing value at row {r}, column {header[c]}")

    columns = {}
    roles = {}
    for c, name in enumerate(header):
        entry = spec.get(name, {"role": "ignore"})
        cells = [row[c].strip() for row in rows]
        levels = entry.get("levels")
        kind = entry.get("type") or ("categorical" if levels is not None else None)
        values = None if kind == "categorical" else _numeric_or_none(cells)
        if kind == "numeric" and values is None:
            raise DataError(f"column {name!r} declared numeric but has non-numeric cells")
        if values is not None:
            columns[name] = Column(name, values)
        else:
            if levels is None:
                levels = sorted(set(cells), key=_level_sort_key)
            levels = [str(v) for v in levels]
            index = {lev: j for j, lev in enumerate(levels)}
            bad = sorted(set(cells) - set(index))
            if bad:
                raise DataError(f"column {name!r}: values {bad} not among declared levels")
            columns[name] = Column(name, [index[v] for v in cells], tuple(levels))
        roles[name] = entry["role"]
    for name, role in roles.items():
        if role == "weight":
            warnings.warn(f"survey weight column {name!r} is parsed but not used", stacklevel=2)
    outcome = [n for n, r in roles.items() if r == "outcome"]
    if len(outcome) == 1 and columns[outcome[0]].is_categorical:
        raise DataError(f"non-binary outcome in column {outcome[0]!r}")
    return Dataset(columns, roles)


def schema_of(data: Dataset) -> dict:
    out = {}
    for name, col in data.columns.items():
        entry = {"role": data.roles[name]}
        if col.is_categorical:
            entry["type"] = "categorical"
            entry["levels"] = list(col.levels)
        else:
            entry["type"] = "numeric"
        out[name] = entry
    return out


def dataset_to_csv(data: Dataset) -> str:
    lines = []
    names = data.names
    cols = [data[n].labels() for n in names]

    class _Sink:
        def write(self, s):
            lines.append(s)

    writer = csv.writer(_Sink(), lineterminator="\n")
    writer.writerow(names)
    for i in range(data.n):
        writer.writerow([col[i] for col in cols])
    return "".join(lines)


def write_csv(data: Dataset, path) -> None:
    """Write ``data`` as CSV; numbers use 17 significant digits."""
    atomic_write_text(path, dataset_to_csv(data))


# --------------------------------------------------------------------------
# Quartile binning


def quartile_bin(data: Dataset, column: str, name: str | None = None,
                 role: str | None = None) -> Dataset:
    """Add a 4-level categorical column with the quartile of ``column``.

    Cut points are type-7 sample quantiles at 0.25/0.5/0.75; values at or
    below a cut fall in the lower level. Level "1" is the bottom quartile.
    """
    col = data[column]
    if col.is_categorical:
        raise DataError(f"column {column!r} is not numeric")
    x = col.values
    if np.unique(x).size < 4:
        raise DataError(f"column {column!r} has fewer than 4 distinct values")
    cuts = quantile7(x, [0.25, 0.5, 0.75])
    codes = (x > cuts[0]).astype(np.int64) + (x > cuts[1]) + (x > cuts[2])
    name = name or f"{column}Q"
    medians = tuple(
        float(quantile7(x[codes == j], 0.5)) if np.any(codes == j) else float("nan")
        for j in range(4)
    )
    binning = QuartileBinning(column, name, tuple(float(c) for c in cuts), medians)
    out = data.with_column(Column(name, codes, ("1", "2", "3", "4")),
                           role or data.roles[column])
    binnings = dict(out.binnings)
    binnings[name] = binning
    return replace(out, binnings=binnings)


# --------------------------------------------------------------------------
# Synthetic data


def _draw_predictor(spec, cols, n, rng):
    dist = spec.get("dist", "normal")
    if dist == "normal":
        return Column(spec["name"], rng.normal(spec.get("mean", 0.0), spec.get("sd", 1.0), n))
    if dist == "uniform":
        return Column(spec["name"], rng.uniform(spec.get("low", 0.0), spec.get("high", 1.0), n))
    if dist == "bernoulli":
        v = (rng.random(n) < spec.get("p", 0.5)).astype(np.int64)
        if spec.get("categorical", False):
            return Column(spec["name"], v, ("0", "1"))
        return Column(spec["name"], v.astype(float))
    if dist == "categorical":
        probs = np.asarray(spec["probs"], dtype=float)
        levels = spec.get("levels") or [str(j + 1) for j in range(probs.size)]
        codes = rng.choice(probs.size, size=n, p=probs / probs.sum())
        return Column(spec["name"], codes, tuple(levels))
    if dist == "copy":
        src = cols[spec["of"]]
        flip = spec.get("flip", 0.0)
        if src.is_categorical or np.all(np.isin(src.values, (0.0, 1.0))):
            v = np.asarray(src.values).astype(np.int64)
            if flip:
                mask = rng.random(n) < flip
                v = np.where(mask, 1 - v, v) if (src.levels is None or len(src.levels) == 2) else v
            if src.is_categorical:
                return Column(spec["name"], v, src.levels)
            return Column(spec["name"], v.astype(float))
        return Column(spec["name"], src.values + rng.normal(0.0, spec.get("sd", 0.0), n))
    if dist == "linear":
        v = np.full(n, float(spec.get("mean", 0.0)))
        for src, coef in spec["of"].items():
            if cols[src].is_categorical:
                raise DataError(f"linear predictor {spec['name']!r}: source {src!r} is categorical")
            v = v + coef * cols[src].values
        return Column(spec["name"], v + rng.normal(0.0, spec.get("sd", 1.0), n))
    raise DataError(f"unknown predictor distribution {dist!r}")


def _encode_single(col):
    """Treatment-coded block and labels for one column."""
    if col.is_categorical:
        block = np.stack([(col.values == j).astype(float) for j in range(1, len(col.levels))], axis=1) \
            if len(col.levels) > 1 else np.empty((len(col), 0))
        return block, [f"{col.name}{lev}" for lev in col.levels[1:]]
    return col.values[:, None].astype(float), [col.name]


def generate_synthetic(config: Mapping, seed: int) -> Dataset:
    """Simulate a logistic-regression dataset from a DGP description.

    ``config`` keys: ``n``; ``outcome`` (default ``"y"``); ``predictors``, a
    list of ``{name, dist, role, coef, ...}``; either per-predictor ``coef``
    with top-level ``intercept``, or a top-level ``beta`` vector aligned with
    ``[intercept] + encoded predictor columns``; optional ``interactions``
    ``[{"terms": [a, b], "coef": c}]``. The true coefficients are stored in
    ``Dataset.truth`` keyed by design-column label.
    """
    n = int(config.get("n", 0))
    if n <= 0:
        raise DataError("synthetic dataset needs n > 0")
    rng = np.random.default_rng(seed)
    outcome = config.get("outcome", "y")
    cols: dict[str, Column] = {}
    roles: dict[str, str] = {}
    preds = list(config.get("predictors", []))
    for spec in preds:
        if spec["name"] in cols or spec["name"] == outcome:
            raise DataError(f"duplicate column name {spec['name']!r}")
        cols[spec["name"]] = _draw_predictor(spec, cols, n, rng)
        roles[spec["name"]] = spec.get("role", "nonfocal")

    truth: dict[str, float] = {}
    blocks = []
    labels = []
    for spec in preds:
        block, labs = _encode_single(cols[spec["name"]])
        blocks.append(block)
        labels.extend(labs)
    X = np.concatenate([np.ones((n, 1))] + blocks, axis=1) if blocks else np.ones((n, 1))

    if "beta" in config:
        beta = np.asarray(config["beta"], dtype=float)
        if any("coef" in s for s in preds):
            raise DataError("give either a 'beta' vector or per-predictor 'coef', not both")
        if beta.size != X.shape[1]:
            raise DataError(f"beta has {beta.size} entries but the predictors encode to {X.shape[1]} columns")
    else:
        parts = [float(config.get("intercept", 0.0))]
        for spec in preds:
            width = _encode_single(cols[spec["name"]])[0].shape[1]
            coef = np.atleast_1d(np.asarray(spec.get("coef", 0.0), dtype=float))
            if coef.size != width:
                raise DataError(f"predictor {spec['name']!r}: coef has {coef.size} entries, needs {width}")
            parts.extend(coef.tolist())
        beta = np.asarray(parts)
    eta = X @ beta
    truth["(Intercept)"] = float(beta[0])
    for lab, b in zip(labels, beta[1:]):
        truth[lab] = float(b)

    for inter in config.get("interactions", []):
        a, b = inter["terms"]
        ba, la = _encode_single(cols[a])
        bb, lb = _encode_single(cols[b])
        if ba.shape[1] != 1 or bb.shape[1] != 1:
            raise DataError("synthetic interactions need single-column parents")
        coef = float(inter["coef"])
        eta = eta + coef * ba[:, 0] * bb[:, 0]
        truth[f"{la[0]}:{lb[0]}"] = coef

    y = (rng.random(n) < sigmoid(eta)).astype(float)
    cols[outcome] = Column(outcome, y)
    roles[outcome] = "outcome"
    ordered = {outcome: cols.pop(outcome), **cols}
    return Dataset(ordered, roles, truth=truth)
