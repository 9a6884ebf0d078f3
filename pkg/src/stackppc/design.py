"""Design matrices: treatment coding of categorical terms and interactions."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .dataset import Column, Dataset, DataError
from .model import ModelSpec


class DesignWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DesignMatrix:
    X: np.ndarray
    y: np.ndarray | None
    labels: tuple[str, ...]
    intercept: bool
    # term key ("A" or "A:B") -> (start, stop) column range
    term_columns: Mapping[str, tuple[int, int]]
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        if self.y is not None:
            y = np.ascontiguousarray(self.y, dtype=float)
            y.setflags(write=False)
            object.__setattr__(self, "y", y)
        object.__setattr__(self, "term_columns", MappingProxyType(dict(self.term_columns)))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def _encode(col: Column):
    if col.is_categorical:
        L = len(col.levels)
        block = np.zeros((len(col), L - 1))
        for j in range(1, L):
            block[:, j - 1] = col.values == j
        return block, [f"{col.name}{lev}" for lev in col.levels[1:]]
    return np.asarray(col.values, dtype=float)[:, None], [col.name]


def encode_columns(spec: ModelSpec, columns: Mapping[str, Column],
                   roles: Mapping[str, str] | None = None, intercept: bool = True):
    """Encode ``spec``'s terms from raw columns. Returns (X, labels, term map)."""
    roles = roles or {}
    n = len(next(iter(columns.values()))) if columns else 0
    for var in spec.variables:
        if var not in columns:
            raise DataError(f"model {spec.name!r}: unknown term {var!r}")
        if roles.get(var) == "holdout":
            raise DataError(f"model {spec.name!r}: hold-out column {var!r} cannot enter a model")
        if roles.get(var) == "outcome" or var == spec.outcome:
            raise DataError(f"model {spec.name!r}: outcome {var!r} used as a predictor")
    blocks, labels, term_map = [], [], {}
    col = 0
    if intercept:
        blocks.append(np.ones((n, 1)))
        labels.append("(Intercept)")
        col = 1
    encoded = {}
    for term in spec.terms:
        block, labs = encoded.setdefault(term, _encode(columns[term]))
        blocks.append(block)
        labels.extend(labs)
        term_map[term] = (col, col + block.shape[1])
        col += block.shape[1]
    for inter in spec.interactions:
        block, labs = encoded.setdefault(inter[0], _encode(columns[inter[0]]))
        for parent in inter[1:]:
            pb, pl = encoded.setdefault(parent, _encode(columns[parent]))
            block = np.concatenate(
                [block[:, [a]] * pb[:, [b]] for a in range(block.shape[1]) for b in range(pb.shape[1])],
                axis=1) if block.shape[1] and pb.shape[1] else np.empty((n, 0))
            labs = [f"{a}:{b}" for a in labs for b in pl]
        key = ":".join(inter)
        blocks.append(block)
        labels.extend(labs)
        term_map[key] = (col, col + block.shape[1])
        col += block.shape[1]
    X = np.concatenate(blocks, axis=1) if blocks else np.empty((n, 0))
    return X, labels, term_map


def build_design(spec: ModelSpec, data: Dataset, intercept: bool = True) -> DesignMatrix:
    """Design matrix for ``spec`` on ``data``.

    Column order: intercept, main effects in spec order, interactions in
    spec order. Categorical terms drop their first level. Rank deficiency
    is reported as a warning, not an error.
    """
    if spec.outcome != data.outcome:
        raise DataError(f"model {spec.name!r} outcome {spec.outcome!r} is not the dataset "
                        f"outcome {data.outcome!r}")
    X, labels, term_map = encode_columns(spec, data.columns, data.roles, intercept)
    notes = []
    if X.shape[0] > 0 and X.shape[1] > 0 and np.linalg.matrix_rank(X) < X.shape[1]:
        msg = f"model {spec.name!r}: design is rank deficient ({np.linalg.matrix_rank(X)} < {X.shape[1]})"
        warnings.warn(msg, DesignWarning, stacklevel=2)
        notes.append(msg)
    return DesignMatrix(X, data.y, tuple(labels), intercept, term_map, tuple(notes))


def drop_row(design: DesignMatrix, i: int) -> DesignMatrix:
    keep = np.ones(design.n, dtype=bool)
    keep[i] = False
    return DesignMatrix(design.X[keep], None if design.y is None else design.y[keep],
                        design.labels, design.intercept, design.term_columns, design.warnings)
