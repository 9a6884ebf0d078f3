"""Bayesian logistic regression: model declarations, priors, likelihood,
log posterior and predictions."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from . import kernels


@dataclass(frozen=True)
class PriorConfig:
    """Independent zero-mean normal priors.

    With ``autoscale`` the coefficient scale of each non-intercept column is
    divided by that column's sample standard deviation.
    """

    intercept_scale: float = 2.5
    coef_scale: float = 2.5
    autoscale: bool = True

    def __post_init__(self):
        if not (self.intercept_scale > 0 and self.coef_scale > 0):
            raise ValueError("prior scales must be strictly positive")

    def scales(self, X, intercept: bool = True) -> np.ndarray:
        """Prior standard deviation for every column of ``X``."""
        X = _matrix(X)
        p = X.shape[1]
        s = np.full(p, float(self.coef_scale))
        start = 1 if intercept and p > 0 else 0
        if start:
            s[0] = self.intercept_scale
        if self.autoscale and X.shape[0] > 1:
            sd = X[:, start:].std(axis=0, ddof=1)
            ok = sd > 0
            s[start:][ok] = self.coef_scale / sd[ok]
        return s

    def to_dict(self) -> dict:
        return {"intercept_scale": self.intercept_scale,
                "coef_scale": self.coef_scale,
                "autoscale": self.autoscale}


@dataclass(frozen=True)
class ModelSpec:
    """Declaration of one candidate model.

    ``interactions`` holds tuples of parent variable names.
    """

    name: str
    outcome: str
    terms: tuple[str, ...]
    interactions: tuple[tuple[str, ...], ...] = ()
    prior: PriorConfig = field(default_factory=PriorConfig)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "interactions", tuple(tuple(i) for i in self.interactions))
        if len(set(self.terms)) != len(self.terms):
            raise ValueError(f"model {self.name!r}: duplicate terms")
        for inter in self.interactions:
            if len(inter) < 2:
                raise ValueError(f"model {self.name!r}: interaction needs two or more parents")

    @property
    def variables(self) -> set[str]:
        out = set(self.terms)
        for inter in self.interactions:
            out.update(inter)
        return out

    @classmethod
    def from_formula(cls, formula: str, name: str = "model",
                     prior: PriorConfig | None = None) -> "ModelSpec":
        """Parse ``"y ~ A + B + A:B"``."""
        if "~" not in formula:
            raise ValueError(f"formula {formula!r} lacks '~'")
        lhs, rhs = formula.split("~", 1)
        terms, inters = [], []
        for tok in (t.strip() for t in rhs.split("+")):
            if not tok or tok == "1":
                continue
            if ":" in tok:
                inters.append(tuple(p.strip() for p in tok.split(":")))
            elif not re.fullmatch(r"[^\s:~+]+", tok):
                raise ValueError(f"cannot parse term {tok!r}")
            else:
                terms.append(tok)
        return cls(name, lhs.strip(), tuple(terms), tuple(inters), prior or PriorConfig())

    def to_dict(self) -> dict:
        return {"name": self.name, "outcome": self.outcome, "terms": list(self.terms),
                "interactions": [list(i) for i in self.interactions],
                "prior": self.prior.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        for key in ("name", "outcome", "terms"):
            if key not in d:
                raise KeyError(key)
        prior = PriorConfig(**d.get("prior", {}))
        return cls(d["name"], d["outcome"], tuple(d["terms"]),
                   tuple(tuple(i) for i in d.get("interactions", [])), prior)

    @classmethod
    def load(cls, path) -> "ModelSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class ModelEnsemble:
    """A core model plus candidate extensions that share it.

    Candidates must contain every core term and be pairwise disjoint in the
    variables they add.
    """

    core: ModelSpec
    candidates: tuple[ModelSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.candidates:
            raise ValueError("at least one candidate model is required")
        names = [self.core.name] + [c.name for c in self.candidates]
        if len(set(names)) != len(names):
            raise ValueError("model names must be unique")
        core_terms = set(self.core.terms)
        core_vars = self.core.variables
        extras = []
        for cand in self.candidates:
            if cand.outcome != self.core.outcome:
                raise ValueError(f"candidate {cand.name!r} has a different outcome")
            missing = core_terms - set(cand.terms)
            if missing:
                raise ValueError(f"candidate {cand.name!r} lacks core terms {sorted(missing)}")
            extras.append((cand.name, cand.variables - core_vars))
        for i in range(len(extras)):
            for j in range(i + 1, len(extras)):
                shared = extras[i][1] & extras[j][1]
                if shared:
                    raise ValueError(f"candidates {extras[i][0]!r} and {extras[j][0]!r} "
                                     f"share non-core variables {sorted(shared)}")

    @property
    def models(self) -> tuple[ModelSpec, ...]:
        return (self.core, *self.candidates)


# --------------------------------------------------------------------------
# Likelihood and posterior


def _matrix(X) -> np.ndarray:
    X = getattr(X, "X", X)
    return np.ascontiguousarray(X, dtype=float)


def _check(beta, X, y=None):
    beta = np.ascontiguousarray(beta, dtype=float)
    X = _matrix(X)
    if beta.ndim != 1 or X.ndim != 2 or X.shape[1] != beta.size:
        raise ValueError(f"dimension mismatch: beta {beta.shape}, X {X.shape}")
    if not np.all(np.isfinite(beta)):
        raise ValueError("beta has non-finite entries")
    if y is not None:
        y = np.ascontiguousarray(y, dtype=float)
        if y.shape != (X.shape[0],):
            raise ValueError(f"dimension mismatch: X {X.shape}, y {y.shape}")
    return beta, X, y


def pointwise_log_lik(beta, X, y) -> np.ndarray:
    """Per-row Bernoulli log-likelihood under the logit link."""
    beta, X, y = _check(beta, X, y)
    return kernels.pointwise_loglik(beta, X, y)


def log_likelihood(beta, X, y) -> float:
    return float(np.sum(pointwise_log_lik(beta, X, y)))


def log_posterior(beta, X, y, prior: PriorConfig | None = None,
                  intercept: bool = True) -> float:
    """Log-likelihood plus normal log prior densities (constant dropped)."""
    beta, X, y = _check(beta, X, y)
    prec = 1.0 / (prior or PriorConfig()).scales(X, intercept) ** 2
    lp, _ = kernels.logistic_logp_grad(beta, X, y, prec)
    return float(lp)


def grad_log_posterior(beta, X, y, prior: PriorConfig | None = None,
                       intercept: bool = True) -> np.ndarray:
    """``X.T @ (y - p) - beta / s**2``."""
    beta, X, y = _check(beta, X, y)
    prec = 1.0 / (prior or PriorConfig()).scales(X, intercept) ** 2
    _, g = kernels.logistic_logp_grad(beta, X, y, prec)
    return g


def predict_prob(beta, X_new) -> np.ndarray:
    beta, X, _ = _check(beta, X_new)
    return kernels.sigmoid(X @ beta)
