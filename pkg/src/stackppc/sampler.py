"""Adaptive Hamiltonian Monte Carlo for the logistic-regression posterior.

Warmup follows the usual windowed scheme: dual averaging of the step size
toward a target acceptance rate throughout, and a diagonal mass matrix
re-estimated at the end of each doubling slow window.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .model import PriorConfig

log = logging.getLogger(__name__)


class SamplerError(RuntimeError):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    chains: int = 4
    warmup: int = 1000
    draws: int = 1000
    target_accept: float = 0.8
    max_steps: int = 1024
    seed: int = 0
    algorithm: str = "nuts"  # or "hmc": fixed trajectory length
    hmc_steps: int = 16
    threads: int = 1
    init_jitter: float = 0.1

    def __post_init__(self):
        if self.chains < 1:
            raise ValueError("chains must be >= 1")
        if self.draws < 1 or self.warmup < 0:
            raise ValueError("draws must be >= 1 and warmup >= 0")
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError("target_accept must lie in (0, 1)")
        if self.max_steps < 2:
            raise ValueError("max_steps must be >= 2")
        if self.algorithm not in ("nuts", "hmc"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")

    @property
    def total_draws(self) -> int:
        return self.chains * self.draws

    @property
    def max_depth(self) -> int:
        return int(math.floor(math.log2(self.max_steps)))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PosteriorDraws:
    """Retained draws on the original (uncentred) coefficient scale."""

    draws: np.ndarray  # S x p
    chain: np.ndarray  # S
    iteration: np.ndarray  # S
    labels: tuple[str, ...]
    step_size: np.ndarray  # per chain
    inv_metric: np.ndarray  # chains x p, centred parameterisation
    divergences: int
    saturated: int
    accept_stat: np.ndarray
    n_leapfrog: np.ndarray
    seed: int
    config: SamplerConfig = field(default_factory=SamplerConfig)

    def __post_init__(self):
        for name in ("draws", "chain", "iteration", "step_size", "inv_metric",
                     "accept_stat", "n_leapfrog"):
            a = np.array(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not np.all(np.isfinite(self.draws)):
            raise SamplerError("non-finite posterior draws")

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]

    @property
    def n_chains(self) -> int:
        return int(np.unique(self.chain).size)

    def by_chain(self) -> np.ndarray:
        """Draws reshaped to (chains, draws per chain, p)."""
        chains = np.unique(self.chain)
        return np.stack([self.draws[self.chain == c] for c in chains])

    def mean(self) -> np.ndarray:
        return self.draws.mean(axis=0)


def _windows(warmup: int):
    """(init buffer end, slow-window end points) for a warmup length."""
    init, term, base = 75, 50, 25
    if warmup < 20:
        return warmup, []
    if init + term + base > warmup:
        init = int(0.15 * warmup)
        term = int(0.1 * warmup)
        base = warmup - init - term
    ends = []
    start, size = init, base
    while True:
        end = start + size
        if end + 2 * size > warmup - term:
            ends.append(warmup - term)
            break
        ends.append(end)
        start, size = end, 2 * size
    return init, ends


class _DualAveraging:
    def __init__(self, step, target, gamma=0.05, t0=10.0, kappa=0.75):
        self.target, self.gamma, self.t0, self.kappa = target, gamma, t0, kappa
        self.restart(step)

    def restart(self, step):
        self.mu = math.log(10.0 * step)
        self.counter = 0
        self.s_bar = 0.0
        self.x_bar = 0.0

    def update(self, accept):
        self.counter += 1
        eta = 1.0 / (self.counter + self.t0)
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.target - accept)
        x = self.mu - self.s_bar * math.sqrt(self.counter) / self.gamma
        w = self.counter ** (-self.kappa)
        self.x_bar = w * x + (1.0 - w) * self.x_bar
        return math.exp(x)

    @property
    def final(self):
        return math.exp(self.x_bar)


def _initial_step(theta, lp, grad, inv_metric, X, y, prec, rng, step=1.0):
    """Double or halve ``step`` until one leapfrog's acceptance crosses 0.8."""
    def log_accept(eps):
        p = rng.standard_normal(theta.size) / np.sqrt(inv_metric)
        h0 = -lp + kernels.kinetic(p, inv_metric)
        _, p1, lp1, _ = kernels.leapfrog(theta, p, grad, eps, inv_metric, X, y, prec)
        h1 = -lp1 + kernels.kinetic(p1, inv_metric)
        return -np.inf if not np.isfinite(h1) else h0 - h1

    la = log_accept(step)
    up = la > math.log(0.8)
    for _ in range(100):
        step = step * 2.0 if up else step / 2.0
        la = log_accept(step)
        if up != (la > math.log(0.8)):
            break
    return step


def _run_chain(X, y, prec, cfg: SamplerConfig, seed_seq, init=None):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    d = X.shape[1]
    n_unif = (1 << cfg.max_depth) + 2 * cfg.max_depth + 1
    for _ in range(100):
        theta = (np.array(init, dtype=float) if init is not None
                 else rng.uniform(-cfg.init_jitter, cfg.init_jitter, d))
        lp, grad = kernels.logistic_logp_grad(theta, X, y, prec)
        if np.isfinite(lp) and np.all(np.isfinite(grad)):
            break
        init = None
    else:
        raise SamplerError("log posterior is not finite at initialisation after 100 attempts")

    inv_metric = np.ones(d)
    step = _initial_step(theta, lp, grad, inv_metric, X, y, prec, rng)
    da = _DualAveraging(step, cfg.target_accept)
    init_end, window_ends = _windows(cfg.warmup)
    window_start = init_end
    w_n, w_mean, w_m2 = 0, np.zeros(d), np.zeros(d)

    keep = np.empty((cfg.draws, d))
    accept = np.empty(cfg.draws)
    n_leap = np.empty(cfg.draws, dtype=np.int64)
    divergent = 0
    saturated = 0
    warm_div = 0

    for it in range(cfg.warmup + cfg.draws):
        z = rng.standard_normal(d)
        u = rng.random(n_unif)
        if cfg.algorithm == "nuts":
            theta, lp, grad, acc, nl, depth, div = kernels.nuts_transition(
                theta, lp, grad, step, inv_metric, X, y, prec, cfg.max_depth, z, u)
        else:
            theta, lp, grad, acc, nl, depth, div = kernels.hmc_transition(
                theta, lp, grad, step, inv_metric, X, y, prec, cfg.hmc_steps, z, u)
        if it < cfg.warmup:
            warm_div += bool(div)
            step = da.update(acc)
            if window_ends and window_start <= it < window_ends[-1]:
                w_n += 1
                delta = theta - w_mean
                w_mean = w_mean + delta / w_n
                w_m2 = w_m2 + delta * (theta - w_mean)
            if window_ends and it + 1 == window_ends[0]:
                var = w_m2 / max(w_n - 1, 1)
                inv_metric = (w_n / (w_n + 5.0)) * var + 1e-3 * (5.0 / (w_n + 5.0))
                window_ends = window_ends[1:]
                w_n, w_mean, w_m2 = 0, np.zeros(d), np.zeros(d)
                step = _initial_step(theta, lp, grad, inv_metric, X, y, prec, rng, step)
                da.restart(step)
            if it + 1 == cfg.warmup:
                if warm_div == cfg.warmup:
                    raise SamplerError("every warmup iteration diverged")
                step = da.final
        else:
            j = it - cfg.warmup
            keep[j] = theta
            accept[j] = acc
            n_leap[j] = nl
            divergent += bool(div)
            saturated += cfg.algorithm == "nuts" and depth >= cfg.max_depth
    return keep, accept, n_leap, divergent, saturated, step, inv_metric


def _centring(X, intercept):
    if intercept and X.shape[0] > 0 and X.shape[1] > 1:
        means = X[:, 1:].mean(axis=0)
    else:
        means = np.zeros(max(X.shape[1] - 1, 0))
    Xc = X.copy()
    if intercept and X.shape[1] > 1:
        Xc[:, 1:] -= means
    return np.ascontiguousarray(Xc), means


def sample(design, prior: PriorConfig | None = None,
           config: SamplerConfig | None = None, init=None) -> PosteriorDraws:
    """Draw from the posterior of a logistic regression on ``design``.

    Non-intercept columns are centred internally; the intercept is mapped
    back to the original columns before the draws are returned.
    """
    cfg = config or SamplerConfig()
    prior = prior or PriorConfig()
    X = np.ascontiguousarray(design.X, dtype=float)
    y = np.ascontiguousarray(design.y, dtype=float)
    intercept = bool(getattr(design, "intercept", True))
    if X.shape[1] < 1:
        raise SamplerError("design has no columns")
    prec = 1.0 / prior.scales(X, intercept) ** 2
    Xc, means = _centring(X, intercept)
    seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.chains)

    def run(c):
        return _run_chain(Xc, y, prec, cfg, seqs[c], init)

    if cfg.threads > 1 and cfg.chains > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(run, range(cfg.chains)))
    else:
        results = [run(c) for c in range(cfg.chains)]

    draws = np.concatenate([r[0] for r in results])
    if intercept and X.shape[1] > 1:
        draws[:, 0] -= draws[:, 1:] @ means
    out = PosteriorDraws(
        draws=draws,
        chain=np.repeat(np.arange(cfg.chains), cfg.draws),
        iteration=np.tile(np.arange(cfg.draws), cfg.chains),
        labels=tuple(getattr(design, "labels", [f"b{j}" for j in range(X.shape[1])])),
        step_size=np.array([r[5] for r in results]),
        inv_metric=np.stack([r[6] for r in results]),
        divergences=int(sum(r[3] for r in results)),
        saturated=int(sum(r[4] for r in results)),
        accept_stat=np.concatenate([r[1] for r in results]),
        n_leapfrog=np.concatenate([r[2] for r in results]),
        seed=cfg.seed,
        config=cfg,
    )
    if out.divergences:
        log.warning("%d divergent transitions after warmup", out.divergences)
    return out
