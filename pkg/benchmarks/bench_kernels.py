#!/usr/bin/env python3
"""Time the hot kernels with numba on and off.

Each path runs in its own interpreter because STACKPPC_DISABLE_NUMBA is read
at import time. The numba path is timed after a warm-up call so compilation
(or cache loading) is not counted.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from stackppc import _accel
from stackppc.dataset import generate_synthetic
from stackppc.design import build_design
from stackppc.kernels import loglik_matrix as loglik_values
from stackppc.loo import LogLikMatrix, psis_loo
from stackppc.model import ModelSpec
from stackppc.sampler import SamplerConfig, sample

repeat = int(sys.argv[1])
data = generate_synthetic({"n": 500, "beta": [-0.5, 1.0, -1.0, 0.5, 0.25],
                           "predictors": [{"name": f"x{j}"} for j in range(1, 5)]}, 7)
design = build_design(ModelSpec.from_formula("y ~ x1 + x2 + x3 + x4"), data)
cfg = SamplerConfig(chains=1, warmup=200, draws=200, seed=11)

def best_of(fn):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out

t_nuts, draws = best_of(lambda: sample(design, None, cfg))
# fixed pseudo-draws so both paths smooth the same matrix
beta = np.random.default_rng(12).normal([-0.5, 1.0, -1.0, 0.5, 0.25], 0.1, (4000, 5))
L = LogLikMatrix(loglik_values(beta, np.asarray(design.X), np.asarray(design.y)))
t_psis, loo = best_of(lambda: psis_loo(L))
print(json.dumps({"numba": _accel.NUMBA_ENABLED, "nuts_s": t_nuts, "psis_s": t_psis,
                  "draw_mean": draws.draws.mean(axis=0).tolist(), "elpd": loo.elpd}))
"""


def run(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("STACKPPC_DISABLE_NUMBA", None)
    if disable:
        env["STACKPPC_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    t0 = time.perf_counter()
    fast = run(False, args.repeat)
    slow = run(True, args.repeat)
    print("kernel                      numba      numpy    speedup")
    for key, label in (("nuts_s", "NUTS chain (200+200, n=500)"), ("psis_s", "PSIS-LOO (4000 x 500)")):
        print(f"{label:<27} {fast[key]:8.3f}s {slow[key]:8.3f}s {slow[key] / fast[key]:8.1f}x")
    drift = max(abs(a - b) for a, b in zip(fast["draw_mean"], slow["draw_mean"]))
    print(f"max |mean difference| between paths: {drift:.2e}; "
          f"elpd difference: {abs(fast['elpd'] - slow['elpd']):.2e}")
    print(f"total wall time {time.perf_counter() - t0:.1f}s")
    if not fast["numba"] or slow["numba"]:
        sys.exit("numba flag did not take effect")


if __name__ == "__main__":
    main()
