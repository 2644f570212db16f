"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the same seeded sparse game under both backends and reports median
per-trial learner-update times, plus a cross-check that the two paths
produce the same loss sequence.

    python -m banditpca.bench --d 64,256 --T 2000
"""

import argparse

import numpy as np

from . import backend
from .environments import EnvConfig, make_oracle
from .harness import run_game, tune_eta_sparse
from .mirror_descent import LearnerConfig


def time_backend(name: str, d: int, horizon: int, seed: int = 0):
    backend.use(name)
    oracle = make_oracle(EnvConfig(kind="rank1", dim=d, horizon=horizon, seed=seed))
    eta, gamma = tune_eta_sparse(d, horizon, 1.0)
    config = LearnerConfig(eta=eta, gamma=gamma, dim=d, seed=seed)
    result = run_game(config, "sparse", oracle, horizon, regret="skip")
    med = float(np.median([r.update_ns for r in result.records]))
    losses = np.array([r.loss for r in result.records])
    return med, losses


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="banditpca.bench", description=__doc__)
    p.add_argument("--d", default="64,256", help="comma-separated dimensions")
    p.add_argument("--T", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    dims = [int(x) for x in args.d.split(",")]

    print(f"{'d':>6} {'numba us':>12} {'numpy us':>12} {'speedup':>9}  losses match")
    for d in dims:
        # warm up compilation outside the timed run
        time_backend("numba", d, min(64, args.T), args.seed)
        numba_med, numba_losses = time_backend("numba", d, args.T, args.seed)
        numpy_med, numpy_losses = time_backend("numpy", d, args.T, args.seed)
        agree = bool(np.allclose(numba_losses, numpy_losses, rtol=0, atol=1e-10))
        print(
            f"{d:>6} {numba_med / 1e3:>12.2f} {numpy_med / 1e3:>12.2f} "
            f"{numpy_med / numba_med:>8.1f}x  {agree}"
        )
    backend.use(backend._default_backend())
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
