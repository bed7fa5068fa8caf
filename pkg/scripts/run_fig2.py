#!/usr/bin/env python3
"""Matched-seed comparison of the safety-aware learner against the plain
line-subspace learner on a synthetic 2-D utility, with mean +- standard
error curves for cumulative unsafe samples and prediction error.

Usage: python3 scripts/run_fig2.py [--runs 50] [--out fig2.png]
(10 runs take about a minute; 50 take a few.)
"""

import argparse
import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from safetune.actions import ActionGrid
from safetune.cli import fig2_grid
from safetune.learner import LearnerConfig
from safetune.oracle import run_campaign
from safetune.prefgp import KernelConfig, LikelihoodConfig


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--iterations", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="fig2.png")
    args = ap.parse_args()

    grid = ActionGrid(fig2_grid(41))
    kcfg = KernelConfig(lengthscales=(4.0,) * 4)
    config = LearnerConfig(actions_per_iteration=3, iterations=args.iterations)
    results = run_campaign(grid, [-0.5, math.inf], runs=args.runs, config=config,
                           kcfg=kcfg, lcfg=LikelihoodConfig(), seed=args.seed)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for lam, agg in results.items():
        label = "plain" if math.isinf(lam) else f"safety-aware ({lam:g})"
        it = np.arange(1, agg.iterations + 1)
        ax1.plot(it, agg.unsafe_mean, label=label)
        ax1.fill_between(it, agg.unsafe_mean - agg.unsafe_stderr,
                         agg.unsafe_mean + agg.unsafe_stderr, alpha=0.25)
        ax2.plot(it, agg.pred_error_mean, label=label)
        ax2.fill_between(it, agg.pred_error_mean - agg.pred_error_stderr,
                         agg.pred_error_mean + agg.pred_error_stderr, alpha=0.25)
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("cumulative unsafe samples")
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("prediction error (grid steps)")
    ax1.legend()
    fig.suptitle(f"{args.runs} matched-seed runs on a {grid.size}-point synthetic slice")
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
