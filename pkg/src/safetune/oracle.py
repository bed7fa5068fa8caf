"""Automated feedback from a synthetic utility drawn from the GP prior.

Supports the matched-seed comparison campaigns: the safety-aware learner
(finite roi_confidence) against the plain line-subspace learner (the +inf
sentinel), reporting prediction error and the cumulative count of deployed
actions whose true utility falls below the safe/unsafe threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .actions import ActionGrid
from .learner import Learner, LearnerConfig, Proposal
from .prefgp import (
    KernelConfig,
    LikelihoodConfig,
    OrdinalLabel,
    Preference,
    gram,
    prior_covariance,
)

MAX_DENSE_GRID = 4000  # exact multivariate-normal draws need a dense Cholesky


@dataclass(frozen=True)
class SyntheticTruth:
    """One exact draw from the zero-mean GP prior over the whole grid."""

    utilities: np.ndarray
    best: int
    seed: int


@dataclass
class CampaignStats:
    """Per-iteration trace of one learner run against a synthetic truth."""

    lam: float
    truth_seed: int
    learner_seed: int
    provider_seed: int
    prediction_error: list[float] = field(default_factory=list)
    cumulative_unsafe: list[int] = field(default_factory=list)
    deployed: list[tuple[int, ...]] = field(default_factory=list)
    roi_bound_iterations: list[int] = field(default_factory=list)


def draw_truth(grid: ActionGrid, kcfg: KernelConfig, seed: int,
               jitter: float = 1e-10) -> SyntheticTruth:
    if grid.size > MAX_DENSE_GRID:
        raise ValueError(f"grid size {grid.size} exceeds the dense-draw guard {MAX_DENSE_GRID}")
    Z = grid.normalized_many(range(grid.size))
    _, L = prior_covariance(Z, kcfg, jitter)
    rng = np.random.Generator(np.random.PCG64(seed))
    u = L @ rng.standard_normal(grid.size)
    return SyntheticTruth(utilities=u, best=int(np.argmax(u)), seed=seed)


def answer_preference(truth: SyntheticTruth, a1: int, a2: int, pref_noise: float,
                      rng: np.random.Generator) -> Preference:
    """a1 wins with the logistic probability of its utility advantage."""
    p1 = 1.0 / (1.0 + math.exp(-(truth.utilities[a1] - truth.utilities[a2]) / pref_noise))
    if rng.uniform() < p1:
        return Preference(preferred=a1, nonpreferred=a2)
    return Preference(preferred=a2, nonpreferred=a1)


def answer_ordinal(truth: SyntheticTruth, a: int, threshold: float, ordinal_noise: float,
                   rng: np.random.Generator) -> OrdinalLabel:
    """Category 1 (unsafe) with the logistic probability of falling below the
    threshold."""
    p_unsafe = 1.0 / (1.0 + math.exp(-(threshold - truth.utilities[a]) / ordinal_noise))
    return OrdinalLabel(action=a, category=1 if rng.uniform() < p_unsafe else 2)


class SyntheticOracleProvider:
    """Answers learner queries by sampling the likelihood models on the truth."""

    def __init__(self, truth: SyntheticTruth, lcfg: LikelihoodConfig, seed: int):
        self.truth = truth
        self.lcfg = lcfg
        self.rng = np.random.Generator(np.random.PCG64(seed))

    def __call__(self, proposal: Proposal) -> dict:
        verdicts = {}
        for q in proposal.queries:
            if q.kind == "preference":
                pref = answer_preference(self.truth, q.left, q.right,
                                         self.lcfg.pref_noise, self.rng)
                verdicts[q.qid] = "left" if pref.preferred == q.left else "right"
            else:
                label = answer_ordinal(self.truth, q.left, self.lcfg.threshold,
                                       self.lcfg.ordinal_noise, self.rng)
                verdicts[q.qid] = label.category
        return verdicts


def run_single(grid: ActionGrid, truth: SyntheticTruth, config: LearnerConfig,
               kcfg: KernelConfig, lcfg: LikelihoodConfig, provider_seed: int) -> CampaignStats:
    """One full campaign against one truth; fully deterministic."""
    learner = Learner(config, grid, kcfg, lcfg)
    provider = SyntheticOracleProvider(truth, lcfg, provider_seed)
    stats = CampaignStats(lam=config.roi_confidence, truth_seed=truth.seed,
                          learner_seed=config.seed, provider_seed=provider_seed)
    unsafe_total = 0

    def observer(state, proposal):
        nonlocal unsafe_total
        unsafe_total += sum(1 for a in proposal.new_actions
                            if truth.utilities[a] < lcfg.threshold)
        stats.deployed.append(proposal.new_actions)
        stats.cumulative_unsafe.append(unsafe_total)
        stats.prediction_error.append(learner.prediction_error(state, truth.best))
        if proposal.draws_unrestricted and proposal.draws != proposal.draws_unrestricted:
            stats.roi_bound_iterations.append(proposal.iteration)

    learner.run(provider, observer=observer)
    return stats


@dataclass(frozen=True)
class AggregatedStats:
    """Mean and standard error across matched-seed runs, per iteration."""

    lam: float
    runs: int
    iterations: int
    pred_error_mean: np.ndarray
    pred_error_stderr: np.ndarray
    unsafe_mean: np.ndarray
    unsafe_stderr: np.ndarray


def _aggregate(lam: float, traces: list[CampaignStats]) -> AggregatedStats:
    pe = np.array([t.prediction_error for t in traces], dtype=float)
    un = np.array([t.cumulative_unsafe for t in traces], dtype=float)
    n = pe.shape[0]
    denom = math.sqrt(n) if n > 1 else 1.0
    return AggregatedStats(
        lam=lam, runs=n, iterations=pe.shape[1],
        pred_error_mean=pe.mean(axis=0),
        pred_error_stderr=pe.std(axis=0, ddof=1) / denom if n > 1 else np.zeros(pe.shape[1]),
        unsafe_mean=un.mean(axis=0),
        unsafe_stderr=un.std(axis=0, ddof=1) / denom if n > 1 else np.zeros(un.shape[1]),
    )


def run_campaign(grid: ActionGrid, lambdas, runs: int, config: LearnerConfig,
                 kcfg: KernelConfig, lcfg: LikelihoodConfig,
                 seed: int = 0) -> dict[float, AggregatedStats]:
    """Matched-seed comparison across roi_confidence values.

    Run r shares one truth, one learner seed, and one provider seed across
    every lambda, so differences are attributable to the ROI restriction
    alone. lambda = +inf is the no-restriction sentinel.
    """
    traces: dict[float, list[CampaignStats]] = {lam: [] for lam in lambdas}
    for r in range(runs):
        truth = draw_truth(grid, kcfg, seed=seed + 1000 + r)
        learner_seed = seed + 2000 + r
        provider_seed = seed + 3000 + r
        for lam in lambdas:
            cfg = replace(config, roi_confidence=lam, seed=learner_seed)
            traces[lam].append(run_single(grid, truth, cfg, kcfg, lcfg, provider_seed))
    return {lam: _aggregate(lam, traces[lam]) for lam in lambdas}


def campaign_to_csv(results: dict[float, AggregatedStats]) -> str:
    lines = ["lambda,iteration,pred_error_mean,pred_error_stderr,unsafe_mean,unsafe_stderr"]
    for lam, agg in results.items():
        lam_repr = "inf" if math.isinf(lam) else repr(float(lam))
        for i in range(agg.iterations):
            lines.append(f"{lam_repr},{i + 1},{agg.pred_error_mean[i]!r},"
                         f"{agg.pred_error_stderr[i]!r},{agg.unsafe_mean[i]!r},"
                         f"{agg.unsafe_stderr[i]!r}")
    return "\n".join(lines) + "\n"


def campaign_to_json(results: dict[float, AggregatedStats]) -> dict:
    out = {"curves": []}
    for lam, agg in results.items():
        out["curves"].append({
            "lambda": "inf" if math.isinf(lam) else float(lam),
            "runs": agg.runs,
            "iteration": list(range(1, agg.iterations + 1)),
            "pred_error_mean": agg.pred_error_mean.tolist(),
            "pred_error_stderr": agg.pred_error_stderr.tolist(),
            "unsafe_mean": agg.unsafe_mean.tolist(),
            "unsafe_stderr": agg.unsafe_stderr.tolist(),
        })
    return out
