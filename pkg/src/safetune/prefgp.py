"""Bayesian utility model over a working subset of actions.

A zero-mean GP prior (squared-exponential kernel in step-normalized
coordinates) combines with logistic preference and binary ordinal-label
likelihoods. The posterior over the subset is approximated as a Gaussian
centered at the MAP estimate with inverse-Hessian covariance (Laplace
approximation). The negative log posterior is strictly convex, so damped
Newton converges globally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve
from scipy.special import expit, log_expit

UNSAFE = 1
SAFE = 2

GRAD_TOL = 1e-8
MAX_NEWTON_ITERS = 100
JITTER_START = 1e-8
JITTER_CAP_FRACTION = 1e-4  # escalation cap relative to signal variance


@dataclass(frozen=True)
class KernelConfig:
    signal_variance: float = 1.0
    lengthscales: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0)  # step-normalized units

    def __post_init__(self):
        if self.signal_variance <= 0:
            raise ValueError("signal_variance must be positive")
        if any(l <= 0 for l in self.lengthscales):
            raise ValueError("lengthscales must be positive")


@dataclass(frozen=True)
class LikelihoodConfig:
    pref_noise: float = 0.1     # c_p
    ordinal_noise: float = 0.1  # c_o
    threshold: float = 0.0      # utility split between unsafe and safe

    def __post_init__(self):
        if self.pref_noise <= 0 or self.ordinal_noise <= 0:
            raise ValueError("noise scales must be positive")


@dataclass(frozen=True)
class Preference:
    preferred: int
    nonpreferred: int

    def __post_init__(self):
        if self.preferred == self.nonpreferred:
            raise ValueError("a preference must involve two distinct actions")


@dataclass(frozen=True)
class OrdinalLabel:
    action: int
    category: int  # UNSAFE (1) or SAFE (2)

    def __post_init__(self):
        if self.category not in (UNSAFE, SAFE):
            raise ValueError(f"ordinal category must be 1 or 2, got {self.category}")


@dataclass(frozen=True)
class FeedbackDataset:
    """Accumulated pairwise preferences and ordinal labels (append-only)."""

    preferences: tuple[Preference, ...] = ()
    ordinals: tuple[OrdinalLabel, ...] = ()

    def extended(self, prefs=(), ords=()) -> "FeedbackDataset":
        return FeedbackDataset(self.preferences + tuple(prefs), self.ordinals + tuple(ords))

    def __len__(self) -> int:
        return len(self.preferences) + len(self.ordinals)

    def referenced_actions(self) -> set[int]:
        out = {p.preferred for p in self.preferences}
        out |= {p.nonpreferred for p in self.preferences}
        out |= {o.action for o in self.ordinals}
        return out


@dataclass(frozen=True)
class PosteriorModel:
    """Gaussian belief N(mean, cov) over utilities of the actions in subset."""

    subset: tuple[int, ...]
    mean: np.ndarray
    cov: np.ndarray
    sigma: np.ndarray
    converged: bool = True

    def position_of(self, action_index: int) -> int:
        return self.subset.index(action_index)


def kernel(z1: np.ndarray, z2: np.ndarray, cfg: KernelConfig) -> float:
    """Squared-exponential kernel on step-normalized coordinate vectors."""
    d = (np.asarray(z1, dtype=float) - np.asarray(z2, dtype=float)) / np.asarray(cfg.lengthscales)
    return float(cfg.signal_variance * np.exp(-0.5 * float(d @ d)))


def gram(Z: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    Zs = np.asarray(Z, dtype=float) / np.asarray(cfg.lengthscales)
    sq = np.sum(Zs * Zs, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (Zs @ Zs.T)
    np.maximum(d2, 0.0, out=d2)
    return cfg.signal_variance * np.exp(-0.5 * d2)


def prior_covariance(Z: np.ndarray, cfg: KernelConfig, jitter: float = JITTER_START) -> tuple[np.ndarray, np.ndarray]:
    """Gram matrix plus escalating jitter; returns (covariance, Cholesky factor).

    Jitter escalates by x10 until Cholesky succeeds, capped at
    JITTER_CAP_FRACTION * signal_variance.
    """
    K = gram(Z, cfg)
    n = K.shape[0]
    cap = JITTER_CAP_FRACTION * cfg.signal_variance
    j = jitter
    while True:
        try:
            C = K + j * np.eye(n)
            L = np.linalg.cholesky(C)
            return C, L
        except np.linalg.LinAlgError:
            if j >= cap:
                raise np.linalg.LinAlgError(
                    f"prior covariance not PD even with jitter {j:.2e} (cap {cap:.2e})")
            j = min(j * 10.0, cap)


def pref_likelihood(r_pref: float, r_nonpref: float, cfg: LikelihoodConfig) -> float:
    """P(preferred beats non-preferred) under the logistic link."""
    return float(expit((r_pref - r_nonpref) / cfg.pref_noise))


def ordinal_likelihood(r: float, category: int, cfg: LikelihoodConfig) -> float:
    p_unsafe = expit((cfg.threshold - r) / cfg.ordinal_noise)
    if category == UNSAFE:
        return float(p_unsafe)
    if category == SAFE:
        return float(1.0 - p_unsafe)
    raise ValueError(f"ordinal category must be 1 or 2, got {category}")


def _localize(dataset: FeedbackDataset, subset: tuple[int, ...]):
    """Map dataset action indices to positions within the subset."""
    pos = {a: i for i, a in enumerate(subset)}
    try:
        prefs = np.array([(pos[p.preferred], pos[p.nonpreferred]) for p in dataset.preferences],
                         dtype=int).reshape(-1, 2)
        ords = np.array([(pos[o.action], o.category) for o in dataset.ordinals],
                        dtype=int).reshape(-1, 2)
    except KeyError as e:
        raise KeyError(f"dataset references action {e.args[0]} outside the subset") from e
    return prefs, ords


def neg_log_posterior(r: np.ndarray, dataset: FeedbackDataset, subset: tuple[int, ...],
                      prior_inv: np.ndarray, cfg: LikelihoodConfig):
    """Value, gradient, and Hessian of the convex MAP objective.

    Objective: negative log likelihood of all feedback plus the Gaussian
    prior quadratic 0.5 * r' P r with P the prior precision.
    """
    prefs, ords = _localize(dataset, subset)
    return _neg_log_posterior_local(np.asarray(r, dtype=float), prefs, ords, prior_inv, cfg)


def _neg_log_posterior_local(r, prefs, ords, prior_inv, cfg):
    n = r.shape[0]
    Pr = prior_inv @ r
    value = 0.5 * float(r @ Pr)
    grad = Pr.copy()
    hess = prior_inv.copy()

    if len(prefs):
        i, j = prefs[:, 0], prefs[:, 1]
        z = (r[i] - r[j]) / cfg.pref_noise
        value -= float(np.sum(log_expit(z)))
        s = expit(z)
        g = (s - 1.0) / cfg.pref_noise       # d(-log sigmoid(z))/dz * dz/dr_i
        w = s * (1.0 - s) / cfg.pref_noise ** 2
        np.add.at(grad, i, g)
        np.add.at(grad, j, -g)
        np.add.at(hess, (i, i), w)
        np.add.at(hess, (j, j), w)
        np.add.at(hess, (i, j), -w)
        np.add.at(hess, (j, i), -w)

    if len(ords):
        a, cat = ords[:, 0], ords[:, 1]
        sign = np.where(cat == UNSAFE, -1.0, 1.0)  # z is affine in r with slope sign/c_o
        z = sign * (r[a] - cfg.threshold) / cfg.ordinal_noise
        value -= float(np.sum(log_expit(z)))
        s = expit(z)
        g = (s - 1.0) * sign / cfg.ordinal_noise
        w = s * (1.0 - s) / cfg.ordinal_noise ** 2
        np.add.at(grad, a, g)
        np.add.at(hess, (a, a), w)

    return value, grad, hess


def laplace_map(dataset: FeedbackDataset, subset: tuple[int, ...], Z: np.ndarray,
                kcfg: KernelConfig, lcfg: LikelihoodConfig,
                jitter: float = JITTER_START, start: np.ndarray | None = None) -> PosteriorModel:
    """MAP + Laplace posterior over the subset.

    Z holds the step-normalized coordinates of the subset actions (|S| x 4).
    Newton iterations are damped with Armijo backtracking; the objective is
    strictly convex, so the minimizer is independent of the start point and
    non-convergence is flagged rather than raised.
    """
    subset = tuple(subset)
    n = len(subset)
    if n < 1:
        raise ValueError("subset must contain at least one action")
    _, L = prior_covariance(Z, kcfg, jitter)
    eye = np.eye(n)
    prior_inv = cho_solve((L, True), eye)
    prior_inv = 0.5 * (prior_inv + prior_inv.T)

    prefs, ords = _localize(dataset, subset)
    r = np.zeros(n) if start is None else np.asarray(start, dtype=float).copy()
    value, grad, hess = _neg_log_posterior_local(r, prefs, ords, prior_inv, lcfg)
    converged = False
    for _ in range(MAX_NEWTON_ITERS):
        gnorm = float(np.linalg.norm(grad))
        if gnorm < GRAD_TOL:
            converged = True
            break
        Lh = np.linalg.cholesky(hess)
        step = cho_solve((Lh, True), -grad)
        slope = float(grad @ step)
        t = 1.0
        for _ in range(60):
            cand = r + t * step
            v_cand, g_cand, h_cand = _neg_log_posterior_local(cand, prefs, ords, prior_inv, lcfg)
            if v_cand <= value + 1e-4 * t * slope:
                r, value, grad, hess = cand, v_cand, g_cand, h_cand
                break
            t *= 0.5
        else:  # line search stalled at machine precision
            converged = gnorm < GRAD_TOL
            break
    else:
        converged = float(np.linalg.norm(grad)) < GRAD_TOL

    Lh = np.linalg.cholesky(hess)
    cov = cho_solve((Lh, True), eye)
    cov = 0.5 * (cov + cov.T)
    sigma = np.sqrt(np.maximum(np.diag(cov), 0.0))
    return PosteriorModel(subset=subset, mean=r, cov=cov, sigma=sigma, converged=converged)


def sample_utilities(post: PosteriorModel, rng: np.random.Generator) -> np.ndarray:
    """One joint draw from N(mean, cov); deterministic given the rng state."""
    n = post.mean.shape[0]
    try:
        L = np.linalg.cholesky(post.cov)
    except np.linalg.LinAlgError:
        scale = max(float(np.max(np.diag(post.cov))), 1e-18)
        L = np.linalg.cholesky(post.cov + 1e-12 * scale * np.eye(n))
    return post.mean + L @ rng.standard_normal(n)


def dataset_to_records(dataset: FeedbackDataset, timestamp: str = "", source: str = "oracle") -> list[dict]:
    """Flatten to JSONL-ready records (preferences first, then ordinals)."""
    recs = []
    for p in dataset.preferences:
        recs.append({"kind": "preference", "preferred": p.preferred,
                     "nonpreferred": p.nonpreferred, "timestamp": timestamp, "source": source})
    for o in dataset.ordinals:
        recs.append({"kind": "ordinal", "action": o.action, "category": o.category,
                     "timestamp": timestamp, "source": source})
    return recs


def dataset_from_records(records) -> FeedbackDataset:
    prefs, ords = [], []
    for rec in records:
        kind = rec.get("kind")
        if kind == "preference":
            prefs.append(Preference(int(rec["preferred"]), int(rec["nonpreferred"])))
        elif kind == "ordinal":
            ords.append(OrdinalLabel(int(rec["action"]), int(rec["category"])))
        # other record kinds (e.g. skip markers) are not part of the dataset
    return FeedbackDataset(tuple(prefs), tuple(ords))
