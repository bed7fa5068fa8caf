"""Safety-aware line-subspace preference learner.

Each iteration restricts the posterior to a working subset: the grid points
nearest a random line through the incumbent best, unioned with everything
visited so far. Thompson draws from the Laplace posterior pick the next
actions, restricted to a region of interest whose optimistic score
mean + lambda * sigma clears the safe/unsafe threshold. lambda = +inf
disables the restriction (the plain line-subspace learner).

States are immutable; propose/commit return fresh objects, so a failed
feedback provider leaves the previous state intact and a retry replays
identically (the RNG state is part of the learner state).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .actions import ActionGrid
from .prefgp import (
    FeedbackDataset,
    KernelConfig,
    LikelihoodConfig,
    OrdinalLabel,
    PosteriorModel,
    Preference,
    laplace_map,
    sample_utilities,
)

SKIP = "skip"


@dataclass(frozen=True)
class LearnerConfig:
    actions_per_iteration: int = 3   # s
    iterations: int = 30             # N
    roi_confidence: float = -0.5     # lambda; +inf means no ROI restriction
    line_points: int = 25            # e
    seed: int = 0

    def __post_init__(self):
        if self.actions_per_iteration < 1:
            raise ValueError("actions_per_iteration must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.line_points < 1:
            raise ValueError("line_points must be >= 1")


@dataclass(frozen=True)
class Query:
    qid: str
    kind: str                 # "preference" | "ordinal"
    left: int                 # action index (preference: left side; ordinal: the action)
    right: int | None = None  # preference only


@dataclass(frozen=True)
class Proposal:
    """One iteration's sampled actions and the feedback queries they raise."""

    iteration: int
    draws: tuple[int, ...]        # s Thompson argmaxes (may repeat)
    new_actions: tuple[int, ...]  # distinct draws, first-appearance order
    incumbent: int | None         # believed best entering this iteration
    subset: tuple[int, ...]       # S_i (empty for the initial random iteration)
    roi: tuple[int, ...]
    queries: tuple[Query, ...]
    rng_state: dict               # generator state after proposing
    posterior: PosteriorModel | None = None  # over S_i
    draws_unrestricted: tuple[int, ...] = ()  # argmax over all of S_i per draw


@dataclass(frozen=True)
class LearnerState:
    """Snapshot after `iteration` committed iterations of feedback."""

    iteration: int
    visited: tuple[int, ...]
    dataset: FeedbackDataset
    rng_state: dict
    believed_best: int | None = None
    posterior: PosteriorModel | None = None  # over visited, from the full dataset


def region_of_interest(post: PosteriorModel, lam: float, beta: float) -> tuple[int, ...]:
    """Actions whose confidence-adjusted score mean + lam * sigma strictly
    exceeds beta.

    Falls back to the singleton argmax of that score when the strict set is
    empty; lam = +inf returns the whole subset.
    """
    if math.isinf(lam) and lam > 0:
        return post.subset
    score = post.mean + lam * post.sigma
    mask = score > beta
    if bool(mask.any()):
        return tuple(a for a, m in zip(post.subset, mask) if m)
    return (post.subset[int(np.argmax(score))],)


def _strict_roi(post: PosteriorModel, lam: float, beta: float) -> tuple[int, ...]:
    """The strict inclusion set alone (no fallback); may be empty."""
    if math.isinf(lam) and lam > 0:
        return post.subset
    score = post.mean + lam * post.sigma
    return tuple(a for a, m in zip(post.subset, score > beta) if m)


def _build_queries(iteration: int, new_actions: tuple[int, ...], incumbent: int | None) -> tuple[Query, ...]:
    queries: list[Query] = []
    if incumbent is not None:
        for k, a in enumerate(new_actions):
            if a != incumbent:
                queries.append(Query(f"i{iteration:04d}-pb{k}", "preference", a, incumbent))
    for j in range(len(new_actions)):
        for k in range(j + 1, len(new_actions)):
            queries.append(Query(f"i{iteration:04d}-p{j}-{k}", "preference",
                                 new_actions[j], new_actions[k]))
    for k, a in enumerate(new_actions):
        queries.append(Query(f"i{iteration:04d}-o{k}", "ordinal", a))
    return tuple(queries)


class Learner:
    """Drives the iterate-propose-commit loop over an action grid."""

    def __init__(self, config: LearnerConfig, grid: ActionGrid,
                 kernel_config: KernelConfig | None = None,
                 likelihood_config: LikelihoodConfig | None = None):
        self.config = config
        self.grid = grid
        self.kcfg = kernel_config or KernelConfig()
        self.lcfg = likelihood_config or LikelihoodConfig()
        if config.actions_per_iteration > grid.size:
            raise ValueError(
                f"actions_per_iteration {config.actions_per_iteration} exceeds grid size {grid.size}")

    # -- lifecycle ---------------------------------------------------------

    def init(self) -> tuple[LearnerState, Proposal]:
        """Iteration 1: uniform random distinct actions, no feedback yet."""
        rng = np.random.Generator(np.random.PCG64(self.config.seed))
        v1 = tuple(int(i) for i in rng.choice(self.grid.size,
                                              size=self.config.actions_per_iteration,
                                              replace=False))
        rng_state = rng.bit_generator.state
        state = LearnerState(iteration=0, visited=v1, dataset=FeedbackDataset(),
                             rng_state=rng_state)
        proposal = Proposal(iteration=1, draws=v1, new_actions=v1, incumbent=None,
                            subset=(), roi=(), queries=_build_queries(1, v1, None),
                            rng_state=rng_state)
        return state, proposal

    def propose(self, state: LearnerState) -> Proposal:
        """The Thompson-sampling body for iteration state.iteration + 1."""
        if state.believed_best is None:
            raise ValueError("cannot propose before the initial feedback is committed")
        i = state.iteration + 1
        rng = np.random.Generator(np.random.PCG64())
        rng.bit_generator.state = state.rng_state

        line = self.grid.draw_line(state.believed_best, rng, self.config.line_points)
        subset = tuple(sorted(set(line.members) | set(state.visited)))
        Z = self.grid.normalized_many(subset)
        post = laplace_map(state.dataset, subset, Z, self.kcfg, self.lcfg)
        lam = self.config.roi_confidence
        roi = _strict_roi(post, lam, self.lcfg.threshold)
        roi_pos = [post.position_of(a) for a in roi]

        draws = []
        draws_unrestricted = []
        for _ in range(self.config.actions_per_iteration):
            u = sample_utilities(post, rng)
            if roi:
                draws.append(roi[int(np.argmax(u[roi_pos]))])
            else:
                # empty strict set: fall back per draw to the argmax of the
                # confidence-adjusted sample, so Thompson noise keeps
                # exploring instead of deadlocking on the pessimistic mean
                draws.append(subset[int(np.argmax(u + lam * post.sigma))])
            draws_unrestricted.append(subset[int(np.argmax(u))])
        new_actions = tuple(dict.fromkeys(draws))
        queries = _build_queries(i, new_actions, state.believed_best)
        return Proposal(iteration=i, draws=tuple(draws), new_actions=new_actions,
                        incumbent=state.believed_best, subset=subset, roi=roi,
                        queries=queries, rng_state=rng.bit_generator.state, posterior=post,
                        draws_unrestricted=tuple(draws_unrestricted))

    def commit(self, state: LearnerState, proposal: Proposal, verdicts: dict) -> LearnerState:
        """Fold one iteration's feedback into the state.

        verdicts maps query id to "left" | "right" | SKIP for preference
        queries and to 1 | 2 | SKIP for ordinal queries; queries missing
        from the mapping count as skipped.
        """
        if proposal.iteration != state.iteration + 1:
            raise ValueError(
                f"proposal is for iteration {proposal.iteration}, state has committed {state.iteration}")
        known = {q.qid for q in proposal.queries}
        unknown = set(verdicts) - known
        if unknown:
            raise KeyError(f"verdicts reference unknown query ids: {sorted(unknown)}")

        prefs: list[Preference] = []
        ords: list[OrdinalLabel] = []
        for q in proposal.queries:
            v = verdicts.get(q.qid, SKIP)
            if v == SKIP:
                continue
            if q.kind == "preference":
                if v == "left":
                    prefs.append(Preference(q.left, q.right))
                elif v == "right":
                    prefs.append(Preference(q.right, q.left))
                else:
                    raise ValueError(f"bad preference verdict {v!r} for {q.qid}")
            else:
                if v not in (1, 2):
                    raise ValueError(f"bad ordinal verdict {v!r} for {q.qid}")
                ords.append(OrdinalLabel(q.left, int(v)))

        visited = state.visited + tuple(a for a in proposal.new_actions if a not in state.visited)
        dataset = state.dataset.extended(prefs, ords)
        Z = self.grid.normalized_many(visited)
        post = laplace_map(dataset, visited, Z, self.kcfg, self.lcfg)
        best = visited[int(np.argmax(post.mean))]
        return LearnerState(iteration=proposal.iteration, visited=visited, dataset=dataset,
                            rng_state=proposal.rng_state, believed_best=best, posterior=post)

    def step(self, state: LearnerState, answer_fn) -> LearnerState:
        """propose -> collect feedback -> commit; atomic on provider failure."""
        proposal = self.propose(state)
        verdicts = answer_fn(proposal)
        return self.commit(state, proposal, verdicts)

    def run(self, answer_fn, observer=None) -> LearnerState:
        """Full campaign: init plus config.iterations committed iterations."""
        state, proposal = self.init()
        while True:
            verdicts = answer_fn(proposal)
            state = self.commit(state, proposal, verdicts)
            if observer is not None:
                observer(state, proposal)
            if state.iteration >= self.config.iterations:
                return state
            proposal = self.propose(state)

    def prediction_error(self, state: LearnerState, true_best: int) -> float:
        """Step-normalized distance from the believed best to the true argmax."""
        if state.believed_best is None:
            raise ValueError("no believed best yet")
        return self.grid.distance(state.believed_best, true_best)


# -- checkpoint serialization (dataset lives in its own JSONL) --------------

def state_to_json(state: LearnerState) -> dict:
    return {
        "iteration": state.iteration,
        "visited": list(state.visited),
        "rng_state": state.rng_state,
        "believed_best": state.believed_best,
        "posterior_mean": None if state.posterior is None else state.posterior.mean.tolist(),
        "dataset_len": len(state.dataset),
    }


def state_from_json(obj: dict, dataset: FeedbackDataset, learner: Learner) -> LearnerState:
    if obj["dataset_len"] != len(dataset):
        raise ValueError(
            f"checkpoint expects {obj['dataset_len']} dataset records, found {len(dataset)}")
    visited = tuple(int(v) for v in obj["visited"])
    posterior = None
    if obj.get("posterior_mean") is not None:
        Z = learner.grid.normalized_many(visited)
        posterior = laplace_map(dataset, visited, Z, learner.kcfg, learner.lcfg)
    return LearnerState(iteration=int(obj["iteration"]), visited=visited, dataset=dataset,
                        rng_state=obj["rng_state"],
                        believed_best=None if obj["believed_best"] is None else int(obj["believed_best"]),
                        posterior=posterior)
