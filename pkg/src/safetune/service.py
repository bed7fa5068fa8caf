"""Campaign orchestration: sessions, feedback queues, rollouts, persistence.

A session directory holds an immutable config, an append-only feedback log
(dataset.jsonl), per-action rollout artifacts, per-iteration history
entries, and one atomically-replaced session.json carrying the learner
checkpoint plus the pending proposal. Every acknowledged feedback record is
fsynced before the acknowledgment, and iteration advancement is a pure
function of (checkpoint, log), so a crash anywhere between the append and
the advance replays deterministically on the next open.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
import threading
import uuid
from pathlib import Path

import numpy as np

from .cbf import RobustParams, issf_bound
from .configio import CampaignConfig, load_config
from .learner import SKIP, Learner, LearnerState, Proposal, Query, state_from_json, state_to_json
from .oracle import draw_truth
from .prefgp import dataset_from_records
from .sim import rollout_to_csv, rollout_to_json, simulate

DATA_DIR_ENV = "CAMPAIGN_DATA_DIR"
DEFAULT_DATA_DIR = "campaign_data"


class SessionError(Exception):
    pass


class UnknownSessionError(SessionError):
    pass


class UnknownQueryError(SessionError):
    pass


class DuplicateSubmissionError(SessionError):
    pass


class StaleVersionError(SessionError):
    pass


class SessionCompletedError(SessionError):
    pass


def data_dir_from_env() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, DEFAULT_DATA_DIR))


def rollout_seed(campaign_seed: int, iteration: int, action_index: int) -> int:
    return campaign_seed * 1_000_003 + iteration * 8191 + action_index


def _utcnow() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _qid_iteration(qid: str) -> int:
    return int(qid[1:5])


def _query_to_json(q: Query) -> dict:
    return {"qid": q.qid, "kind": q.kind, "left": q.left, "right": q.right}


def _query_from_json(obj: dict) -> Query:
    return Query(qid=obj["qid"], kind=obj["kind"], left=int(obj["left"]),
                 right=None if obj["right"] is None else int(obj["right"]))


def _proposal_to_json(p: Proposal) -> dict:
    return {
        "iteration": p.iteration,
        "draws": list(p.draws),
        "new_actions": list(p.new_actions),
        "incumbent": p.incumbent,
        "subset": list(p.subset),
        "roi": list(p.roi),
        "queries": [_query_to_json(q) for q in p.queries],
        "rng_state": p.rng_state,
        "draws_unrestricted": list(p.draws_unrestricted),
    }


def _proposal_from_json(obj: dict) -> Proposal:
    return Proposal(
        iteration=int(obj["iteration"]),
        draws=tuple(int(a) for a in obj["draws"]),
        new_actions=tuple(int(a) for a in obj["new_actions"]),
        incumbent=None if obj["incumbent"] is None else int(obj["incumbent"]),
        subset=tuple(int(a) for a in obj["subset"]),
        roi=tuple(int(a) for a in obj["roi"]),
        queries=tuple(_query_from_json(q) for q in obj["queries"]),
        rng_state=obj["rng_state"],
        draws_unrestricted=tuple(int(a) for a in obj.get("draws_unrestricted", ())),
    )


def _atomic_write(path: Path, payload: dict) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(payload, fh)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _read_jsonl(path: Path) -> list[dict]:
    """Tolerates a torn trailing line (crash mid-append was never acked)."""
    records = []
    if not path.exists():
        return records
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError:
                break
    return records


class _Session:
    """In-memory view of one session directory."""

    def __init__(self, sid: str, root: Path, config: CampaignConfig):
        self.sid = sid
        self.root = root
        self.config = config
        self.grid = config.make_grid()
        self.learner = Learner(config.learner, self.grid, config.kernel, config.likelihood)
        self.version = 0
        self.completed = False
        self.state: LearnerState | None = None
        self.proposal: Proposal | None = None

    @property
    def dataset_path(self) -> Path:
        return self.root / "dataset.jsonl"

    def records(self) -> list[dict]:
        return _read_jsonl(self.dataset_path)


class SessionStore:
    """Owns the data directory; serializes all mutation per session."""

    def __init__(self, data_dir: Path | str | None = None):
        self.data_dir = Path(data_dir) if data_dir is not None else data_dir_from_env()
        self.sessions_dir = self.data_dir / "sessions"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.RLock] = {}
        self._cache: dict[str, _Session] = {}
        self._registry_lock = threading.Lock()

    # -- plumbing ------------------------------------------------------------

    def _lock(self, sid: str) -> threading.RLock:
        with self._registry_lock:
            return self._locks.setdefault(sid, threading.RLock())

    def _session_dir(self, sid: str) -> Path:
        return self.sessions_dir / sid

    def list_sessions(self) -> list[str]:
        return sorted(p.name for p in self.sessions_dir.iterdir() if p.is_dir())

    # -- lifecycle -------------------------------------------------------------

    def create_session(self, config_obj: dict) -> str:
        config = load_config(config_obj)
        sid = uuid.uuid4().hex[:12]
        root = self._session_dir(sid)
        (root / "rollouts").mkdir(parents=True)
        (root / "history").mkdir()
        with open(root / "config.json", "w") as fh:
            json.dump(config_obj, fh, indent=2)
        (root / "dataset.jsonl").touch()

        sess = _Session(sid, root, config)
        state, proposal = sess.learner.init()
        sess.state, sess.proposal = state, proposal
        self._run_rollouts(sess, proposal)
        self._write_session_file(sess)
        with self._registry_lock:
            self._cache[sid] = sess
        return sid

    def open_session(self, sid: str) -> _Session:
        with self._lock(sid):
            sess = self._cache.get(sid)
            if sess is None:
                root = self._session_dir(sid)
                if not (root / "config.json").exists():
                    raise UnknownSessionError(f"no session {sid}")
                with open(root / "config.json") as fh:
                    config = load_config(json.load(fh))
                sess = _Session(sid, root, config)
                self._load_state(sess)
                self._cache[sid] = sess
            # crash between append and advance: the queue may already be drained
            if not sess.completed and sess.proposal is not None:
                if self._drained(sess):
                    self._advance(sess)
            return sess

    def _load_state(self, sess: _Session) -> None:
        with open(sess.root / "session.json") as fh:
            payload = json.load(fh)
        sess.version = payload["version"]
        sess.completed = payload["completed"]
        records = sess.records()
        committed = [r for r in records
                     if r.get("kind") in ("preference", "ordinal")
                     and _qid_iteration(r["qid"]) <= payload["learner_state"]["iteration"]]
        dataset = dataset_from_records(committed)
        sess.state = state_from_json(payload["learner_state"], dataset, sess.learner)
        sess.proposal = (None if payload["proposal"] is None
                         else _proposal_from_json(payload["proposal"]))

    def _write_session_file(self, sess: _Session) -> None:
        _atomic_write(sess.root / "session.json", {
            "version": sess.version,
            "completed": sess.completed,
            "learner_state": state_to_json(sess.state),
            "proposal": None if sess.proposal is None else _proposal_to_json(sess.proposal),
        })

    # -- rollouts ---------------------------------------------------------------

    def _rollout_id(self, iteration: int, action_index: int) -> str:
        return f"i{iteration:04d}-a{action_index}"

    def _run_rollouts(self, sess: _Session, proposal: Proposal) -> None:
        for a in proposal.new_actions:
            rid = self._rollout_id(proposal.iteration, a)
            path = sess.root / "rollouts" / f"{rid}.json"
            if path.exists():
                continue  # crash replay: content is deterministic
            action = sess.grid.action(a)
            rollout = simulate(action, sess.config.environment, sess.config.sim,
                               sess.config.gains,
                               seed=rollout_seed(sess.config.seed, proposal.iteration, a))
            payload = rollout_to_json(rollout)
            payload["rollout_id"] = rid
            payload["action_index"] = a
            payload["iteration"] = proposal.iteration
            _atomic_write(path, payload)
            with open(sess.root / "rollouts" / f"{rid}.csv", "w") as fh:
                fh.write(rollout_to_csv(rollout))

    def _latest_rollout_id(self, sess: _Session, action_index: int) -> str | None:
        best = None
        for p in (sess.root / "rollouts").glob(f"i*-a{action_index}.json"):
            rid = p.stem
            if rid.endswith(f"-a{action_index}"):
                if best is None or _qid_iteration(rid) > _qid_iteration(best):
                    best = rid
        return best

    def get_rollout(self, sid: str, rid: str) -> dict:
        sess = self.open_session(sid)
        path = sess.root / "rollouts" / f"{rid}.json"
        if not path.exists():
            raise UnknownQueryError(f"no rollout {rid} in session {sid}")
        with open(path) as fh:
            return json.load(fh)

    # -- queries ------------------------------------------------------------------

    def _answered_qids(self, sess: _Session) -> set[str]:
        return {r["qid"] for r in sess.records() if "qid" in r}

    def _drained(self, sess: _Session) -> bool:
        if sess.proposal is None:
            return False
        answered = self._answered_qids(sess)
        return all(q.qid in answered for q in sess.proposal.queries)

    def _environment_json(self, sess: _Session) -> dict:
        env = sess.config.environment
        sim = sess.config.sim
        return {
            "obstacles_true": [{"center": list(o.center), "radius": o.radius}
                               for o in env.obstacles_true],
            "obstacles_measured": [{"center": list(o.center), "radius": o.radius}
                                   for o in env.obstacles_measured],
            "heading_weight": env.heading_weight,
            "measurement_bound": env.measurement_bound,
            "start": list(sim.start),
            "goal": list(sim.goal),
            "goal_tolerance": sim.goal_tolerance,
            "disturbance_bound": sim.disturbance.bound,
        }

    def _query_payload(self, sess: _Session, q: Query) -> dict:
        items = []
        actions = [q.left] if q.right is None else [q.left, q.right]
        for a in actions:
            rid = self._latest_rollout_id(sess, a)
            rollout = None
            if rid is not None:
                with open(sess.root / "rollouts" / f"{rid}.json") as fh:
                    rollout = json.load(fh)
            action = sess.grid.action(a)
            gamma = None
            if action.phi > 0 and sess.config.sim.disturbance.bound > 0:
                gamma = issf_bound(sess.config.sim.disturbance.bound,
                                   RobustParams.from_action(action))
            items.append({
                "action_index": a,
                "action": {"alpha": action.alpha, "phi": action.phi,
                           "a": action.a, "b": action.b},
                "rollout_id": rid,
                "rollout": rollout,
                "gamma_delta": gamma,
            })
        return {"query_id": q.qid, "kind": q.kind,
                "iteration": _qid_iteration(q.qid), "items": items}

    def next_queries(self, sid: str) -> dict:
        sess = self.open_session(sid)
        with self._lock(sid):
            answered = self._answered_qids(sess)
            pending = [] if sess.proposal is None else \
                [self._query_payload(sess, q) for q in sess.proposal.queries
                 if q.qid not in answered]
            return {"session_id": sid, "version": sess.version,
                    "completed": sess.completed,
                    "iteration": None if sess.proposal is None else sess.proposal.iteration,
                    "environment": self._environment_json(sess),
                    "queries": pending}

    # -- feedback --------------------------------------------------------------------

    def submit_feedback(self, sid: str, submission: dict) -> dict:
        sess = self.open_session(sid)
        with self._lock(sid):
            if sess.completed:
                raise SessionCompletedError(f"session {sid} has completed")
            qid = submission.get("query_id")
            expected = submission.get("session_version")
            if expected is not None and int(expected) != sess.version:
                raise StaleVersionError(
                    f"session version is {sess.version}, submission expects {expected}")
            if qid in self._answered_qids(sess):
                # idempotent rejection, also for replays of past iterations
                raise DuplicateSubmissionError(f"query {qid} already answered")
            queries = {q.qid: q for q in sess.proposal.queries}
            if qid not in queries:
                raise UnknownQueryError(f"unknown query id {qid!r}")
            record = self._make_record(sess, queries[qid], submission)
            with open(sess.dataset_path, "a") as fh:
                fh.write(json.dumps(record) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            advanced = False
            if self._drained(sess):
                self._advance(sess)
                advanced = True
            return {"session_id": sid, "query_id": qid, "accepted": True,
                    "advanced": advanced, "version": sess.version,
                    "completed": sess.completed,
                    "iteration": None if sess.proposal is None else sess.proposal.iteration}

    def _make_record(self, sess: _Session, q: Query, submission: dict) -> dict:
        verdict = submission.get("verdict")
        source = submission.get("rater", "human")
        base = {"qid": q.qid, "timestamp": _utcnow(), "source": source}
        if verdict == "skip":
            if q.kind == "ordinal" and sess.config.auto_label_on_skip:
                category = self._suggested_category(sess, q.left)
                return {**base, "kind": "ordinal", "action": q.left,
                        "category": category, "source": "auto"}
            return {**base, "kind": "skip"}
        if q.kind == "preference":
            if verdict not in ("left", "right"):
                raise ValueError(f"preference verdict must be left/right/skip, got {verdict!r}")
            preferred = q.left if verdict == "left" else q.right
            nonpreferred = q.right if verdict == "left" else q.left
            return {**base, "kind": "preference", "verdict": verdict,
                    "preferred": preferred, "nonpreferred": nonpreferred}
        category = {1: 1, 2: 2, "unsafe": 1, "safe": 2}.get(verdict)
        if category is None:
            raise ValueError(f"ordinal verdict must be 1/2/unsafe/safe/skip, got {verdict!r}")
        return {**base, "kind": "ordinal", "action": q.left, "category": category}

    def _suggested_category(self, sess: _Session, action_index: int) -> int:
        rid = self._latest_rollout_id(sess, action_index)
        if rid is None:
            return 2
        with open(sess.root / "rollouts" / f"{rid}.json") as fh:
            payload = json.load(fh)
        return suggested_ordinal(payload)

    # -- iteration advance ------------------------------------------------------------

    def _advance(self, sess: _Session) -> None:
        proposal = sess.proposal
        by_qid = {r["qid"]: r for r in sess.records() if "qid" in r}
        verdicts = {}
        for q in proposal.queries:
            rec = by_qid[q.qid]
            if rec["kind"] == "skip":
                verdicts[q.qid] = SKIP
            elif rec["kind"] == "preference":
                verdicts[q.qid] = rec["verdict"]
            else:
                verdicts[q.qid] = int(rec["category"])
        state = sess.learner.commit(sess.state, proposal, verdicts)
        self._write_history(sess, proposal, state)
        sess.state = state
        sess.version += 1
        if state.iteration >= sess.config.learner.iterations:
            sess.proposal = None
            sess.completed = True
            self._write_session_file(sess)
            self._write_report(sess)
        else:
            sess.proposal = sess.learner.propose(state)
            self._run_rollouts(sess, sess.proposal)
            self._write_session_file(sess)

    def _write_history(self, sess: _Session, proposal: Proposal, state: LearnerState) -> None:
        entry = {
            "iteration": proposal.iteration,
            "draws": list(proposal.draws),
            "new_actions": list(proposal.new_actions),
            "incumbent": proposal.incumbent,
            "roi_size": len(proposal.roi),
            "subset_size": len(proposal.subset),
            "believed_best": state.believed_best,
            "visited": list(state.visited),
            "posterior_mean_visited": state.posterior.mean.tolist(),
            "rollouts": {},
        }
        for a in proposal.new_actions:
            rid = self._rollout_id(proposal.iteration, a)
            path = sess.root / "rollouts" / f"{rid}.json"
            if path.exists():
                with open(path) as fh:
                    r = json.load(fh)
                entry["rollouts"][str(a)] = {
                    "rollout_id": rid,
                    "min_h": r["min_h"],
                    "reached_goal": r["reached_goal"],
                    "time_to_goal": r["time_to_goal"],
                    "final_goal_distance": r["final_goal_distance"],
                    "infeasible_step_count": r["infeasible_step_count"],
                    "clamp_violation_count": r["clamp_violation_count"],
                }
        _atomic_write(sess.root / "history" / f"it{proposal.iteration:04d}.json", entry)

    # -- reporting -----------------------------------------------------------------------

    def _write_report(self, sess: _Session) -> None:
        report = self.build_report(sess)
        _atomic_write(sess.root / "report.json", report)

    def build_report(self, sess: _Session) -> dict:
        history = []
        for p in sorted((sess.root / "history").glob("it*.json")):
            with open(p) as fh:
                history.append(json.load(fh))
        state = sess.state
        best = state.believed_best
        best_entry = None
        if best is not None:
            rid = self._latest_rollout_id(sess, best)
            if rid is not None:
                with open(sess.root / "rollouts" / f"{rid}.json") as fh:
                    r = json.load(fh)
                best_entry = {"rollout_id": rid, "min_h": r["min_h"],
                              "reached_goal": r["reached_goal"],
                              "time_to_goal": r["time_to_goal"],
                              "final_goal_distance": r["final_goal_distance"],
                              "infeasible_step_count": r["infeasible_step_count"]}
        action = None if best is None else sess.grid.action(best)
        deterministic = {
            "name": sess.config.name,
            "config": sess.config.raw,
            "iterations_completed": state.iteration,
            "visited_count": len(state.visited),
            "best_action_index": best,
            "best_action": None if action is None else
                {"alpha": action.alpha, "phi": action.phi, "a": action.a, "b": action.b},
            "best_rollout": best_entry,
            "per_iteration": history,
            "dataset_len": len(state.dataset),
        }
        digest = hashlib.sha256(
            json.dumps(deterministic, sort_keys=True).encode()).hexdigest()
        return {**deterministic, "session_id": sess.sid, "report_hash": digest}

    def get_report(self, sid: str) -> dict:
        sess = self.open_session(sid)
        with self._lock(sid):
            path = sess.root / "report.json"
            if sess.completed and path.exists():
                with open(path) as fh:
                    return json.load(fh)
            return self.build_report(sess)


# -- automated feedback over query payloads -----------------------------------

def suggested_ordinal(rollout_payload: dict) -> int:
    """Unsafe (1) on any true-barrier violation or infeasible filter step."""
    min_h = rollout_payload.get("min_h")
    if min_h is not None and min_h < 0.0:
        return 1
    if rollout_payload.get("infeasible_step_count", 0) > 0:
        return 1
    return 2


def compare_rollouts(left: dict, right: dict) -> str:
    """Performance preference: goal dominance, then speed, then progress."""
    lr, rr = left.get("reached_goal"), right.get("reached_goal")
    if lr and not rr:
        return "left"
    if rr and not lr:
        return "right"
    if lr and rr:
        lt, rt = left["time_to_goal"], right["time_to_goal"]
        if lt == rt:
            return "skip"
        return "left" if lt < rt else "right"
    ld, rd = left["final_goal_distance"], right["final_goal_distance"]
    if abs(ld - rd) < 1e-9:
        return "skip"
    return "left" if ld < rd else "right"


def answer_queries_rollout_scorer(queries: list[dict]) -> list[tuple[str, object]]:
    out = []
    for q in queries:
        if q["kind"] == "preference":
            out.append((q["query_id"],
                        compare_rollouts(q["items"][0]["rollout"], q["items"][1]["rollout"])))
        else:
            out.append((q["query_id"], suggested_ordinal(q["items"][0]["rollout"])))
    return out


class SyntheticQueryAnswerer:
    """Headless synthetic-truth answering over service query payloads."""

    def __init__(self, config: CampaignConfig):
        grid = config.make_grid()
        self.truth = draw_truth(grid, config.kernel, seed=config.seed + 5000)
        self.lcfg = config.likelihood
        self.rng = np.random.Generator(np.random.PCG64(config.seed + 6000))

    def __call__(self, queries: list[dict]) -> list[tuple[str, object]]:
        from .oracle import answer_ordinal, answer_preference
        out = []
        for q in queries:
            if q["kind"] == "preference":
                a1 = q["items"][0]["action_index"]
                a2 = q["items"][1]["action_index"]
                pref = answer_preference(self.truth, a1, a2, self.lcfg.pref_noise, self.rng)
                out.append((q["query_id"], "left" if pref.preferred == a1 else "right"))
            else:
                label = answer_ordinal(self.truth, q["items"][0]["action_index"],
                                       self.lcfg.threshold, self.lcfg.ordinal_noise, self.rng)
                out.append((q["query_id"], label.category))
        return out


def run_headless(config_obj: dict, data_dir: Path | str | None = None,
                 provider: str | None = None, rater: str = "oracle") -> dict:
    """Drive a whole campaign through the session machinery without HTTP."""
    store = SessionStore(data_dir)
    config = load_config(config_obj)
    provider = provider or config.provider
    sid = store.create_session(config_obj)
    answerer = (SyntheticQueryAnswerer(config) if provider == "synthetic"
                else answer_queries_rollout_scorer)
    while True:
        payload = store.next_queries(sid)
        if payload["completed"]:
            break
        if not payload["queries"]:
            raise SessionError("no pending queries on an incomplete session")
        for qid, verdict in answerer(payload["queries"]):
            store.submit_feedback(sid, {"query_id": qid, "verdict": verdict, "rater": rater})
    return store.get_report(sid)
