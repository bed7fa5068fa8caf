import csv
import io
import math

import numpy as np
import pytest

from safetune.cbf import BarrierConfig, Obstacle, RobustParams
from safetune.sim import (
    DisturbanceSpec,
    SimConfig,
    rollout_to_csv,
    rollout_to_json,
    score_rollout,
    simulate,
)

TWO_OBSTACLES = BarrierConfig.with_shift(
    (Obstacle((1.3, 0.6), 0.5), Obstacle((1.3, -0.6), 0.5)),
    (0.0, -0.1), heading_weight=0.2)
EXACT_TWO_OBSTACLES = BarrierConfig.with_shift(
    (Obstacle((1.3, 0.6), 0.5), Obstacle((1.3, -0.6), 0.5)),
    (0.0, 0.0), heading_weight=0.2)

PASSER = RobustParams(5.0, 0.0, 0.0, 0.0)
MODERATE = RobustParams(2.0, 0.2, 0.1, 0.005)


def test_config_rejects_bad_periods():
    with pytest.raises(ValueError):
        SimConfig(control_period=0.05, substep=0.003)
    with pytest.raises(ValueError):
        SimConfig(horizon=0.0)
    with pytest.raises(ValueError):
        DisturbanceSpec(kind="bogus")
    with pytest.raises(ValueError):
        DisturbanceSpec(bound=-1.0)


def test_no_obstacles_reaches_one_meter_goal():
    env = BarrierConfig.with_shift((), (0.0, 0.0), heading_weight=0.2)
    sim = SimConfig(horizon=15.0, goal=(1.0, 0.0))
    r = simulate(PASSER, env, sim, seed=0)
    assert r.reached_goal
    assert math.isinf(r.min_h)
    assert np.all(r.commands[:, 0] > 0.0)


def test_rejects_unsafe_start():
    sim = SimConfig(start=(1.3, 0.6, 0.0))
    with pytest.raises(ValueError):
        simulate(PASSER, TWO_OBSTACLES, sim, seed=0)


def test_safety_invariant_without_disturbance():
    # exact measurements, zero disturbance, feasible throughout: the safe set
    # stays forward invariant up to integration tolerance
    sim = SimConfig(horizon=30.0)
    r = simulate(MODERATE, EXACT_TWO_OBSTACLES, sim, seed=0)
    assert r.infeasible_step_count == 0
    assert r.min_h >= -1e-3


def test_determinism_bit_identical():
    sim = SimConfig(horizon=10.0, disturbance=DisturbanceSpec(0.3, "seeded-bounded-noise"))
    r1 = simulate(MODERATE, TWO_OBSTACLES, sim, seed=42)
    r2 = simulate(MODERATE, TWO_OBSTACLES, sim, seed=42)
    np.testing.assert_array_equal(r1.states, r2.states)
    np.testing.assert_array_equal(r1.applied, r2.applied)
    assert r1.min_h == r2.min_h and r1.path_length == r2.path_length


def test_disturbance_norm_bounded():
    sim = SimConfig(horizon=8.0, disturbance=DisturbanceSpec(0.25, "seeded-bounded-noise"))
    r = simulate(MODERATE, TWO_OBSTACLES, sim, seed=3)
    d = r.applied - r.commands
    norms = np.linalg.norm(d, axis=1)
    assert np.all(norms <= 0.25 + 1e-12)


def test_worst_case_disturbance_uses_full_budget():
    sim = SimConfig(horizon=8.0, disturbance=DisturbanceSpec(0.25, "constant-worst-case"))
    r = simulate(MODERATE, TWO_OBSTACLES, sim, seed=3)
    d = r.applied - r.commands
    norms = np.linalg.norm(d, axis=1)
    np.testing.assert_allclose(norms, 0.25, atol=1e-12)


def test_halving_substep_converges():
    sim1 = SimConfig(horizon=12.0)
    sim2 = SimConfig(horizon=12.0, substep=0.0005)
    r1 = simulate(MODERATE, TWO_OBSTACLES, sim1, seed=0)
    r2 = simulate(MODERATE, TWO_OBSTACLES, sim2, seed=0)
    assert abs(r1.min_h - r2.min_h) < 1e-4


def test_timestamps_strictly_increasing():
    r = simulate(PASSER, TWO_OBSTACLES, SimConfig(horizon=12.0), seed=0)
    assert np.all(np.diff(r.times) > 0)
    assert r.step_min_h.shape == r.times.shape


# -- scoring --------------------------------------------------------------------

class FakeRollout:
    def __init__(self, min_h, infeasible, reached=True, t=10.0, plen=3.2):
        self.min_h = min_h
        self.infeasible_step_count = infeasible
        self.reached_goal = reached
        self.time_to_goal = t
        self.path_length = plen


def test_score_rollout_rules():
    _, ordinal = score_rollout(FakeRollout(0.2, 0))
    assert ordinal == 2
    _, ordinal = score_rollout(FakeRollout(-0.01, 0))
    assert ordinal == 1
    _, ordinal = score_rollout(FakeRollout(0.1, 3))
    assert ordinal == 1


def test_score_rollout_performance_summary():
    perf, _ = score_rollout(FakeRollout(0.2, 0, reached=True, t=9.5, plen=3.4))
    assert perf.reached_goal and perf.time_to_goal == 9.5 and perf.path_length == 3.4


# -- exports --------------------------------------------------------------------

def test_csv_json_consistency():
    r = simulate(MODERATE, TWO_OBSTACLES, SimConfig(horizon=5.0), seed=1)
    payload = rollout_to_json(r)
    rows = list(csv.DictReader(io.StringIO(rollout_to_csv(r))))
    assert len(rows) == r.commands.shape[0]
    for i, row in enumerate(rows):
        assert float(row["t"]) == payload["t"][i]
        assert float(row["x"]) == payload["x"][i]
        assert float(row["y"]) == payload["y"][i]
        assert float(row["psi"]) == payload["psi"][i]
        assert float(row["v_cmd"]) == payload["v_cmd"][i]
        assert float(row["omega_cmd"]) == payload["omega_cmd"][i]
        assert float(row["min_h"]) == payload["step_min_h"][i]


def test_json_null_min_h_without_obstacles():
    env = BarrierConfig.with_shift((), (0.0, 0.0), heading_weight=0.2)
    r = simulate(PASSER, env, SimConfig(horizon=3.0, goal=(0.5, 0.0)), seed=0)
    payload = rollout_to_json(r)
    assert payload["min_h"] is None
    assert all(v is None for v in payload["step_min_h"])
