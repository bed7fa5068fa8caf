"""Closed-loop episode simulation of the filtered unicycle.

Commands are recomputed at 20 Hz from the measured obstacle field and held
(zero-order hold) while the state integrates with RK4 at a finer substep.
The disturbance enters the input channel, so the applied input is
saturate(command) + d(t) with ||d(t)|| bounded by the configured level.
Safety accounting (the min-over-obstacles barrier) always uses the true
obstacles.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .cbf import (
    BarrierConfig,
    NominalGains,
    RobustParams,
    barrier,
    constraint_values,
    lie_derivatives,
    nominal_controller,
    saturate,
    trop_filter,
    trop_filter_in_box,
    wrap_angle,
)

DISTURBANCE_KINDS = ("none", "constant-worst-case", "seeded-bounded-noise")


@dataclass(frozen=True)
class DisturbanceSpec:
    bound: float = 0.0
    kind: str = "none"

    def __post_init__(self):
        if self.bound < 0:
            raise ValueError("disturbance bound must be nonnegative")
        if self.kind not in DISTURBANCE_KINDS:
            raise ValueError(f"disturbance kind must be one of {DISTURBANCE_KINDS}")


@dataclass(frozen=True)
class SimConfig:
    control_period: float = 0.05    # 20 Hz command rate
    substep: float = 0.001
    horizon: float = 40.0
    start: tuple[float, float, float] = (0.0, 0.0, 0.0)
    goal: tuple[float, float] = (3.0, 0.0)
    goal_tolerance: float = 0.1
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    measurement_shift: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        n = self.control_period / self.substep
        if abs(n - round(n)) > 1e-9:
            raise ValueError("substep must divide the control period")

    @property
    def substeps_per_command(self) -> int:
        return int(round(self.control_period / self.substep))


@dataclass(frozen=True)
class Rollout:
    """One episode: 20 Hz samples plus outcome flags.

    times/states hold n+1 boundary samples; commands/applied/infeasible hold
    one entry per executed control step. min_h is the global minimum of the
    true barrier over every integrator substep (inf when there are no
    obstacles); step_min_h samples it at the recorded boundary states.
    """

    times: np.ndarray
    states: np.ndarray
    commands: np.ndarray
    applied: np.ndarray
    step_min_h: np.ndarray
    infeasible_steps: np.ndarray
    reached_goal: bool
    time_to_goal: float
    min_h: float
    infeasible_step_count: int
    clamp_violation_count: int
    path_length: float
    initial_goal_distance: float
    final_goal_distance: float


def _min_barrier(state, obstacles, zeta: float) -> float:
    if not obstacles:
        return math.inf
    return min(barrier(state, o, zeta) for o in obstacles)


def _worst_case_direction(state, obstacles, zeta: float, prev: np.ndarray) -> np.ndarray:
    """Unit vector along -Lg h of the nearest (lowest-barrier) true obstacle."""
    if not obstacles:
        return prev
    hs = [barrier(state, o, zeta) for o in obstacles]
    _, lgh = lie_derivatives(state, obstacles[int(np.argmin(hs))], zeta)
    n = float(np.linalg.norm(lgh))
    if n < 1e-12:
        return prev
    return -lgh / n


def simulate(action, env: BarrierConfig, sim: SimConfig,
             gains: NominalGains = NominalGains(), seed: int = 0) -> Rollout:
    """Roll one action out; fully deterministic given the seed.

    Infeasible filter steps are recorded (not raised) and fall back to the
    saturated nominal input. Raises if the start pose is already unsafe.
    """
    params = RobustParams(alpha=action.alpha, phi=action.phi, a=action.a, b=action.b)
    rng = np.random.Generator(np.random.PCG64(seed))
    zeta = env.heading_weight
    state = np.array([sim.start[0], sim.start[1], wrap_angle(sim.start[2])])
    if _min_barrier(state, env.obstacles_true, zeta) <= 0:
        raise ValueError("initial state violates the safety set")

    n_steps = int(round(sim.horizon / sim.control_period))
    n_sub = sim.substeps_per_command
    dt = sim.substep
    delta = sim.disturbance.bound
    obs_flat = [(o.center[0], o.center[1], o.radius) for o in env.obstacles_true]

    times = [0.0]
    states = [state.copy()]
    commands, applied_inputs, infeasible_flags, step_min_h = [], [], [], []
    step_min_h.append(_min_barrier(state, env.obstacles_true, zeta))

    min_h = step_min_h[0]
    infeasible_count = 0
    clamp_violations = 0
    path_length = 0.0
    reached = False
    time_to_goal = math.nan
    worst_dir = np.array([-1.0, 0.0])

    initial_dg = math.hypot(sim.goal[0] - state[0], sim.goal[1] - state[1])
    if initial_dg <= sim.goal_tolerance:
        reached = True
        time_to_goal = 0.0

    for k in range(n_steps):
        if reached:
            break
        k_nom = nominal_controller(state, sim.goal, gains)
        result = trop_filter(state, env.obstacles_measured, params, k_nom, zeta)
        infeasible = not result.feasible
        cmd = np.zeros(2)
        if result.feasible:
            cmd = saturate(result.input)
            if not np.allclose(cmd, result.input, rtol=0.0, atol=1e-12):
                slacks = constraint_values(state, env.obstacles_measured, params, cmd, zeta)
                if slacks.size and float(slacks.min()) < -1e-9:
                    # naive clamping would break the margins; fall back to the
                    # box-constrained solve, and stop on true in-box
                    # infeasibility (zero input freezes h)
                    clamp_violations += 1
                    boxed = trop_filter_in_box(state, env.obstacles_measured, params,
                                               k_nom, zeta)
                    if boxed.feasible:
                        cmd = boxed.input
                    else:
                        infeasible = True
                        cmd = np.zeros(2)
        if infeasible:
            infeasible_count += 1
        infeasible_flags.append(infeasible)

        if sim.disturbance.kind == "none" or delta == 0.0:
            d = np.zeros(2)
        elif sim.disturbance.kind == "constant-worst-case":
            worst_dir = _worst_case_direction(state, env.obstacles_true, zeta, worst_dir)
            d = delta * worst_dir
        else:
            ang = rng.uniform(-math.pi, math.pi)
            mag = rng.uniform(0.0, delta)
            d = mag * np.array([math.cos(ang), math.sin(ang)])
        assert float(np.linalg.norm(d)) <= delta + 1e-12

        u = cmd + d
        x, y, psi = float(state[0]), float(state[1]), float(state[2])
        uv, uw = float(u[0]), float(u[1])
        for _ in range(n_sub):
            x, y, psi, seg = _rk4_step_scalar(x, y, psi, uv, uw, dt)
            path_length += seg
            for ox, oy, orad in obs_flat:
                du = ox - x
                dw = oy - y
                dd = math.sqrt(du * du + dw * dw)
                h = dd - orad - zeta * math.cos(psi - math.atan2(dw, du))
                if h < min_h:
                    min_h = h
        state = np.array([x, y, wrap_angle(psi)])

        t = (k + 1) * sim.control_period
        times.append(t)
        states.append(state.copy())
        commands.append(cmd)
        applied_inputs.append(u)
        step_min_h.append(_min_barrier(state, env.obstacles_true, zeta))
        if math.hypot(sim.goal[0] - state[0], sim.goal[1] - state[1]) <= sim.goal_tolerance:
            reached = True
            time_to_goal = t

    final_dg = math.hypot(sim.goal[0] - state[0], sim.goal[1] - state[1])
    return Rollout(
        times=np.array(times),
        states=np.array(states),
        commands=np.array(commands).reshape(-1, 2),
        applied=np.array(applied_inputs).reshape(-1, 2),
        step_min_h=np.array(step_min_h),
        infeasible_steps=np.array(infeasible_flags, dtype=bool),
        reached_goal=reached,
        time_to_goal=time_to_goal,
        min_h=min_h,
        infeasible_step_count=infeasible_count,
        clamp_violation_count=clamp_violations,
        path_length=path_length,
        initial_goal_distance=initial_dg,
        final_goal_distance=final_dg,
    )


def _rk4_step_scalar(x: float, y: float, psi: float, v: float, w: float,
                     dt: float) -> tuple[float, float, float, float]:
    """One RK4 step of (x' = v cos psi, y' = v sin psi, psi' = w), scalar math
    to keep the inner loop cheap."""
    p2 = psi + 0.5 * dt * w
    p4 = psi + dt * w
    k1x, k1y = v * math.cos(psi), v * math.sin(psi)
    k2x, k2y = v * math.cos(p2), v * math.sin(p2)  # k3 coincides: psi' is constant
    k4x, k4y = v * math.cos(p4), v * math.sin(p4)
    nx = x + (dt / 6.0) * (k1x + 4.0 * k2x + k4x)
    ny = y + (dt / 6.0) * (k1y + 4.0 * k2y + k4y)
    npsi = psi + dt * w
    return nx, ny, npsi, math.hypot(nx - x, ny - y)


# -- scoring and export ------------------------------------------------------

@dataclass(frozen=True)
class PerformanceSummary:
    reached_goal: bool
    time_to_goal: float
    path_length: float


def score_rollout(rollout: Rollout) -> tuple[PerformanceSummary, int]:
    """Performance summary plus the suggested ordinal label: unsafe (1) on
    any barrier violation or any infeasible filter step, else safe (2)."""
    summary = PerformanceSummary(reached_goal=rollout.reached_goal,
                                 time_to_goal=rollout.time_to_goal,
                                 path_length=rollout.path_length)
    unsafe = rollout.min_h < 0.0 or rollout.infeasible_step_count > 0
    return summary, (1 if unsafe else 2)


def rollout_to_csv(rollout: Rollout) -> str:
    """One row per executed control step: state at the step start plus the
    command issued there."""
    buf = io.StringIO()
    buf.write("t,x,y,psi,v_cmd,omega_cmd,min_h\n")
    n = rollout.commands.shape[0]
    for i in range(n):
        t = float(rollout.times[i])
        x, y, psi = (float(s) for s in rollout.states[i])
        v, w = (float(c) for c in rollout.commands[i])
        buf.write(f"{t!r},{x!r},{y!r},{psi!r},{v!r},{w!r},{_h_repr(rollout.step_min_h[i])}\n")
    return buf.getvalue()


def _h_repr(h: float) -> str:
    return "" if math.isinf(h) else repr(float(h))


def rollout_to_json(rollout: Rollout) -> dict:
    """Compact JSON used by the rater UI; null min_h means no obstacles."""
    return {
        "t": rollout.times.tolist(),
        "x": rollout.states[:, 0].tolist(),
        "y": rollout.states[:, 1].tolist(),
        "psi": rollout.states[:, 2].tolist(),
        "v_cmd": rollout.commands[:, 0].tolist(),
        "omega_cmd": rollout.commands[:, 1].tolist(),
        "step_min_h": [None if math.isinf(h) else float(h) for h in rollout.step_min_h],
        "min_h": None if math.isinf(rollout.min_h) else float(rollout.min_h),
        "reached_goal": rollout.reached_goal,
        "time_to_goal": None if math.isnan(rollout.time_to_goal) else float(rollout.time_to_goal),
        "infeasible_step_count": int(rollout.infeasible_step_count),
        "clamp_violation_count": int(rollout.clamp_violation_count),
        "path_length": float(rollout.path_length),
        "initial_goal_distance": float(rollout.initial_goal_distance),
        "final_goal_distance": float(rollout.final_goal_distance),
    }
