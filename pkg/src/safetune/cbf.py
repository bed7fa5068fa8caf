"""Robust safety filter for the unicycle: barrier, Lie derivatives, the
tunable robustified cone program, the disturbance degradation bound, and the
worst-case conservative margins.

The barrier for one obstacle is
    h = d_obs - r_obs - zeta * cos(psi - theta)
with d_obs the planar distance to the obstacle center, theta the bearing to
it, and zeta > 0 weighting how much facing the obstacle erodes safety.

The safety filter minimally modifies a nominal input subject to one cone
constraint per obstacle,
    Lf h + Lg h . v - phi * ||Lg h||^2 - a - b * ||v|| >= -alpha * h,
evaluated at the measured obstacle positions. With only two decision
variables this second-order cone program is solved exactly by active-set
candidate enumeration: the optimum is the nominal input itself, a local
minimum of the objective along one cone boundary, or an intersection of two
boundaries, all of which are enumerable in closed form or by 1-D search.
b = 0 degenerates every boundary to a half-plane and reduces the solve to a
Euclidean projection onto a 2-D polyhedron.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# input saturation box (m/s, rad/s)
V_MIN, V_MAX = -0.2, 0.3
OMEGA_MIN, OMEGA_MAX = -0.4, 0.4

DEGENERATE_DISTANCE = 1e-9
CONSTRAINT_TOL = 1e-10


class DegenerateGeometryError(ValueError):
    """Robot coincides with an obstacle center or the goal."""


@dataclass(frozen=True)
class Obstacle:
    center: tuple[float, float]
    radius: float  # obstacle radius plus robot radius

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("obstacle radius must be positive")


@dataclass(frozen=True)
class BarrierConfig:
    """True and measured obstacle fields plus the heading weight."""

    heading_weight: float                       # zeta (m)
    obstacles_true: tuple[Obstacle, ...]
    obstacles_measured: tuple[Obstacle, ...]
    measurement_bound: float = 0.0              # epsilon (m)

    def __post_init__(self):
        if self.heading_weight <= 0:
            raise ValueError("heading_weight must be positive")
        if self.measurement_bound < 0:
            raise ValueError("measurement_bound must be nonnegative")
        if len(self.obstacles_true) != len(self.obstacles_measured):
            raise ValueError("true and measured obstacle lists must have equal length")

    @classmethod
    def with_shift(cls, obstacles: tuple[Obstacle, ...], shift: tuple[float, float],
                   heading_weight: float, measurement_bound: float | None = None) -> "BarrierConfig":
        """Measured centers are the true centers plus a constant shift."""
        measured = tuple(Obstacle((o.center[0] + shift[0], o.center[1] + shift[1]), o.radius)
                         for o in obstacles)
        eps = math.hypot(*shift) if measurement_bound is None else measurement_bound
        return cls(heading_weight=heading_weight, obstacles_true=obstacles,
                   obstacles_measured=measured, measurement_bound=eps)


@dataclass(frozen=True)
class RobustParams:
    """The four tunable robustness knobs of the safety filter."""

    alpha: float
    phi: float
    a: float
    b: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if min(self.phi, self.a, self.b) < 0:
            raise ValueError("phi, a, b must be nonnegative")

    @classmethod
    def from_action(cls, action) -> "RobustParams":
        return cls(alpha=action.alpha, phi=action.phi, a=action.a, b=action.b)


@dataclass(frozen=True)
class NominalGains:
    kv: float = 0.5
    komega: float = 1.0
    c: float = 0.1


@dataclass(frozen=True)
class FilterResult:
    feasible: bool
    input: np.ndarray | None
    iterations: int = 0
    max_violation: float = 0.0


def wrap_angle(psi: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.fmod(psi + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


def saturate(u: np.ndarray) -> np.ndarray:
    return np.array([min(max(u[0], V_MIN), V_MAX), min(max(u[1], OMEGA_MIN), OMEGA_MAX)])


def barrier(state, obstacle: Obstacle, zeta: float) -> float:
    x, y, psi = state
    u = obstacle.center[0] - x
    w = obstacle.center[1] - y
    d = math.hypot(u, w)
    if d < DEGENERATE_DISTANCE:
        raise DegenerateGeometryError("robot is at an obstacle center")
    theta = math.atan2(w, u)
    return d - obstacle.radius - zeta * math.cos(psi - theta)


def lie_derivatives(state, obstacle: Obstacle, zeta: float) -> tuple[float, np.ndarray]:
    """(Lf h, Lg h) for the drift-free unicycle; Lg h acts on (v, omega)."""
    x, y, psi = state
    u = obstacle.center[0] - x
    w = obstacle.center[1] - y
    d2 = u * u + w * w
    d = math.sqrt(d2)
    if d < DEGENERATE_DISTANCE:
        raise DegenerateGeometryError("robot is at an obstacle center")
    theta = math.atan2(w, u)
    s = math.sin(psi - theta)
    dh_dx = -u / d - zeta * w * s / d2
    dh_dy = -w / d + zeta * u * s / d2
    dh_dpsi = zeta * s
    lgh = np.array([dh_dx * math.cos(psi) + dh_dy * math.sin(psi), dh_dpsi])
    return 0.0, lgh


def nominal_controller(state, goal, gains: NominalGains = NominalGains()) -> np.ndarray:
    """Goal-seeking unicycle controller, pre-saturation; (0, 0) at the goal."""
    x, y, psi = state
    dx = goal[0] - x
    dy = goal[1] - y
    dg = math.hypot(dx, dy)
    if dg < DEGENERATE_DISTANCE:
        return np.zeros(2)
    v = gains.kv * dg + gains.c
    omega = -gains.komega * (math.sin(psi) - dy / dg)
    return np.array([v, omega])


# -- exact projection onto a 2-D polyhedron ---------------------------------

def _project_polyhedron(q: np.ndarray, A: np.ndarray, c: np.ndarray,
                        tol: float = CONSTRAINT_TOL) -> np.ndarray | None:
    """argmin ||v - q||^2 subject to A v >= c, or None if the set is empty.

    Rows are normalized so feasibility tolerances are in distance units. In
    2-D the optimum is q itself, the projection onto one active constraint
    line, or a vertex of two constraint lines, so candidate enumeration is
    exact.
    """
    if A.shape[0] == 0:
        return q.copy()
    norms = np.linalg.norm(A, axis=1)
    keep = norms > 1e-13
    if np.any(~keep & (c > tol)):
        return None  # 0 >= c_i with c_i > 0: empty
    A, c, norms = A[keep], c[keep], norms[keep]
    if A.shape[0] == 0:
        return q.copy()
    An = A / norms[:, None]
    cn = c / norms

    def feasible(v):
        return bool(np.all(An @ v - cn >= -tol))

    if feasible(q):
        return q.copy()

    best, best_d = None, math.inf
    resid = cn - An @ q
    for i in range(An.shape[0]):
        v = q + resid[i] * An[i]
        if feasible(v):
            d = float(np.dot(v - q, v - q))
            if d < best_d:
                best, best_d = v, d
    for i in range(An.shape[0]):
        for j in range(i + 1, An.shape[0]):
            det = An[i, 0] * An[j, 1] - An[i, 1] * An[j, 0]
            if abs(det) < 1e-12:
                continue
            v = np.array([(cn[i] * An[j, 1] - cn[j] * An[i, 1]) / det,
                          (An[i, 0] * cn[j] - An[j, 0] * cn[i]) / det])
            if feasible(v):
                d = float(np.dot(v - q, v - q))
                if d < best_d:
                    best, best_d = v, d
    return best


def _assemble_constraints(state, measured_obstacles, params: RobustParams, zeta: float):
    n_obs = len(measured_obstacles)
    G = np.empty((n_obs, 2))
    dvec = np.empty(n_obs)
    for i, obs in enumerate(measured_obstacles):
        h = barrier(state, obs, zeta)
        lfh, lgh = lie_derivatives(state, obs, zeta)
        G[i] = lgh
        dvec[i] = params.phi * float(lgh @ lgh) + params.a - lfh - params.alpha * h
    return G, dvec


_BOX_A = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
_BOX_C = np.array([V_MIN, -V_MAX, OMEGA_MIN, -OMEGA_MAX])


def trop_filter(state, measured_obstacles, params: RobustParams, k_nom: np.ndarray,
                zeta: float) -> FilterResult:
    """Minimally modify k_nom subject to one robustified cone constraint per
    measured obstacle. Solved over R^2; saturation is the caller's concern.
    """
    q = np.asarray(k_nom, dtype=float)
    if len(measured_obstacles) == 0:
        return FilterResult(feasible=True, input=q.copy())
    G, dvec = _assemble_constraints(state, measured_obstacles, params, zeta)
    if params.b == 0.0:
        v = _project_polyhedron(q, G, dvec)
        if v is None:
            return FilterResult(feasible=False, input=None, iterations=1)
        viol = float(np.max(dvec - G @ v))
        return FilterResult(feasible=True, input=v, iterations=1, max_violation=max(viol, 0.0))
    return _solve_cone_program(q, G, dvec, params.b)


def trop_filter_in_box(state, measured_obstacles, params: RobustParams,
                       k_nom: np.ndarray, zeta: float) -> FilterResult:
    """The same program restricted to the saturation box; used by the closed
    loop when the R^2 optimum falls outside the box."""
    q = np.asarray(k_nom, dtype=float)
    if len(measured_obstacles) == 0:
        return FilterResult(feasible=True, input=saturate(q))
    G, dvec = _assemble_constraints(state, measured_obstacles, params, zeta)
    if params.b == 0.0:
        v = _project_polyhedron(q, np.concatenate([G, _BOX_A]),
                                np.concatenate([dvec, _BOX_C]))
        if v is None:
            return FilterResult(feasible=False, input=None, iterations=1)
        viol = float(np.max(dvec - G @ v))
        return FilterResult(feasible=True, input=v, iterations=1, max_violation=max(viol, 0.0))
    return _solve_cone_program(q, G, dvec, params.b, lin_A=_BOX_A, lin_c=_BOX_C)


def _cone_slacks(v: np.ndarray, G: np.ndarray, dvec: np.ndarray, b: float) -> np.ndarray:
    return G @ v - b * float(np.linalg.norm(v)) - dvec


def _boundary_candidates(q: np.ndarray, g: np.ndarray, d: float, b: float,
                         n_scan: int = 2048) -> list[np.ndarray]:
    """Local minima of ||v - q||^2 along one cone boundary
    {v : g.v - b ||v|| = d}, via a polar-angle scan plus ternary refinement.
    """
    gn = float(np.linalg.norm(g))
    out: list[np.ndarray] = []
    if abs(d) < 1e-14:
        # boundary degenerates to the origin plus (if ||g|| > b) two rays
        out.append(np.zeros(2))
        if gn > b:
            base = math.atan2(g[1], g[0])
            spread = math.acos(min(1.0, b / gn))
            for th in (base - spread, base + spread):
                u = np.array([math.cos(th), math.sin(th)])
                t = max(0.0, float(q @ u))
                out.append(t * u)
        return out

    theta = np.linspace(-math.pi, math.pi, n_scan, endpoint=False)
    cu = np.cos(theta)
    su = np.sin(theta)
    w = g[0] * cu + g[1] * su - b
    rho = np.full(n_scan, np.nan)
    valid = (np.abs(w) > 1e-14) & ((d / np.where(np.abs(w) > 1e-14, w, 1.0)) >= 0)
    rho[valid] = d / w[valid]
    rho[np.abs(rho) > 1e8] = np.nan
    f = rho * rho - 2.0 * rho * (q[0] * cu + q[1] * su)

    def f_at(th: float) -> float:
        wv = g[0] * math.cos(th) + g[1] * math.sin(th) - b
        if abs(wv) < 1e-14:
            return math.inf
        r = d / wv
        if r < 0 or r > 1e8:
            return math.inf
        return r * r - 2.0 * r * (q[0] * math.cos(th) + q[1] * math.sin(th))

    fin = np.isfinite(f)
    for k in range(n_scan):
        if not fin[k]:
            continue
        km = (k - 1) % n_scan
        kp = (k + 1) % n_scan
        left = f[km] if fin[km] else math.inf
        right = f[kp] if fin[kp] else math.inf
        if f[k] <= left and f[k] <= right:
            lo = theta[k] - 2.0 * math.pi / n_scan
            hi = theta[k] + 2.0 * math.pi / n_scan
            for _ in range(70):  # ternary section to machine precision
                m1 = lo + (hi - lo) / 3.0
                m2 = hi - (hi - lo) / 3.0
                if f_at(m1) <= f_at(m2):
                    hi = m2
                else:
                    lo = m1
            th = 0.5 * (lo + hi)
            wv = g[0] * math.cos(th) + g[1] * math.sin(th) - b
            if abs(wv) > 1e-14 and d / wv >= 0:
                r = d / wv
                out.append(np.array([r * math.cos(th), r * math.sin(th)]))
    return out


def _cone_line_roots(g: np.ndarray, d: float, b: float, p: np.ndarray,
                     s: np.ndarray) -> list[np.ndarray]:
    """Points v = p + t s on the cone boundary g.v - b ||v|| = d: squaring
    the boundary equation gives a quadratic in t (with a sign-validity
    check, since g.v - d = b ||v|| must be nonnegative)."""
    A = float(g @ p) - d
    B = float(g @ s)
    c0 = float(p @ p)
    c1 = 2.0 * float(p @ s)
    a2 = B * B - b * b
    a1 = 2.0 * A * B - b * b * c1
    a0 = A * A - b * b * c0
    roots: list[float] = []
    if abs(a2) < 1e-14:
        if abs(a1) > 1e-14:
            roots.append(-a0 / a1)
    else:
        disc = a1 * a1 - 4.0 * a2 * a0
        if disc >= 0:
            sq = math.sqrt(disc)
            roots.extend(((-a1 - sq) / (2 * a2), (-a1 + sq) / (2 * a2)))
    return [p + t * s for t in roots if A + B * t >= -1e-12]


def _vertex_candidates(g1: np.ndarray, d1: float, g2: np.ndarray, d2: float,
                       b: float) -> list[np.ndarray]:
    """Intersections of two cone boundaries sharing the same b: subtracting
    the boundary equations leaves the line (g1 - g2).v = d1 - d2."""
    n = g1 - g2
    nn = float(np.linalg.norm(n))
    if nn < 1e-13:
        return []
    p = (d1 - d2) / (nn * nn) * n
    s = np.array([-n[1], n[0]]) / nn
    return _cone_line_roots(g1, d1, b, p, s)


def _solve_cone_program(q: np.ndarray, G: np.ndarray, dvec: np.ndarray, b: float,
                        lin_A: np.ndarray | None = None,
                        lin_c: np.ndarray | None = None) -> FilterResult:
    """Exact 2-D solve by candidate enumeration over KKT active sets: the
    unconstrained point, per-boundary local minima, and pairwise boundary
    intersections (cone x cone, cone x line, line x line). A feasible
    minimum-objective candidate is the optimum; no feasible candidate
    certifies infeasibility.

    Optional linear rows lin_A v >= lin_c tighten the problem (used for the
    in-box solve); every lin_A row must be a unit vector.
    """
    m = G.shape[0]
    n_lin = 0 if lin_A is None else lin_A.shape[0]

    def feasible(v):
        tol = 1e-9 * max(1.0, float(np.linalg.norm(v)))
        if float(np.min(_cone_slacks(v, G, dvec, b))) < -tol:
            return False
        if n_lin and float(np.min(lin_A @ v - lin_c)) < -tol:
            return False
        return True

    if feasible(q):
        return FilterResult(feasible=True, input=q.copy(), iterations=1)
    candidates: list[np.ndarray] = [np.zeros(2)]
    for i in range(m):
        candidates.extend(_boundary_candidates(q, G[i], float(dvec[i]), b))
    for i in range(m):
        for j in range(i + 1, m):
            candidates.extend(_vertex_candidates(G[i], float(dvec[i]),
                                                 G[j], float(dvec[j]), b))
    for k in range(n_lin):
        a = lin_A[k]
        p = lin_c[k] * a  # nearest point of the line a.v = c to the origin
        s = np.array([-a[1], a[0]])
        candidates.append(q + (lin_c[k] - float(a @ q)) * a)  # projection of q
        for i in range(m):
            candidates.extend(_cone_line_roots(G[i], float(dvec[i]), b, p, s))
        for k2 in range(k + 1, n_lin):
            det = a[0] * lin_A[k2, 1] - a[1] * lin_A[k2, 0]
            if abs(det) > 1e-12:
                candidates.append(np.array([
                    (lin_c[k] * lin_A[k2, 1] - lin_c[k2] * a[1]) / det,
                    (a[0] * lin_c[k2] - lin_A[k2, 0] * lin_c[k]) / det]))
    best, best_f = None, math.inf
    for v in candidates:
        if feasible(v):
            fv = float(np.dot(v - q, v - q))
            if fv < best_f:
                best, best_f = v, fv
    if best is None:
        return FilterResult(feasible=False, input=None, iterations=1)
    viol = max(0.0, -float(np.min(_cone_slacks(best, G, dvec, b))))
    return FilterResult(feasible=True, input=best, iterations=1, max_violation=viol)


def constraint_values(state, measured_obstacles, params: RobustParams, u: np.ndarray,
                      zeta: float) -> np.ndarray:
    """Slack of every cone constraint at input u (negative means violated)."""
    vals = np.empty(len(measured_obstacles))
    speed = float(np.linalg.norm(u))
    for i, obs in enumerate(measured_obstacles):
        h = barrier(state, obs, zeta)
        lfh, lgh = lie_derivatives(state, obs, zeta)
        vals[i] = (lfh + float(lgh @ u) - params.phi * float(lgh @ lgh)
                   - params.a - params.b * speed + params.alpha * h)
    return vals


def issf_bound(delta: float, params: RobustParams) -> float:
    """Safe-set inflation gamma(delta) = delta^2 / (4 phi alpha) for linear alpha."""
    if params.phi <= 0:
        raise ValueError("the degradation bound is undefined (unbounded) for phi = 0")
    return delta * delta / (4.0 * params.phi * params.alpha)


# -- worst-case conservative margins ----------------------------------------

@dataclass(frozen=True)
class SamplingDomain:
    """Where the Lipschitz coefficients are estimated: robot states, obstacle
    centers, and the minimum robot-obstacle separation kept clear of the
    bearing singularity."""

    state_box: tuple[tuple[float, float], ...] = ((-1.0, 4.0), (-2.0, 2.0), (-math.pi, math.pi))
    center_box: tuple[tuple[float, float], ...] = ((0.0, 3.0), (-1.5, 1.5))
    min_distance: float = 0.3
    pair_scale: float = 0.2  # largest ||rho - rho'|| used in difference quotients


def _barrier_rho_parts(x, y, psi, ox, oy, zeta):
    """Vectorized h + Lg h as functions of the obstacle center (radius excluded:
    r_obs cancels in every difference quotient with respect to the center)."""
    u = ox - x
    w = oy - y
    d2 = u * u + w * w
    d = np.sqrt(d2)
    theta = np.arctan2(w, u)
    s = np.sin(psi - theta)
    h = d - zeta * np.cos(psi - theta)
    dh_dx = -u / d - zeta * w * s / d2
    dh_dy = -w / d + zeta * u * s / d2
    lgh1 = dh_dx * np.cos(psi) + dh_dy * np.sin(psi)
    lgh2 = zeta * s
    return h, lgh1, lgh2


def conservative_baseline(epsilon: float, domain: SamplingDomain, zeta: float,
                          alpha: float, phi: float, samples: int = 100_000,
                          seed: int = 0) -> tuple[float, float]:
    """Worst-case additive and input-proportional margins for measurement
    error up to epsilon.

    Each Lipschitz coefficient with respect to the obstacle center is
    estimated as a running maximum of finite-difference quotients over
    sampled (state, center, perturbed center) triples; the margins scale the
    coefficient sums by epsilon. Lf h is identically zero for the drift-free
    unicycle, so its coefficient contributes nothing. The estimate is
    non-decreasing in the sample count (prefix property under a fixed seed).
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    rng = np.random.Generator(np.random.PCG64(seed))
    lip_ah = 0.0     # alpha . h
    lip_phig = 0.0   # phi * ||Lg h||^2
    lip_lgh = 0.0    # Lg h (vector norm)
    remaining = samples
    chunk = 20_000
    while remaining > 0:
        m = min(chunk, remaining)
        remaining -= m
        x = rng.uniform(*domain.state_box[0], m)
        y = rng.uniform(*domain.state_box[1], m)
        psi = rng.uniform(*domain.state_box[2], m)
        ox = rng.uniform(*domain.center_box[0], m)
        oy = rng.uniform(*domain.center_box[1], m)
        # multi-scale center perturbations
        r = domain.pair_scale * 10.0 ** rng.uniform(-3.0, 0.0, m)
        ang = rng.uniform(-math.pi, math.pi, m)
        ox2 = ox + r * np.cos(ang)
        oy2 = oy + r * np.sin(ang)
        d1 = np.hypot(ox - x, oy - y)
        d2 = np.hypot(ox2 - x, oy2 - y)
        ok = (d1 >= domain.min_distance) & (d2 >= domain.min_distance)
        if not ok.any():
            continue
        x, y, psi, ox, oy, ox2, oy2 = (arr[ok] for arr in (x, y, psi, ox, oy, ox2, oy2))
        sep = np.hypot(ox2 - ox, oy2 - oy)
        h1, g11, g12 = _barrier_rho_parts(x, y, psi, ox, oy, zeta)
        h2, g21, g22 = _barrier_rho_parts(x, y, psi, ox2, oy2, zeta)
        lip_ah = max(lip_ah, float(np.max(alpha * np.abs(h1 - h2) / sep)))
        n1 = g11 * g11 + g12 * g12
        n2 = g21 * g21 + g22 * g22
        lip_phig = max(lip_phig, float(np.max(phi * np.abs(n1 - n2) / sep)))
        dg = np.hypot(g11 - g21, g12 - g22)
        lip_lgh = max(lip_lgh, float(np.max(dg / sep)))
    lip_lfh = 0.0
    a_lower = epsilon * (lip_lfh + lip_ah + lip_phig)
    b_lower = epsilon * lip_lgh
    return a_lower, b_lower
