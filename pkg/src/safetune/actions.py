"""Discrete search space over the robust-filter parameters (alpha, phi, a, b).

The four tuning knobs live on an anisotropic grid (alpha spans 4.5, b spans
0.05), so all geometry here works in step-normalized coordinates: dividing
each coordinate by its grid step makes neighboring grid points exactly one
unit apart in every dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DIM_NAMES = ("alpha", "phi", "a", "b")


@dataclass(frozen=True)
class DimSpec:
    """One grid dimension: inclusive [min, max] with spacing step."""

    name: str
    min: float
    max: float
    step: float

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError(f"dimension {self.name}: step must be positive, got {self.step}")
        if self.min > self.max:
            raise ValueError(f"dimension {self.name}: min {self.min} > max {self.max}")

    @property
    def count(self) -> int:
        # floor with slack so 0.05/0.005 -> 10 despite binary rounding
        return int(math.floor((self.max - self.min) / self.step + 1e-9)) + 1

    def values(self) -> np.ndarray:
        return self.min + self.step * np.arange(self.count)


@dataclass(frozen=True)
class GridSpec:
    """Four DimSpec entries in canonical (alpha, phi, a, b) order."""

    dims: tuple[DimSpec, ...]

    def __post_init__(self):
        if len(self.dims) != len(DIM_NAMES):
            raise ValueError(f"expected {len(DIM_NAMES)} dimensions, got {len(self.dims)}")

    @classmethod
    def default(cls) -> "GridSpec":
        """The production action space: alpha 0.5:0.5:5, phi/a 0:0.1:1, b 0:0.005:0.05."""
        return cls(dims=(
            DimSpec("alpha", 0.5, 5.0, 0.5),
            DimSpec("phi", 0.0, 1.0, 0.1),
            DimSpec("a", 0.0, 1.0, 0.1),
            DimSpec("b", 0.0, 0.05, 0.005),
        ))

    @classmethod
    def from_json(cls, obj: list[dict]) -> "GridSpec":
        dims = tuple(DimSpec(d["name"], float(d["min"]), float(d["max"]), float(d["step"]))
                     for d in obj)
        return cls(dims=dims)

    def to_json(self) -> list[dict]:
        return [{"name": d.name, "min": d.min, "max": d.max, "step": d.step}
                for d in self.dims]

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(d.count for d in self.dims)

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))


@dataclass(frozen=True)
class Action:
    """One candidate parameter vector with its stable grid index."""

    alpha: float
    phi: float
    a: float
    b: float
    index: int

    def values(self) -> tuple[float, float, float, float]:
        return (self.alpha, self.phi, self.a, self.b)


@dataclass(frozen=True)
class LineSubspace:
    """Grid points nearest to a random line through an anchor action."""

    anchor: int
    direction: tuple[float, ...]  # unit vector in step-normalized coordinates
    members: tuple[int, ...]      # ordered along the line


class ActionGrid:
    """Indexing and geometry over a GridSpec.

    Immutable after construction; row-major index order (alpha outermost,
    b innermost) is stable across runs.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        self._values = [d.values() for d in spec.dims]
        self._counts = np.array(spec.counts, dtype=int)
        self._steps = np.array([d.step for d in spec.dims])
        self._mins = np.array([d.min for d in spec.dims])
        # row-major strides
        strides = np.ones(len(self._counts), dtype=int)
        for d in range(len(self._counts) - 2, -1, -1):
            strides[d] = strides[d + 1] * self._counts[d + 1]
        self._strides = strides

    @property
    def size(self) -> int:
        return int(self._counts.prod())

    def coords(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.size:
            raise IndexError(f"action index {index} out of range [0, {self.size})")
        out = []
        rem = index
        for d in range(len(self._counts)):
            out.append(rem // self._strides[d])
            rem = rem % self._strides[d]
        return tuple(int(c) for c in out)

    def index_of(self, coords) -> int:
        coords = np.asarray(coords, dtype=int)
        if np.any(coords < 0) or np.any(coords >= self._counts):
            raise IndexError(f"grid coordinates {tuple(coords)} out of range")
        return int((coords * self._strides).sum())

    def action(self, index: int) -> Action:
        c = self.coords(index)
        vals = [self._values[d][c[d]] for d in range(4)]
        return Action(alpha=float(vals[0]), phi=float(vals[1]), a=float(vals[2]),
                      b=float(vals[3]), index=index)

    def normalized(self, index: int) -> np.ndarray:
        """Step-normalized coordinates of a grid point."""
        c = np.array(self.coords(index), dtype=float)
        return self._mins / self._steps + c

    def normalized_many(self, indices) -> np.ndarray:
        return np.stack([self.normalized(i) for i in indices])

    def distance(self, i1: int, i2: int) -> float:
        """Euclidean distance in step-normalized coordinates."""
        return float(np.linalg.norm(self.normalized(i1) - self.normalized(i2)))

    def draw_line(self, anchor: int, rng: np.random.Generator, max_points: int = 25) -> LineSubspace:
        """Grid points nearest to a uniformly random line through the anchor.

        The direction is uniform on the unit sphere restricted to the
        non-degenerate dimensions (count > 1), in step-normalized
        coordinates. Membership follows from walking the continuous line in
        half-step increments and snapping to the nearest in-bounds grid
        point; if that yields more than max_points candidates, the ones with
        the smallest perpendicular distance to the line are kept.
        """
        if max_points < 1:
            raise ValueError("max_points must be >= 1")
        free = self._counts > 1
        if not free.any():
            return LineSubspace(anchor=anchor, direction=(0.0,) * 4, members=(anchor,))
        d = rng.standard_normal(4)
        d[~free] = 0.0
        norm = np.linalg.norm(d)
        if norm < 1e-12:  # astronomically unlikely; resample deterministically
            d = np.where(free, 1.0, 0.0)
            norm = np.linalg.norm(d)
        d = d / norm

        z0 = self.normalized(anchor)
        lo = self._mins / self._steps - 0.5
        hi = lo + self._counts  # == top value/step + 0.5
        # t-interval over which the continuous point stays within half a step
        # of the box; beyond it no new snaps can appear
        t_lo, t_hi = -math.inf, math.inf
        for k in range(4):
            if abs(d[k]) < 1e-15:
                continue
            a = (lo[k] - z0[k]) / d[k]
            b = (hi[k] - z0[k]) / d[k]
            t_lo = max(t_lo, min(a, b))
            t_hi = min(t_hi, max(a, b))

        # walk outward from the anchor so the sampled points (hence the member
        # set) are invariant under direction negation
        seen: dict[int, tuple[float, float]] = {}  # index -> (perp dist, t of snap)
        offset = self._mins / self._steps

        def snap(t: float) -> None:
            p = z0 + t * d
            c = np.rint(p - offset).astype(int)
            c = np.clip(c, 0, self._counts - 1)
            idx = self.index_of(c)
            rel = offset + c - z0
            proj = float(rel @ d)
            perp = float(np.linalg.norm(rel - proj * d))
            if idx not in seen or perp < seen[idx][0] - 1e-15:
                seen[idx] = (perp, proj)

        snap(0.0)
        t = 0.5
        while t <= t_hi + 1e-9:
            snap(t)
            t += 0.5
        t = -0.5
        while t >= t_lo - 1e-9:
            snap(t)
            t -= 0.5

        # selection key is sign-flip invariant: (perp distance, |t|, index)
        ranked = sorted(seen.items(), key=lambda kv: (kv[1][0], abs(kv[1][1]), kv[0]))
        kept = ranked[:max_points]
        kept.sort(key=lambda kv: (kv[1][1], kv[0]))  # order along the line
        members = tuple(idx for idx, _ in kept)
        return LineSubspace(anchor=anchor, direction=tuple(float(x) for x in d), members=members)


def build_grid(spec: GridSpec) -> list[Action]:
    """All grid points in deterministic row-major order."""
    grid = ActionGrid(spec)
    return [grid.action(i) for i in range(grid.size)]
