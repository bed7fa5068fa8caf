import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from safetune.actions import ActionGrid, DimSpec, GridSpec, build_grid


class DirectionStub:
    """rng stand-in that returns a fixed direction from standard_normal."""

    def __init__(self, vec):
        self.vec = np.asarray(vec, dtype=float)

    def standard_normal(self, n):
        assert n == len(self.vec)
        return self.vec.copy()


@pytest.fixture(scope="module")
def grid():
    return ActionGrid(GridSpec.default())


def test_default_grid_size(grid):
    # per-dimension counts (10, 11, 11, 11)
    assert grid.spec.counts == (10, 11, 11, 11)
    assert grid.size == 13310


def test_single_point_spec():
    spec = GridSpec(dims=(
        DimSpec("alpha", 2.0, 2.0, 0.5),
        DimSpec("phi", 0.3, 0.3, 0.1),
        DimSpec("a", 0.1, 0.1, 0.1),
        DimSpec("b", 0.0, 0.0, 0.005),
    ))
    actions = build_grid(spec)
    assert len(actions) == 1
    assert actions[0].values() == (2.0, 0.3, 0.1, 0.0)


def test_two_point_alpha_spec_ordering():
    spec = GridSpec(dims=(
        DimSpec("alpha", 0.5, 1.0, 0.5),
        DimSpec("phi", 0.3, 0.3, 0.1),
        DimSpec("a", 0.1, 0.1, 0.1),
        DimSpec("b", 0.0, 0.0, 0.005),
    ))
    actions = build_grid(spec)
    assert [a.alpha for a in actions] == [0.5, 1.0]


def test_rejects_bad_dims():
    with pytest.raises(ValueError):
        DimSpec("alpha", 0.5, 5.0, 0.0)
    with pytest.raises(ValueError):
        DimSpec("alpha", 5.0, 0.5, 0.5)


def test_index_roundtrip_full_grid(grid):
    for i in range(grid.size):
        assert grid.index_of(grid.coords(i)) == i


def test_build_grid_row_major_and_stable(grid):
    actions = build_grid(grid.spec)
    assert [a.index for a in actions] == list(range(grid.size))
    # innermost dimension (b) varies fastest
    assert actions[0].values()[:3] == actions[1].values()[:3]
    assert actions[1].b == pytest.approx(0.005)


def test_distance_identity_and_neighbors(grid):
    assert grid.distance(7, 7) == 0.0
    i1 = grid.index_of((0, 0, 0, 0))
    for d, coords in enumerate(((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))):
        assert grid.distance(i1, grid.index_of(coords)) == pytest.approx(1.0)


def test_distance_two_unit_steps(grid):
    # (0.5, 0, 0, 0) vs (1.0, 0.1, 0, 0): one alpha step plus one phi step
    i1 = grid.index_of((0, 0, 0, 0))
    i2 = grid.index_of((1, 1, 0, 0))
    assert grid.distance(i1, i2) == pytest.approx(math.sqrt(2.0))


def test_draw_line_axis_aligned_full_column(grid):
    anchor = grid.index_of((5, 5, 5, 5))
    line = grid.draw_line(anchor, DirectionStub([1.0, 0.0, 0.0, 0.0]), max_points=25)
    assert len(line.members) == 10
    coords = [grid.coords(m) for m in line.members]
    assert sorted(c[0] for c in coords) == list(range(10))
    assert all(c[1:] == (5, 5, 5) for c in coords)


def test_draw_line_single_point_is_anchor(grid):
    anchor = grid.index_of((3, 2, 8, 1))
    line = grid.draw_line(anchor, DirectionStub([0.3, -0.5, 0.7, 0.2]), max_points=1)
    assert line.members == (anchor,)


def test_draw_line_sign_flip_invariance(grid):
    anchor = grid.index_of((4, 6, 2, 9))
    vec = [0.8, -0.2, 0.4, -0.5]
    fwd = grid.draw_line(anchor, DirectionStub(vec), max_points=25)
    bwd = grid.draw_line(anchor, DirectionStub([-v for v in vec]), max_points=25)
    assert set(fwd.members) == set(bwd.members)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=13309), st.integers(min_value=0),
       st.integers(min_value=1, max_value=40))
def test_draw_line_membership_properties(anchor, seed, e):
    grid = ActionGrid(GridSpec.default())
    rng = np.random.default_rng(seed)
    line = grid.draw_line(anchor, rng, max_points=e)
    assert 1 <= len(line.members) <= e
    assert anchor in line.members
    assert len(set(line.members)) == len(line.members)
    for m in line.members:
        coords = grid.coords(m)  # raises if out of bounds
        assert all(0 <= c for c in coords)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=13309))
def test_normalized_unit_spacing(index):
    grid = ActionGrid(GridSpec.default())
    coords = grid.coords(index)
    z = grid.normalized(index)
    base = grid.normalized(0)
    np.testing.assert_allclose(z - base, np.array(coords, dtype=float), atol=1e-12)


def test_gridspec_json_roundtrip():
    spec = GridSpec.default()
    restored = GridSpec.from_json(spec.to_json())
    assert restored == spec
    assert [d["name"] for d in spec.to_json()] == ["alpha", "phi", "a", "b"]
