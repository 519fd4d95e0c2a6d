import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdct.errors import ConfigError, OutOfDomainError
from mdct.grid import (
    DomainBox, TreeIndex, build_grid, children, father, locate, locate_many,
    neighborhood, subtree, subtree_size,
)


def bisect_cells(lo, hi, depth):
    """Independent enumeration: split a cell into 2^d halves, first axis fastest."""
    if depth == 0:
        return [(lo, hi)]
    mid = (lo + hi) / 2
    d = len(lo)
    out = []
    for off in itertools.product((0, 1), repeat=d):
        off = off[::-1]  # first axis varies fastest
        clo = np.where(np.array(off) == 0, lo, mid)
        chi = np.where(np.array(off) == 0, mid, hi)
        out.append((clo, chi))
    return out


def test_build_grid_1d_counts_and_spacing(grid_1d):
    assert grid_1d.J == (5, 10, 20)
    assert grid_1d.delta(1) == 2.0
    assert grid_1d.delta(3) == 0.5
    np.testing.assert_array_equal(grid_1d.knots[0][:, 0], [1, 3, 5, 7, 9])


def test_single_cell_grid():
    g = build_grid(DomainBox((0.0, 0.0), (1.0, 1.0)), 1, (1, 1))
    np.testing.assert_array_equal(g.knots[0], [[0.5, 0.5]])


def test_2d_grid_matches_bisection(grid_2d):
    assert grid_2d.J == (16, 64)
    assert grid_2d.spacing[1, 0] == 0.125
    # resolution 1: 4x4 cells, first axis fastest
    cells1 = [(np.array([i, j]) * 0.25, np.array([i + 1, j + 1]) * 0.25)
              for j in range(4) for i in range(4)]
    expected2 = []
    for lo, hi in cells1:
        expected2.extend(bisect_cells(lo, hi, 1))
    centers2 = np.array([(lo + hi) / 2 for lo, hi in expected2])
    np.testing.assert_allclose(grid_2d.knots[0], [(lo + hi) / 2 for lo, hi in cells1])
    np.testing.assert_allclose(grid_2d.knots[1], centers2)


@pytest.mark.parametrize("args", [
    (DomainBox((0.0,), (10.0,)), 0, (5,)),
    (DomainBox((0.0,), (10.0,)), 2, (0,)),
    (DomainBox((0.0, 0.0), (1.0, 1.0)), 2, (4,)),
])
def test_build_grid_rejects_bad_config(args):
    with pytest.raises(ConfigError):
        build_grid(*args)


def test_bad_box():
    with pytest.raises(ConfigError):
        DomainBox((1.0,), (0.0,))


@pytest.mark.parametrize("idx, P, expected", [
    (TreeIndex(1, 2), 2, TreeIndex(1, 1)),
    (TreeIndex(5, 3), 2, TreeIndex(3, 2)),
    (TreeIndex(7, 2), 4, TreeIndex(2, 1)),
])
def test_father_examples(idx, P, expected):
    assert father(idx, P) == expected


def test_father_of_root_level_raises():
    with pytest.raises(ValueError):
        father(TreeIndex(1, 1), 2)


def test_subtree_examples(grid_1d):
    g2 = build_grid(DomainBox((0.0,), (1.0,)), 2, (1,))
    assert set(subtree(TreeIndex(1, 2), g2)) == {TreeIndex(1, 2)}
    assert set(subtree(TreeIndex(1, 1), g2)) == {TreeIndex(1, 1), TreeIndex(1, 2), TreeIndex(2, 2)}
    got = subtree(TreeIndex(2, 1), grid_1d)
    assert set(got) == {TreeIndex(2, 1), TreeIndex(3, 2), TreeIndex(4, 2)} | {TreeIndex(j, 3) for j in range(5, 9)}


@settings(max_examples=30, deadline=None)
@given(R=st.integers(1, 4), d=st.integers(1, 2), n1=st.integers(1, 3))
def test_tree_consistency(R, d, n1):
    g = build_grid(DomainBox((0.0,) * d, (1.0,) * d), R, (n1,) * d)
    for r in range(1, R + 1):
        assert g.J[r - 1] == g.P ** (r - 1) * g.J1
        for j in range(1, g.J[r - 1] + 1):
            idx = TreeIndex(j, r)
            sub = subtree(idx, g)
            assert len(sub) == subtree_size(r, g) == (g.P ** (R - r + 1) - 1) // (g.P - 1)
            if r >= 2:
                f = father(idx, g.P)
                assert idx in subtree(f, g)
                assert idx in children(f, g.P)


def test_children_nest_geometrically(grid_2d):
    for j in range(1, 65):
        idx = TreeIndex(j, 2)
        lo, hi = grid_2d.cell_bounds(idx)
        flo, fhi = grid_2d.cell_bounds(father(idx, 4))
        assert np.all(lo >= flo) and np.all(hi <= fhi)


def test_spacing_halves_exactly():
    g = build_grid(DomainBox((0.0, -1.0), (3.0, 2.5)), 5, (3, 7))
    for r in range(2, 6):
        np.testing.assert_array_equal(g.spacing[r - 1], g.spacing[0] / 2 ** (r - 1))


def test_locate_examples(grid_1d):
    assert locate([3.2], grid_1d, 1) == TreeIndex(2, 1)
    assert locate([4.0], grid_1d, 1) == TreeIndex(3, 1)  # boundary goes to [4, 6)
    assert locate([10.0], grid_1d, 1) == TreeIndex(5, 1)  # last cell is closed
    for r in range(1, 4):
        for j, knot in enumerate(grid_1d.knots[r - 1], 1):
            assert locate(knot, grid_1d, r) == TreeIndex(j, r)
    with pytest.raises(OutOfDomainError):
        locate([10.5], grid_1d, 1)


@pytest.mark.parametrize("r", [1, 2])
def test_locate_partition(grid_2d, r):
    # dense probe lattice including every cell boundary
    ticks = np.linspace(0.0, 1.0, 81)
    pts = np.array([(x, y) for y in ticks for x in ticks])
    found = locate_many(pts, grid_2d, r)
    for pt, j in zip(pts, found):
        owners = []
        for k in range(grid_2d.J[r - 1]):
            lo, hi = grid_2d.cell_bounds(TreeIndex(k + 1, r))
            upper_ok = np.where(hi >= 1.0, pt <= hi, pt < hi)
            if np.all(pt >= lo) and np.all(upper_ok):
                owners.append(k)
        assert owners == [j]


def test_neighborhood_examples():
    g = build_grid(DomainBox((0.0,), (10.0,)), 1, (5,))
    np.testing.assert_array_equal(neighborhood(3, 1.0, g), [2, 3, 4])
    for m in range(1, 6):
        np.testing.assert_array_equal(neighborhood(m, 1e-9, g), [m])
    far = np.array([[9.5], [10.0]])
    assert len(neighborhood(1, 1.0, g, kind="data", locations=far)) == 0
    np.testing.assert_array_equal(neighborhood(1, 1.0, g, kind="data", locations=[[0.5], [2.5], [3.5]]), [0, 1])
    with pytest.raises(IndexError):
        neighborhood(6, 1.0, g)


def test_block_columns_cover_subtree(grid_2d):
    seen = np.concatenate([grid_2d.block_columns(m) for m in range(grid_2d.J1)])
    assert sorted(seen) == list(range(grid_2d.n_basis))
    for m in range(grid_2d.J1):
        cols = grid_2d.block_columns(m)
        nodes = {grid_2d.node_of_column(c) for c in cols}
        assert nodes == set(subtree(TreeIndex(m + 1, 1), grid_2d))
