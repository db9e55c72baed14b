import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tsfla.errors import DegenerateAnchorError
from tsfla.metrics import hypervolume_2d, normalize, normalized_hypervolume
from tsfla.pareto import dominance_matrix, dominates, nondominated_mask, nondominated_sort


def brute_force_ranks(points):
    """Peel non-dominated layers by exhaustive pairwise checks."""
    points = np.asarray(points, dtype=float)
    ranks = np.zeros(len(points), dtype=int)
    remaining = set(range(len(points)))
    rank = 1
    while remaining:
        layer = [
            i for i in remaining
            if not any(
                np.all(points[j] <= points[i]) and np.any(points[j] < points[i]) for j in remaining if j != i
            )
        ]
        for i in layer:
            ranks[i] = rank
            remaining.discard(i)
        rank += 1
    return ranks


@pytest.mark.parametrize(
    "points, expected",
    [
        ([[0.0, 0.0]], [1]),
        ([[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]], [1, 1, 2]),
        ([[i, i] for i in range(6)], [1, 2, 3, 4, 5, 6]),
        ([[1.0, 1.0], [1.0, 1.0]], [1, 1]),
        ([[1.0, 2.0], [1.0, 1.0]], [2, 1]),
    ],
)
def test_rank_examples(points, expected):
    np.testing.assert_array_equal(nondominated_sort(points), expected)


def test_empty_sort():
    assert len(nondominated_sort(np.zeros((0, 2)))) == 0


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        nondominated_sort([[np.nan, 0.0]])


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 30), st.just(2)),
              elements=st.integers(0, 6).map(float)))
def test_sort_matches_brute_force_with_ties(points):
    np.testing.assert_array_equal(nondominated_sort(points), brute_force_ranks(points))


def test_rank_one_is_nondominated_set():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(80, 2))
    dom = dominance_matrix(pts, pts)
    independent = ~dom.any(axis=0)
    np.testing.assert_array_equal(nondominated_sort(pts) == 1, independent)
    np.testing.assert_array_equal(nondominated_mask(pts), independent)


def test_dominates():
    assert dominates([0, 0], [0, 1])
    assert not dominates([0, 1], [0, 1])
    assert not dominates([0, 2], [1, 1])


def test_normalize_affine():
    front = normalize([[1.0, 2.0]], [0.0, 0.0], [2.0, 4.0])
    np.testing.assert_allclose(front.points, [[0.5, 0.5]])
    assert not front.clipped.any()


def test_nadir_point_contributes_nothing():
    assert normalized_hypervolume([[2.0, 4.0]], [0.0, 0.0], [2.0, 4.0]) == 0.0


def test_beyond_nadir_is_clipped_and_flagged():
    front = normalize([[1.0, 10.0]], [0.0, 0.0], [2.0, 4.0])
    np.testing.assert_allclose(front.points, [[0.5, 1.0]])
    assert front.clipped.all()
    assert hypervolume_2d(front) == 0.0


@pytest.mark.parametrize("nadir", [[0.0, 1.0], [1.0, -1.0]])
def test_degenerate_anchors(nadir):
    with pytest.raises(DegenerateAnchorError):
        normalize([[0.5, 0.5]], [0.0, 0.0], nadir)


@pytest.mark.parametrize(
    "points, expected",
    [
        ([[0.0, 0.0]], 1.0),
        ([[0.25, 0.75], [0.5, 0.5]], 0.3125),
        ([[0.25, 0.75], [0.5, 0.5], [0.6, 0.6]], 0.3125),
        ([], 0.0),
        ([[1.0, 0.0]], 0.0),
    ],
)
def test_hypervolume_examples(points, expected):
    assert hypervolume_2d(np.asarray(points, dtype=float).reshape(-1, 2)) == pytest.approx(expected, abs=1e-15)


def test_hypervolume_two_point_monte_carlo():
    rng = np.random.default_rng(0)
    u = rng.random((10**6, 2))
    front = np.array([[0.25, 0.75], [0.5, 0.5]])
    covered = np.any(np.all(u[:, None, :] >= front[None], axis=2), axis=1)
    assert covered.mean() == pytest.approx(0.3125, abs=5e-3)


unit_points = arrays(np.float64, st.tuples(st.integers(0, 15), st.just(2)),
                     elements=st.floats(0, 1.2, allow_nan=False))


@settings(max_examples=100, deadline=None)
@given(unit_points, st.floats(0, 1.2), st.floats(0, 1.2))
def test_hypervolume_monotone_and_bounded(points, a, b):
    hv = hypervolume_2d(points)
    assert 0.0 <= hv <= 1.0
    assert hypervolume_2d(np.vstack([points, [[a, b]]])) >= hv - 1e-15


@settings(max_examples=100, deadline=None)
@given(unit_points, st.randoms(use_true_random=False))
def test_hypervolume_permutation_invariant(points, rnd):
    order = list(range(len(points)))
    rnd.shuffle(order)
    assert hypervolume_2d(points[order]) == pytest.approx(hypervolume_2d(points), abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(unit_points)
def test_hypervolume_zero_iff_nothing_inside(points):
    inside = np.all(points < 1.0, axis=1).any() if len(points) else False
    assert (hypervolume_2d(points) > 0) == inside
