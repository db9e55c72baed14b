import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tsfla.errors import ConfigurationError, ModelUnbuiltError
from tsfla.surrogates import (
    Archive,
    SurrogateKind,
    SurrogateModel,
    predict_idw,
    predict_idwr,
    predict_knn,
    predict_lr_knn,
    predict_no_structure,
)


def archive_of(xs, ys):
    xs = np.asarray(xs, dtype=float).reshape(len(xs), -1)
    ys = np.asarray(ys, dtype=float)
    if ys.ndim == 1:
        ys = np.column_stack([ys, ys])
    a = Archive(xs.shape[1])
    for x, y in zip(xs, ys):
        a.add(x, y)
    return a


@pytest.fixture
def two_point():
    return archive_of([[0.0], [1.0]], [0.0, 10.0])


@pytest.mark.parametrize("query, expected", [(0.5, 5.0), (0.25, 2.5), (0.0, 0.0), (1.0, 10.0)])
def test_idw_hand_values(two_point, query, expected):
    np.testing.assert_allclose(predict_idw(two_point, [query]), [expected, expected], rtol=0, atol=1e-12)


def test_idwr_linear_extrapolation():
    a = archive_of([[0.0], [1.0], [2.0]], [0.0, 1.0, 2.0])
    np.testing.assert_allclose(predict_idw(a, [3.0]), [15 / 11] * 2, atol=1e-12)
    np.testing.assert_allclose(predict_idwr(a, [3.0]), [3.0, 3.0], atol=1e-9)


def test_idwr_equidistant_falls_back(two_point):
    np.testing.assert_allclose(predict_idwr(two_point, [0.5]), [5.0, 5.0], atol=1e-12)


def test_idwr_needs_two_entries():
    a = archive_of([[0.0]], [1.0])
    with pytest.raises(ModelUnbuiltError):
        predict_idwr(a, [1.0])
    with pytest.raises(ModelUnbuiltError):
        SurrogateModel.build("idwr", a)


def test_idwr_reduces_to_idw_with_constant_objectives():
    rng = np.random.default_rng(2)
    a = archive_of(rng.normal(size=(6, 3)), np.full(6, 4.0))
    q = rng.normal(size=(5, 3))
    np.testing.assert_allclose(predict_idwr(a, q), predict_idw(a, q), atol=1e-12)


@pytest.mark.parametrize("fn", [predict_idw, predict_idwr, predict_knn, predict_lr_knn])
def test_empty_archive_unbuilt(fn):
    with pytest.raises(ModelUnbuiltError):
        fn(Archive(2), [0.0, 0.0])


def test_no_structure_empty_archive():
    with pytest.raises(ModelUnbuiltError):
        predict_no_structure(Archive(2), np.random.default_rng(0))


@pytest.mark.parametrize("k", [3, 5, 8, 32])
def test_lr_knn_recovers_linear_function(k):
    rng = np.random.default_rng(k)
    x = rng.uniform(-5, 5, (12, 2))
    y = 3 + 2 * x[:, 0] - x[:, 1]
    a = archive_of(x, np.column_stack([y, -y]))
    q = rng.uniform(-10, 10, (20, 2))
    expected = 3 + 2 * q[:, 0] - q[:, 1]
    pred = predict_lr_knn(a, q, k=k)
    np.testing.assert_allclose(pred[:, 0], expected, atol=1e-6)
    np.testing.assert_allclose(pred[:, 1], -expected, atol=1e-6)


def test_lr_knn_single_neighbour_is_constant():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(5, 3))
    y = rng.normal(size=(5, 2))
    a = archive_of(x, y)
    q = rng.normal(size=3)
    nearest = np.argmin(np.linalg.norm(x - q, axis=1))
    np.testing.assert_allclose(predict_lr_knn(a, q, k=1), y[nearest], atol=1e-12)


def test_lr_knn_matches_dense_least_squares():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(5, 3))
    y = rng.normal(size=(5, 2))
    a = archive_of(x, y)
    q = rng.normal(size=3)
    design = np.column_stack([np.ones(5), x])
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    expected = np.concatenate([[1.0], q]) @ beta
    np.testing.assert_allclose(predict_lr_knn(a, q, k=5), expected, rtol=1e-6, atol=1e-6)


def test_lr_knn_ties_by_insertion_order():
    # three points equidistant from the query; k=2 must use the first two inserted
    a = archive_of([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]], [[1.0, 1.0], [3.0, 3.0], [100.0, 100.0]])
    np.testing.assert_allclose(predict_lr_knn(a, [0.0, 0.0], k=2), [2.0, 2.0], atol=1e-6)


def test_knn_examples():
    a = archive_of([[0.0], [10.0]], [[0.0, 1.0], [5.0, 5.0]])
    np.testing.assert_array_equal(predict_knn(a, [2.0]), [0.0, 1.0])
    np.testing.assert_array_equal(predict_knn(a, [10.0]), [5.0, 5.0])


def test_knn_ties_by_insertion_order():
    a = archive_of([[1.0], [-1.0]], [[1.0, 1.0], [2.0, 2.0]])
    np.testing.assert_array_equal(predict_knn(a, [0.0]), [1.0, 1.0])


def test_no_structure_single_entry():
    a = archive_of([[0.0]], [[3.0, 4.0]])
    rng = np.random.default_rng(0)
    for _ in range(5):
        np.testing.assert_array_equal(predict_no_structure(a, rng), [3.0, 4.0])


def test_no_structure_uniform_frequencies():
    ys = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 5.0], [3.0, 3.0]])
    a = archive_of(np.arange(4.0)[:, None], ys)
    draws = predict_no_structure(a, np.random.default_rng(12), np.zeros((10_000, 1)))
    rows = {tuple(r) for r in ys}
    assert all(tuple(d) in rows for d in draws)
    counts = np.array([(draws[:, 0] == v).sum() for v in ys[:, 0]])
    sigma = np.sqrt(10_000 * 0.25 * 0.75)
    assert np.all(np.abs(counts - 2500) <= 5 * sigma)


def test_no_structure_deterministic_per_stream():
    a = archive_of(np.arange(6.0)[:, None], np.arange(12.0).reshape(6, 2))
    m1 = SurrogateModel.build("no_structure", a, rng=np.random.default_rng(3))
    m2 = SurrogateModel.build("no_structure", a, rng=np.random.default_rng(3))
    q = np.zeros((20, 1))
    np.testing.assert_array_equal(m1.predict(q), m2.predict(q))


def test_no_structure_requires_rng():
    with pytest.raises(ConfigurationError):
        SurrogateModel.build("no_structure", archive_of([[0.0]], [1.0]))


finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(
    x=arrays(np.float64, (6, 2), elements=finite, unique=True),
    y=arrays(np.float64, (6, 2), elements=finite),
    q=arrays(np.float64, (3, 2), elements=finite),
)
def test_idw_bounded_by_archive(x, y, q):
    a = Archive(2)
    for xi, yi in zip(x, y):
        if not a.contains(xi):
            a.add(xi, yi)
    y = a.y
    pred = predict_idw(a, q)
    assert np.all(pred >= y.min(axis=0) - 1e-9)
    assert np.all(pred <= y.max(axis=0) + 1e-9)


@pytest.mark.parametrize("kind", ["idw", "idwr", "lr_knn", "knn"])
def test_models_interpolate_archive(kind):
    rng = np.random.default_rng(9)
    x = rng.uniform(-3, 3, (40, 3))
    y = np.column_stack([np.sin(x).sum(axis=1), (x**2).sum(axis=1)])
    model = SurrogateModel.build(kind, archive_of(x, y), k=8)
    np.testing.assert_array_equal(model.predict(x), y)


@pytest.mark.parametrize("kind", list(SurrogateKind))
def test_predictions_finite_and_deterministic(kind):
    rng = np.random.default_rng(4)
    x = rng.uniform(-3, 3, (30, 2))
    y = rng.normal(size=(30, 2))
    q = rng.uniform(-6, 6, (25, 2))
    a = archive_of(x, y)
    m1 = SurrogateModel.build(kind, a, k=6, rng=np.random.default_rng(1))
    m2 = SurrogateModel.build(kind, a, k=6, rng=np.random.default_rng(1))
    p = m1.predict(q)
    assert p.shape == (25, 2) and np.all(np.isfinite(p))
    np.testing.assert_array_equal(p, m2.predict(q))


def test_model_is_snapshot_of_archive():
    a = archive_of([[0.0], [1.0]], [0.0, 10.0])
    model = SurrogateModel.build("knn", a)
    a.add([0.4], [99.0, 99.0])
    np.testing.assert_array_equal(model.predict([0.45]), [0.0, 0.0])


def test_archive_rejects_duplicates_and_nonfinite():
    a = Archive(2)
    a.add([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        a.add([0.0, 0.0], [2.0, 2.0])
    with pytest.raises(ValueError):
        a.add([1.0, 0.0], [np.inf, 1.0])
    assert len(a) == 1


def test_archive_grows_past_capacity_in_order():
    a = Archive(1, capacity=2)
    for i in range(10):
        a.add([float(i)], [float(i), -float(i)])
    np.testing.assert_array_equal(a.x[:, 0], np.arange(10.0))
    np.testing.assert_array_equal(a.y[:, 1], -np.arange(10.0))


@pytest.mark.parametrize("text, kind", [("IDW", "idw"), ("lr-knn", "lr_knn"), ("LRKNN", "lr_knn"),
                                        ("No-structure", "no_structure"), ("knn", "knn")])
def test_kind_parsing(text, kind):
    assert SurrogateKind.parse(text).value == kind


def test_unknown_kind():
    with pytest.raises(ConfigurationError):
        SurrogateKind.parse("kriging")
