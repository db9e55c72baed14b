import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthetic import INFORMATIVE, NAMES, synthetic_dataset
from tsfla.errors import ConfigurationError, DegenerateDatasetError, SampleTooSmallError, UndefinedMetricError
from tsfla.features import FEATURE_NAMES
from tsfla.perfmodel import (
    STATIC,
    Dataset,
    EvalReport,
    JoinError,
    bootstrap_evaluate,
    build_datasets,
    default_mtry,
    fit_forest,
    fit_forest_arrays,
    pseudo_r2,
    rfe_select,
)


@pytest.mark.parametrize(
    "y, y_hat, expected",
    [
        ([0.0, 1.0], [0.0, 1.0], 1.0),
        ([0.0, 1.0, 2.0], [1.0, 1.0, 1.0], 0.0),
        ([0.0, 1.0], [1.0, 0.0], 0.0),  # negative values clamp to zero
        ([0.0, 2.0], [0.5, 1.5], 0.75),
    ],
)
def test_pseudo_r2(y, y_hat, expected):
    assert pseudo_r2(y, y_hat) == pytest.approx(expected)


def test_pseudo_r2_undefined():
    with pytest.raises(UndefinedMetricError):
        pseudo_r2([0.3, 0.3], [0.1, 0.2])
    with pytest.raises(UndefinedMetricError):
        pseudo_r2([0.3], [0.3])
    with pytest.raises(ValueError):
        pseudo_r2([0.1, 0.2], [0.1])


@pytest.mark.parametrize("p, expected", [(1, 1), (2, 1), (3, 1), (5, 1), (6, 2), (56, 18)])
def test_default_mtry(p, expected):
    assert default_mtry(p) == expected


def test_forest_fits_identity():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(200, 1))
    model = fit_forest_arrays(X, X[:, 0], seed=1, n_trees=100)
    Xt = rng.uniform(0.05, 0.95, size=(200, 1))
    assert pseudo_r2(Xt[:, 0], model.predict(Xt)) >= 0.95


def test_constant_response_gives_constant_model():
    X = np.random.default_rng(1).uniform(size=(30, 3))
    model = fit_forest_arrays(X, np.full(30, 0.4), seed=0, n_trees=20)
    np.testing.assert_allclose(model.predict(X), 0.4)
    assert np.all(model.importances == 0)


def leaf_members(model, t, X, rows):
    """Route rows through tree t in pure Python; returns {leaf node: [rows]}."""
    s = model.tree_nodes(t)
    feat, thr, left, right = model.feat[s], model.thr[s], model.left[s], model.right[s]
    out = {}
    for r in rows:
        node = 0
        while feat[node] >= 0:
            node = left[node] if X[r, feat[node]] <= thr[node] else right[node]
        out.setdefault(node, []).append(r)
    return out


def test_per_tree_invariants():
    rng = np.random.default_rng(2)
    X = rng.uniform(size=(40, 4))
    y = X[:, 0] ** 2 + 0.1 * rng.normal(size=40)
    model = fit_forest_arrays(X, y, seed=3, n_trees=25)
    for t in range(model.n_trees):
        s = model.tree_nodes(t)
        boot = model.bootstrap_rows[t]
        leaves = leaf_members(model, t, X, boot)
        leaf_rss = 0.0
        for node, rows in leaves.items():
            assert model.value[s][node] == pytest.approx(y[rows].mean(), abs=1e-12)
            assert model.size[s][node] == len(rows)
            leaf_rss += ((y[rows] - y[rows].mean()) ** 2).sum()
        root_rss = ((y[boot] - y[boot].mean()) ** 2).sum()
        # importance is the total RSS decrease of the tree's splits
        assert model.tree_importances[t].sum() == pytest.approx(root_rss - leaf_rss, abs=1e-9)
        splits = model.feat[s] >= 0
        assert np.all(model.size[s][splits] >= model.min_node)
    np.testing.assert_allclose(model.predict(X), model.predict_trees(X).mean(axis=1))


def test_forest_deterministic():
    rng = np.random.default_rng(4)
    X, y = rng.uniform(size=(30, 6)), rng.uniform(size=30)
    a = fit_forest_arrays(X, y, seed=7, n_trees=30)
    b = fit_forest_arrays(X, y, seed=7, n_trees=30)
    np.testing.assert_array_equal(a.predict(X), b.predict(X))
    np.testing.assert_array_equal(a.importances, b.importances)
    c = fit_forest_arrays(X, y, seed=8, n_trees=30)
    assert not np.array_equal(a.predict(X), c.predict(X))


def test_binary_feature_ranked_first():
    hits = 0
    for seed in range(40):
        rng = np.random.default_rng(seed)
        X = rng.uniform(size=(60, 6))
        X[:, 2] = rng.integers(0, 2, 60)
        y = 0.2 + 0.6 * X[:, 2] + rng.normal(0, 0.02, 60)
        model = fit_forest_arrays(X, y, seed=seed, n_trees=100)
        hits += int(np.argmax(model.importances) == 2)
    assert hits / 40 >= 0.95


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_predictions_within_training_range(seed):
    rng = np.random.default_rng(seed)
    X, y = rng.normal(size=(25, 3)), rng.uniform(size=25)
    model = fit_forest_arrays(X, y, seed=seed, n_trees=10)
    pred = model.predict(rng.normal(size=(10, 3)) * 3)
    assert np.all(pred >= y.min() - 1e-12) and np.all(pred <= y.max() + 1e-12)


def test_rfe_returns_all_when_few_features():
    ds = synthetic_dataset(0)
    small = Dataset(ds.X[:, :3], ds.y, ds.feature_names[:3], ds.row_ids)
    result = rfe_select(small, iterations=5, n_trees=20)
    assert result.selected == small.feature_names and result.iterations == 0


def test_rfe_selection_capped_and_deterministic():
    ds = synthetic_dataset(1)
    a = rfe_select(ds, iterations=10, n_trees=60, seed=4)
    b = rfe_select(ds, iterations=10, n_trees=60, seed=4)
    assert 1 <= len(a.selected) <= 5
    assert a.selected == b.selected
    assert set(a.selected) <= set(NAMES)
    assert sum(a.frequency.values()) >= len(a.selected)


def test_rfe_finds_informative_columns():
    result = rfe_select(synthetic_dataset(2), iterations=20, n_trees=100, seed=0)
    assert set(INFORMATIVE) <= set(result.selected)


def test_rfe_single_informative_among_noise():
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        X = rng.uniform(size=(40, 10))
        y = np.clip(0.2 + 0.6 * X[:, 4] + rng.normal(0, 0.05, 40), 0, 1)
        ds = Dataset(X, y, [f"c{i}" for i in range(10)], [f"p{i}" for i in range(40)])
        hits += "c4" in rfe_select(ds, iterations=10, n_trees=30, seed=seed).selected
    assert hits >= 99


def test_rfe_size_follows_out_of_bag_error():
    # the lowest mean out-of-bag error is at size two, so no noise column is padded in
    result = rfe_select(synthetic_dataset(7), iterations=20, n_trees=60, seed=1)
    assert set(result.selected) == set(INFORMATIVE)


def test_rfe_validation():
    with pytest.raises(ConfigurationError):
        rfe_select(synthetic_dataset(0), max_features=0)
    with pytest.raises(ConfigurationError):
        rfe_select(synthetic_dataset(0), iterations=0)


def test_bootstrap_evaluate_report():
    ds = synthetic_dataset(3)
    report = bootstrap_evaluate(ds, INFORMATIVE, iterations=20, n_trees=60, seed=1)
    assert report.iterations == 20
    assert 0 <= report.median <= 1 and 0 <= report.mean <= 1 and report.se >= 0
    assert report.mean > 0.5
    assert report.provenance == ("true", "surrogate")
    assert set(report.importance_medians) == set(INFORMATIVE)
    again = bootstrap_evaluate(ds, INFORMATIVE, iterations=20, n_trees=60, seed=1)
    assert again == report


def test_bootstrap_requires_rows():
    ds = synthetic_dataset(0, rows=9)
    with pytest.raises(SampleTooSmallError):
        bootstrap_evaluate(ds, INFORMATIVE, iterations=2, n_trees=5)
    with pytest.raises(ConfigurationError):
        bootstrap_evaluate(synthetic_dataset(0), (), iterations=2)


def test_formatted():
    report = EvalReport(0.7554, 0.7526, 0.2361, 10, ("a",), ("true",), {"a": 1.0}, 0)
    assert report.formatted() == "0.755 | 0.753 (0.236)"


def test_fit_forest_on_dataset_columns():
    ds = synthetic_dataset(5)
    model = fit_forest(ds, seed=0, n_trees=30, columns=INFORMATIVE)
    assert model.feature_names == INFORMATIVE
    assert set(model.importance_dict()) == set(INFORMATIVE)


def feature_table(problems, kinds=("true", "surrogate"), surrogate="knn", checkpoint=256):
    rng = np.random.default_rng(0)
    rows = []
    for p in problems:
        for kind in kinds:
            rows.append({"problem": p, "surrogate": surrogate, "checkpoint": checkpoint, "fitness": kind,
                         **{n: rng.uniform() for n in FEATURE_NAMES}})
        rows.append({"problem": p, "surrogate": STATIC, "checkpoint": 0, "fitness": "true",
                     **{n: rng.uniform() for n in FEATURE_NAMES}})
    return pd.DataFrame(rows)


def hv_table(problems, surrogate="knn", values=None):
    values = values if values is not None else np.linspace(0.1, 0.9, len(problems))
    return pd.DataFrame([{"problem": p, "surrogate": surrogate, "repeat": r, "final_hv": v + 0.01 * r}
                         for p, v in zip(problems, values) for r in range(3)])


PROBLEMS = [f"p{i:02d}" for i in range(12)]


@pytest.mark.parametrize("mode, count", [("both", 56), ("true_only", 28), ("surrogate_only", 28)])
def test_build_datasets_columns(mode, count):
    ds = build_datasets(feature_table(PROBLEMS), hv_table(PROBLEMS), "knn", mode, 256)
    assert ds.n_features == count and ds.n_rows == 12
    assert ds.row_ids == tuple(PROBLEMS)
    np.testing.assert_allclose(ds.y, np.linspace(0.1, 0.9, 12) + 0.01)


def test_build_static_dataset():
    ds = build_datasets(feature_table(PROBLEMS), hv_table(PROBLEMS), "knn", "both", STATIC)
    assert ds.n_features == 28
    with pytest.raises(ConfigurationError):
        build_datasets(feature_table(PROBLEMS), hv_table(PROBLEMS), "knn", "surrogate_only", STATIC)


def test_build_drops_missing_columns():
    feats = feature_table(PROBLEMS)
    feats.loc[3, "supp_n"] = np.nan
    ds = build_datasets(feats, hv_table(PROBLEMS), "knn", "both", 256)
    assert ds.n_features == 55 and len(ds.dropped) == 1


def test_build_rejects_constant_target():
    with pytest.raises(DegenerateDatasetError):
        build_datasets(feature_table(PROBLEMS), hv_table(PROBLEMS, values=[0.5] * 12), "knn", "both", 256)


def test_build_reports_missing_problems():
    feats = feature_table(PROBLEMS)
    feats = feats[feats["problem"] != "p03"]
    with pytest.raises(JoinError) as info:
        build_datasets(feats, hv_table(PROBLEMS), "knn", "both", 256)
    assert info.value.missing["features"] == ["p03"]


def test_dataset_validation():
    with pytest.raises(DegenerateDatasetError):
        Dataset(np.zeros((2, 1)), [0.5, 1.5], ("a",), ("x", "y"))
    with pytest.raises(ConfigurationError):
        Dataset(np.zeros((2, 2)), [0.5, 0.5], ("a",), ("x", "y"))
    assert Dataset.provenance_of("true_nd_n") == "true"
    assert Dataset.provenance_of("surr_nd_n") == "surrogate"
