import numpy as np
import pandas as pd
import pytest

from fairprice.causalforest.forest import (
    CausalForestParams,
    causal_forest_fit,
    causal_forest_fit_matrix,
    histogram_frame,
    ite_frame,
    ite_summary,
    median_ite,
)
from fairprice.causalforest.tree import fit_causal_tree, leaf_ite
from fairprice.core.errors import DomainError
from fairprice.datakit.dataset import DesignEncoder
from fairprice.datakit.synth import balanced_spec, synth_generate

PARAMS = CausalForestParams(n_trees=20, min_group=5, max_depth=4, seed=4)


@pytest.fixture(scope="module")
def shifted():
    rng = np.random.default_rng(12)
    X = rng.normal(size=(1000, 3))
    d = (rng.uniform(size=1000) < 0.5).astype(float)
    yhat = 100.0 + 5.0 * d + 3.0 * X[:, 0]
    return X, d, yhat


def test_leaf_ite_is_group_mean_gap():
    assert leaf_ite(np.array([3.0, 5.0]), np.array([1.0])) == 3.0
    with pytest.raises(DomainError):
        leaf_ite(np.array([]), np.array([1.0]))


def test_constant_shift_gives_exact_leaves():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(400, 2))
    d = np.tile([1.0, 0.0], 200)
    forest = causal_forest_fit_matrix(X, d, 50.0 + 5.0 * d, PARAMS)
    ites = forest.leaf_table()["leaf_ite"].to_numpy()
    np.testing.assert_allclose(ites, 5.0, atol=1e-9)


def test_median_recovers_shift(shifted):
    X, d, yhat = shifted
    summary = ite_summary(causal_forest_fit_matrix(X, d, yhat, PARAMS))
    assert 4.5 <= summary.median <= 5.5
    assert summary.deciles == sorted(summary.deciles)


def test_forest_is_reproducible(shifted):
    X, d, yhat = shifted
    first = causal_forest_fit_matrix(X, d, yhat, PARAMS).leaf_table()
    second = causal_forest_fit_matrix(X, d, yhat, PARAMS).leaf_table()
    pd.testing.assert_frame_equal(first, second)


def test_trees_are_honest(shifted):
    X, d, yhat = shifted
    forest = causal_forest_fit_matrix(X, d, yhat, PARAMS)
    assert forest.is_honest()
    for tree in forest.fitted_trees:
        assert not set(tree.structure_rows.tolist()) & set(tree.estimation_rows.tolist())


def test_flipping_groups_negates_effects(shifted):
    X, d, yhat = shifted
    forward = causal_forest_fit_matrix(X, d, yhat, PARAMS).leaf_table()
    flipped = causal_forest_fit_matrix(X, 1.0 - d, yhat, PARAMS).leaf_table()
    np.testing.assert_array_equal(flipped["leaf_ite"].to_numpy(), -forward["leaf_ite"].to_numpy())
    np.testing.assert_array_equal(flipped["n_a"].to_numpy(), forward["n_b"].to_numpy())


def test_leaf_groups_meet_minimum(shifted):
    X, d, yhat = shifted
    table = causal_forest_fit_matrix(X, d, yhat, PARAMS).leaf_table()
    assert table["n_a"].min() >= PARAMS.min_group
    assert table["n_b"].min() >= PARAMS.min_group


def test_tree_with_undersized_halves_is_discarded():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(120, 2))
    is_a = np.tile([True, False], 60)
    yhat = 50.0 + 5.0 * is_a
    assert fit_causal_tree(X, is_a, yhat, np.random.default_rng(0), min_group=50, max_depth=3) is None
    tree = fit_causal_tree(X, is_a, yhat, np.random.default_rng(0), min_group=5, max_depth=3)
    assert tree is not None


def test_histogram_covers_every_leaf(shifted):
    X, d, yhat = shifted
    summary = ite_summary(causal_forest_fit_matrix(X, d, yhat, PARAMS), bins=8)
    assert sum(summary.histogram_counts) == summary.leaf_ites.size
    hist = histogram_frame(summary)
    assert len(hist) == 8
    assert hist["bin_lo"].iloc[0] == pytest.approx(summary.leaf_ites.min())
    assert list(ite_frame(summary).columns) == ["leaf_ite", "n_a", "n_b", "tree_id"]
    with pytest.raises(DomainError):
        ite_summary(causal_forest_fit_matrix(X, d, yhat, PARAMS), bins=0)


def test_weighted_median_on_constant_shift():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(300, 2))
    d = np.tile([1.0, 0.0, 0.0], 100)
    forest = causal_forest_fit_matrix(X, d, 10.0 - 2.0 * d, PARAMS)
    assert ite_summary(forest, weighted=True).median == pytest.approx(-2.0)


def test_dataset_forest_uses_unaware_design(small_data):
    preds = 100.0 + 5.0 * small_data.d + 0.05 * small_data.frame["Age"].to_numpy()
    assert 4.5 <= median_ite(small_data, preds, PARAMS) <= 5.5
    with pytest.raises(DomainError):
        causal_forest_fit(small_data, preds, PARAMS, encoder=DesignEncoder.fit(small_data, include_sensitive=True))


def test_input_validation(shifted):
    X, d, yhat = shifted
    with pytest.raises(DomainError):
        causal_forest_fit_matrix(X, d, yhat[:-1], PARAMS)
    with pytest.raises(DomainError):
        causal_forest_fit_matrix(X, d, np.where(d == 1, np.nan, yhat), PARAMS)
    with pytest.raises(DomainError):
        causal_forest_fit_matrix(X[:12], d[:12], yhat[:12], PARAMS)
    with pytest.raises(DomainError):
        CausalForestParams(n_trees=0).validate()


@pytest.mark.slow
def test_shuffled_groups_give_null_median():
    data = synth_generate(balanced_spec(n=5000, tau=5.0), seed=21)
    X = data.frame[["Age", "Bonus"]].to_numpy(dtype=float)
    preds = 80.0 + 0.8 * X[:, 0] + 20.0 * X[:, 1]
    shuffled = np.random.default_rng(22).permutation(data.d)
    summary = ite_summary(causal_forest_fit_matrix(X, shuffled, preds, CausalForestParams(n_trees=50, seed=23)))
    assert abs(summary.median) < 0.05 * preds.std()


@pytest.mark.slow
def test_median_on_balanced_portfolio(balanced_data):
    preds = 80.0 + 5.0 * balanced_data.d + 0.8 * balanced_data.frame["Age"].to_numpy()
    params = CausalForestParams(n_trees=100, seed=8)
    assert 4.5 <= median_ite(balanced_data, preds, params) <= 5.5
