import json

import numpy as np
import pandas as pd
import pytest

from fairprice.core.errors import DomainError
from fairprice.fairmodels.base import load_fair_model
from fairprice.fairmodels.mnn import MnnParams, fit_mnn, mnn_loss, select_lambda, tune_lambda

FAST = MnnParams(hidden=(8,), epochs=5, batch=64, step_size=0.01, seed=3)


@pytest.fixture(scope="module")
def net(small_data):
    return fit_mnn(small_data, 1.0, FAST)


def test_loss_decomposition():
    loss = mnn_loss(np.array([1.0, 2.0]), np.array([1.0, 4.0]), np.array([2.0, 4.0]), lam=3.0)
    assert loss.accuracy == pytest.approx(2.0)
    assert loss.fairness == pytest.approx(0.5)
    assert loss.total == pytest.approx(3.5)


def test_negative_lambda_rejected(small_data):
    with pytest.raises(DomainError):
        mnn_loss(np.ones(2), np.ones(2), np.ones(2), lam=-1.0)
    with pytest.raises(DomainError):
        fit_mnn(small_data, -0.1, FAST)


def test_prediction_marginalizes_sensitive_value(net, small_data):
    np.testing.assert_array_equal(net.predict(small_data), net.predict(small_data.flip_sensitive()))
    assert np.all(net.predict(small_data) > 0)


def test_heads_swap_when_groups_flip(net, small_data):
    real, cf = net.heads(small_data)
    real_flipped, cf_flipped = net.heads(small_data.flip_sensitive())
    np.testing.assert_allclose(real_flipped, cf)
    np.testing.assert_allclose(cf_flipped, real)


def test_document_reloads(net, small_data):
    reloaded = load_fair_model(json.loads(json.dumps(net.to_dict())))
    np.testing.assert_allclose(reloaded.predict(small_data), net.predict(small_data), rtol=1e-12)
    assert reloaded.lam == 1.0


def test_select_lambda_prefers_smallest_within_slack():
    table = pd.DataFrame({
        "lambda": [0.0, 1.0, 10.0, 100.0],
        "val_loss": [1.00, 1.02, 1.04, 1.50],
        "disparity": [0.50, 0.105, 0.10, 0.01],
    })
    table.loc[3, "disparity"] = 0.10
    assert select_lambda(table) == 1.0
    table.loc[1, "disparity"] = 0.2
    assert select_lambda(table) == 10.0


def test_select_lambda_falls_back_to_normalized_sum():
    table = pd.DataFrame({
        "lambda": [0.0, 1.0, 10.0],
        "val_loss": [1.0, 1.2, 2.0],
        "disparity": [1.0, 0.3, 0.0],
    })
    # normalized sums: 1.0, 0.2 + 0.3, 1.0
    assert select_lambda(table) == 1.0


def test_tune_lambda_is_deterministic(small_data):
    params = MnnParams(hidden=(4,), epochs=2, batch=64, seed=5)
    first = tune_lambda(small_data, [0.0, 10.0], folds=2, seed=5, params=params)
    second = tune_lambda(small_data, [10.0, 0.0], folds=2, seed=5, params=params)
    pd.testing.assert_frame_equal(first.table, second.table)
    assert first.best == second.best
    assert list(first.table["lambda"]) == [0.0, 10.0]


def test_tune_lambda_rejects_bad_grid(small_data):
    with pytest.raises(DomainError):
        tune_lambda(small_data, [])
    with pytest.raises(DomainError):
        tune_lambda(small_data, [-1.0, 1.0])


@pytest.mark.slow
def test_penalty_shrinks_counterfactual_gap(confounded_data):
    params = MnnParams(hidden=(8,), epochs=40, batch=128, seed=9)
    curve = tune_lambda(confounded_data, [0.0, 1.0, 10.0, 100.0], folds=5, seed=9, params=params).table
    disparity = curve["disparity"].to_numpy()
    val_loss = curve["val_loss"].to_numpy()
    assert disparity[-1] < 0.1 * disparity[0]
    assert val_loss[-1] < 1.5 * val_loss[0]
    assert np.all(np.diff(disparity) <= 0.02 * disparity[0])
