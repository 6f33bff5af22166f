import numpy as np
import pytest

from fairprice.core.errors import DomainError
from fairprice.predictors.gbt import GbtModel, GbtParams, Loss, gbt_fit, gbt_predict
from fairprice.types import ModelMatrix


def step_data(n=400, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, n)
    y = np.where(x < 0.5, 10.0, 30.0) + rng.normal(0, 0.5, n)
    return ModelMatrix(design=x[:, None], column_names=("x",)), y


def test_squared_loss_learns_a_step():
    mm, y = step_data()
    m = gbt_fit(mm, y, Loss.SQUARED, GbtParams(n_trees=50, max_depth=2, learning_rate=0.3, min_leaf=10))
    grid = ModelMatrix(design=np.array([[0.2], [0.8]]), column_names=("x",))
    assert gbt_predict(m, grid) == pytest.approx([10.0, 30.0], abs=0.5)


def test_training_loss_never_increases():
    mm, y = step_data()
    m = gbt_fit(mm, y, Loss.SQUARED, GbtParams(n_trees=30, max_depth=3, learning_rate=1.0, min_leaf=5))
    history = np.array(m.loss_history)
    assert np.all(np.diff(history) <= 1e-12)


def test_poisson_predictions_are_positive_and_calibrated():
    rng = np.random.default_rng(2)
    x = rng.uniform(0, 1, 1000)
    y = rng.poisson(np.exp(0.5 + x)).astype(float)
    mm = ModelMatrix(design=x[:, None], column_names=("x",))
    m = gbt_fit(mm, y, Loss.POISSON, GbtParams(n_trees=40, max_depth=2, learning_rate=0.1, min_leaf=20))
    pred = gbt_predict(m, mm)
    assert np.all(pred > 0)
    assert pred.mean() == pytest.approx(y.mean(), rel=0.05)


def test_zero_rounds_predict_the_base_score():
    mm, y = step_data()
    m = gbt_fit(mm, y, Loss.GAMMA, GbtParams(n_trees=0))
    assert gbt_predict(m, mm) == pytest.approx(np.full(y.size, y.mean()))


def test_dict_round_trip_keeps_predictions():
    mm, y = step_data()
    m = gbt_fit(mm, y, Loss.SQUARED, GbtParams(n_trees=10, max_depth=2, min_leaf=10))
    again = GbtModel.from_dict(m.to_dict())
    assert np.array_equal(gbt_predict(again, mm), gbt_predict(m, mm))


@pytest.mark.parametrize("params", [
    GbtParams(max_depth=0),
    GbtParams(learning_rate=0.0),
    GbtParams(min_leaf=0),
    GbtParams(lambda_l2=-1.0),
])
def test_invalid_params_are_rejected(params):
    mm, y = step_data()
    with pytest.raises(DomainError):
        gbt_fit(mm, y, Loss.SQUARED, params)


def test_gamma_needs_positive_targets():
    mm, y = step_data()
    y[0] = 0.0
    with pytest.raises(DomainError):
        gbt_fit(mm, y, Loss.GAMMA, GbtParams(n_trees=1))
