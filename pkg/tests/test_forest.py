import numpy as np
import pytest

from fairprice.core.errors import DomainError
from fairprice.predictors.forest import ForestModel, ForestParams, forest_fit
from fairprice.types import ModelMatrix


def data(seed=0, n=300):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (n, 3))
    y = 10 * X[:, 0] + rng.normal(0, 0.1, n)
    return ModelMatrix(design=X, column_names=("signal", "noise1", "noise2")), y


def test_importances_sum_to_one_and_find_the_signal():
    mm, y = data()
    m = forest_fit(mm, y, ForestParams(n_trees=50, mtry=1.0, min_leaf=5, seed=1))
    assert m.importances.sum() == pytest.approx(1.0)
    assert m.importance_of("signal") > 0.8


def test_fixed_seed_is_reproducible():
    mm, y = data()
    params = ForestParams(n_trees=20, mtry=0.5, min_leaf=5, seed=4)
    assert np.array_equal(forest_fit(mm, y, params).predict(mm), forest_fit(mm, y, params).predict(mm))


def test_reloaded_forest_cannot_predict():
    mm, y = data()
    m = ForestModel.from_dict(forest_fit(mm, y, ForestParams(n_trees=5, seed=1)).to_dict())
    assert m.importances.size == 3
    with pytest.raises(DomainError):
        m.predict(mm)


def test_mtry_must_be_a_fraction():
    mm, y = data()
    with pytest.raises(DomainError):
        forest_fit(mm, y, ForestParams(mtry=1.5))
