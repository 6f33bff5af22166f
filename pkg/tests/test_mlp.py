import numpy as np
import pytest
import torch

from fairprice.core.errors import DivergenceError, DomainError
from fairprice.predictors.mlp import (
    MlpModel,
    OutputActivation,
    TrainParams,
    init_mlp,
    mlp_forward,
    mlp_gradient,
    mlp_train,
    mse_loss,
    weight_count,
)


def test_weight_count_matches_layout():
    assert weight_count([3, 4, 1]) == (3 * 4 + 4) + (4 * 1 + 1)
    assert init_mlp([3, 4, 1], seed=0).weights.size == weight_count([3, 4, 1])


def test_two_heads_share_the_trunk():
    m = init_mlp([2, 5, 1], seed=0, head_count=2)
    assert m.weights.size == (2 * 5 + 5) + 2 * (5 + 1)
    real, cf = mlp_forward(m, np.zeros((3, 2)))
    assert real.shape == cf.shape == (3,)


def test_softplus_output_is_positive():
    m = init_mlp([2, 4, 1], seed=3, output_activation=OutputActivation.SOFTPLUS)
    out = mlp_forward(m, np.random.default_rng(0).normal(size=(50, 2)) * 10)
    assert np.all(out > 0)


def test_gradient_matches_finite_differences():
    m = init_mlp([2, 3, 1], seed=1)
    x = np.array([[0.3, -0.7], [1.2, 0.4]])
    grad = mlp_gradient(m, x)
    eps = 1e-6
    for k in range(m.weights.size):
        w_plus, w_minus = m.weights.copy(), m.weights.copy()
        w_plus[k] += eps
        w_minus[k] -= eps
        up = mlp_forward(MlpModel(m.layer_sizes, w_plus), x).sum()
        down = mlp_forward(MlpModel(m.layer_sizes, w_minus), x).sum()
        assert grad[k] == pytest.approx((up - down) / (2 * eps), abs=1e-6)


@pytest.mark.parametrize("optimizer", ["adam", "sgd"])
def test_training_reduces_the_loss(optimizer):
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, (256, 1))
    y = 2 * x[:, 0] + 1
    m = init_mlp([1, 8, 1], seed=0)
    trained = mlp_train(m, [x, y], mse_loss, TrainParams(epochs=50, batch=32, step_size=0.01, optimizer=optimizer))
    assert trained.loss_history[-1] < 0.5 * trained.loss_history[0]


def test_training_is_deterministic():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, (64, 1))
    y = x[:, 0] ** 2
    params = TrainParams(epochs=5, batch=16, seed=9)
    a = mlp_train(init_mlp([1, 4, 1], seed=2), [x, y], mse_loss, params)
    b = mlp_train(init_mlp([1, 4, 1], seed=2), [x, y], mse_loss, params)
    assert np.array_equal(a.weights, b.weights)


def test_exploding_step_raises_divergence():
    x = np.ones((8, 1)) * 1e150
    y = np.ones(8) * 1e150

    def blowup(forward, batch):
        return torch.mean((forward(batch[0])[0].reshape(-1) - batch[1]) ** 2) * 1e300

    with pytest.raises(DivergenceError):
        mlp_train(init_mlp([1, 2, 1], seed=0), [x, y], blowup, TrainParams(epochs=1))


def test_input_width_is_checked():
    with pytest.raises(DomainError):
        mlp_forward(init_mlp([3, 2, 1], seed=0), np.zeros((4, 2)))
