"""
Small feed-forward networks over a flat float64 weight vector.

The vector holds, layer by layer, the weight matrix (fan_out x fan_in,
row-major) followed by the bias. Hidden layers use ReLU. A two-headed network
shares every layer except the last, which is stored once per head after the
shared layers. Forward passes and gradients run through torch autograd.
"""
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from fairprice.core.errors import DivergenceError, DomainError

logger = logging.getLogger(__name__)

DTYPE = torch.float64
Forward = Callable[[torch.Tensor], Tuple[torch.Tensor, ...]]
LossFn = Callable[[Forward, Sequence[torch.Tensor]], torch.Tensor]


class OutputActivation(str, Enum):
    IDENTITY = "identity"
    SOFTPLUS = "softplus"
    LOGISTIC = "logistic"


def _layer_shapes(layer_sizes: Sequence[int], head_count: int) -> Tuple[List[Tuple[int, int]], List[Tuple[int, int]]]:
    pairs = [(layer_sizes[i], layer_sizes[i + 1]) for i in range(len(layer_sizes) - 1)]
    return pairs[:-1], [pairs[-1]] * head_count


def weight_count(layer_sizes: Sequence[int], head_count: int = 1) -> int:
    shared, heads = _layer_shapes(layer_sizes, head_count)
    return sum((fan_in + 1) * fan_out for fan_in, fan_out in shared + heads)


@dataclass(frozen=True)
class MlpModel:
    layer_sizes: Tuple[int, ...]
    weights: np.ndarray
    output_activation: OutputActivation = OutputActivation.IDENTITY
    head_count: int = 1
    loss_history: Tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise DomainError("layer_sizes needs an input and an output size, all >= 1")
        if self.head_count not in (1, 2):
            raise DomainError("head_count must be 1 or 2")
        expected = weight_count(self.layer_sizes, self.head_count)
        if self.weights.shape != (expected,):
            raise DomainError(f"weight vector must have length {expected}, got {self.weights.shape}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "mlp",
            "version": 1,
            "layer_sizes": list(self.layer_sizes),
            "weights": self.weights.tolist(),
            "output_activation": self.output_activation.value,
            "head_count": self.head_count,
            "loss_history": list(self.loss_history),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "MlpModel":
        return cls(
            layer_sizes=tuple(payload["layer_sizes"]),
            weights=np.asarray(payload["weights"], dtype=float),
            output_activation=OutputActivation(payload["output_activation"]),
            head_count=int(payload["head_count"]),
            loss_history=tuple(payload.get("loss_history", ())),
        )


def init_mlp(
    layer_sizes: Sequence[int],
    seed: int,
    output_activation: OutputActivation = OutputActivation.IDENTITY,
    head_count: int = 1,
) -> MlpModel:
    """He-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    shared, heads = _layer_shapes(layer_sizes, head_count)
    chunks = []
    for fan_in, fan_out in shared + heads:
        bound = np.sqrt(6.0 / fan_in)
        chunks.append(rng.uniform(-bound, bound, size=fan_in * fan_out))
        chunks.append(np.zeros(fan_out))
    return MlpModel(
        layer_sizes=tuple(int(s) for s in layer_sizes),
        weights=np.concatenate(chunks),
        output_activation=OutputActivation(output_activation),
        head_count=head_count,
    )


def _unflatten(theta: torch.Tensor, layer_sizes: Sequence[int], head_count: int):
    shared, heads = _layer_shapes(layer_sizes, head_count)
    params = []
    pos = 0
    for fan_in, fan_out in shared + heads:
        W = theta[pos: pos + fan_in * fan_out].reshape(fan_out, fan_in)
        pos += fan_in * fan_out
        b = theta[pos: pos + fan_out]
        pos += fan_out
        params.append((W, b))
    return params[: len(shared)], params[len(shared):]


def _activate(z: torch.Tensor, kind: OutputActivation) -> torch.Tensor:
    if kind == OutputActivation.SOFTPLUS:
        return torch.nn.functional.softplus(z)
    if kind == OutputActivation.LOGISTIC:
        return torch.sigmoid(z)
    return z


def make_forward(theta: torch.Tensor, m: MlpModel) -> Forward:
    shared, heads = _unflatten(theta, m.layer_sizes, m.head_count)

    def forward(x: torch.Tensor) -> Tuple[torch.Tensor, ...]:
        h = x
        for W, b in shared:
            h = torch.relu(h @ W.T + b)
        return tuple(_activate(h @ W.T + b, m.output_activation) for W, b in heads)

    return forward


def _as_input(m: MlpModel, x: np.ndarray) -> torch.Tensor:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(1, -1) if m.layer_sizes[0] > 1 or x.size == 1 else x.reshape(-1, 1)
    if x.shape[1] != m.layer_sizes[0]:
        raise DomainError(f"network expects {m.layer_sizes[0]} inputs, got {x.shape[1]}")
    return torch.as_tensor(x, dtype=DTYPE)


def _squeeze(out: torch.Tensor) -> np.ndarray:
    arr = out.detach().numpy()
    return arr[:, 0].copy() if arr.shape[1] == 1 else arr.copy()


def mlp_forward(m: MlpModel, x: np.ndarray) -> Union[np.ndarray, Tuple[np.ndarray, ...]]:
    """Outputs per row; two-headed networks return (real, counterfactual)."""
    with torch.no_grad():
        theta = torch.as_tensor(m.weights, dtype=DTYPE)
        outs = make_forward(theta, m)(_as_input(m, x))
    arrays = tuple(_squeeze(o) for o in outs)
    return arrays if m.head_count == 2 else arrays[0]


def mlp_gradient(m: MlpModel, x: np.ndarray, head: int = 0) -> np.ndarray:
    """d(sum of one head's outputs)/d(weights) by backpropagation."""
    theta = torch.tensor(m.weights, dtype=DTYPE, requires_grad=True)
    out = make_forward(theta, m)(_as_input(m, x))[head]
    out.sum().backward()
    return theta.grad.numpy().copy()


@dataclass(frozen=True)
class TrainParams:
    epochs: int = 200
    batch: int = 64
    step_size: float = 0.01
    seed: int = 0
    optimizer: str = "adam"

    def validate(self) -> None:
        if self.epochs < 0 or self.batch < 1:
            raise DomainError("epochs must be >= 0 and batch >= 1")
        if self.step_size < 0:
            raise DomainError("step_size must be >= 0")
        if self.optimizer not in ("adam", "sgd"):
            raise DomainError("optimizer must be 'adam' or 'sgd'")


def mlp_train(
    m: MlpModel,
    data: Sequence[np.ndarray],
    loss_fn: LossFn,
    params: Optional[TrainParams] = None,
) -> MlpModel:
    """
    Mini-batch training. `data` holds row-aligned arrays; `loss_fn(forward,
    batch)` returns a scalar tensor for one batch of those arrays. The full-data
    loss before the first and after every epoch is kept in `loss_history`.
    """
    params = params or TrainParams()
    params.validate()
    tensors = [torch.as_tensor(np.asarray(a, dtype=float), dtype=DTYPE) for a in data]
    n = tensors[0].shape[0]
    if any(t.shape[0] != n for t in tensors):
        raise DomainError("training arrays must have the same number of rows")

    theta = torch.tensor(m.weights, dtype=DTYPE, requires_grad=True)
    if params.optimizer == "adam":
        opt = torch.optim.Adam([theta], lr=params.step_size)
    else:
        opt = torch.optim.SGD([theta], lr=params.step_size)
    gen = torch.Generator().manual_seed(params.seed)

    def full_loss() -> float:
        with torch.no_grad():
            value = float(loss_fn(make_forward(theta, m), tensors))
        if not np.isfinite(value):
            raise DivergenceError(
                f"training loss became non-finite; retry with a smaller step size than {params.step_size}"
            )
        return value

    history = [full_loss()]
    for epoch in range(params.epochs):
        perm = torch.randperm(n, generator=gen)
        for start in range(0, n, params.batch):
            idx = perm[start: start + params.batch]
            opt.zero_grad()
            forward = make_forward(theta, m)
            loss = loss_fn(forward, [t[idx] for t in tensors])
            if not torch.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss in epoch {epoch}; retry with a smaller step size than {params.step_size}"
                )
            loss.backward()
            opt.step()
        history.append(full_loss())

    logger.debug("mlp_train: loss %.6g -> %.6g over %d epochs", history[0], history[-1], params.epochs)
    return replace(m, weights=theta.detach().numpy().copy(), loss_history=tuple(history))


def mse_loss(forward: Forward, batch: Sequence[torch.Tensor]) -> torch.Tensor:
    """Plain squared error for (x, y) data on the first head."""
    x, y = batch[0], batch[1]
    pred = forward(x)[0].reshape(-1)
    return torch.mean((y.reshape(-1) - pred) ** 2)
