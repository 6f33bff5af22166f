"""
Two-headed counterfactual network (MNN) and its lambda search.

Inputs are the standardized non-protected design plus the group-a indicator;
the counterfactual input x' is x with that indicator flipped. Training
minimizes mean (y - f_real(x))^2 + lambda * mean (f_real(x) - f_cf(x'))^2 on
targets scaled by their training mean. The deployed premium averages the real
head over the training distribution of D, so it never depends on a row's D.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import torch
from sklearn.model_selection import StratifiedKFold

from fairprice.config import settings
from fairprice.core.errors import DomainError
from fairprice.datakit.dataset import Dataset, DesignEncoder, FrameLike
from fairprice.fairmodels.base import FairModel, FairModelKind, frame_of, register
from fairprice.fairmodels.scm import ScmAdjustment
from fairprice.predictors.mlp import (
    MlpModel,
    OutputActivation,
    TrainParams,
    init_mlp,
    mlp_forward,
    mlp_train,
)

logger = logging.getLogger(__name__)

LAMBDA_LOSS_SLACK = 0.05
LAMBDA_DISPARITY_SLACK = 0.10


@dataclass(frozen=True)
class MnnLoss:
    total: float
    accuracy: float
    fairness: float

    def to_dict(self) -> Dict[str, float]:
        return {"total": self.total, "accuracy": self.accuracy, "fairness": self.fairness}


def mnn_loss(y: np.ndarray, f_real: np.ndarray, f_cf: np.ndarray, lam: float) -> MnnLoss:
    if lam < 0:
        raise DomainError("lambda must be >= 0")
    y, f_real, f_cf = (np.asarray(a, dtype=float) for a in (y, f_real, f_cf))
    accuracy = float(np.mean((y - f_real) ** 2))
    fairness = float(np.mean((f_real - f_cf) ** 2))
    return MnnLoss(total=accuracy + lam * fairness, accuracy=accuracy, fairness=fairness)


@dataclass(frozen=True)
class MnnParams:
    hidden: Tuple[int, ...] = (16, 8)
    epochs: int = 100
    batch: int = 128
    step_size: float = 0.01
    seed: int = settings.seed
    optimizer: str = "adam"

    def train_params(self) -> TrainParams:
        return TrainParams(
            epochs=self.epochs, batch=self.batch, step_size=self.step_size,
            seed=self.seed, optimizer=self.optimizer,
        )


@register(FairModelKind.MNN)
class CounterfactualNetModel(FairModel):

    def __init__(self, encoder: DesignEncoder, mean: np.ndarray, scale: np.ndarray, mlp: MlpModel,
                 y_scale: float, p_a: float, lam: float, sensitive: str, a_level: str,
                 loss: Optional[MnnLoss] = None):
        super().__init__(None)
        self.encoder = encoder
        self.mean = mean
        self.scale = scale
        self.mlp = mlp
        self.y_scale = y_scale
        self.p_a = p_a
        self.lam = lam
        self.sensitive = sensitive
        self.a_level = a_level
        self.loss = loss

    def standardized(self, frame: pd.DataFrame) -> np.ndarray:
        return (self.encoder.transform(frame).design - self.mean) / self.scale

    def _real_head(self, Z: np.ndarray, d: np.ndarray) -> np.ndarray:
        real, _ = mlp_forward(self.mlp, np.column_stack([Z, d]))
        return real * self.y_scale

    def heads(self, data: FrameLike) -> Tuple[np.ndarray, np.ndarray]:
        """(f_real(x), f_cf(x')) in premium units, using each row's recorded D."""
        frame = frame_of(data)
        Z = self.standardized(frame)
        d = (frame[self.sensitive].astype(str).to_numpy() == self.a_level).astype(float)
        real, _ = mlp_forward(self.mlp, np.column_stack([Z, d]))
        _, cf = mlp_forward(self.mlp, np.column_stack([Z, 1.0 - d]))
        return real * self.y_scale, cf * self.y_scale

    def predict(self, data: FrameLike) -> np.ndarray:
        Z = self.standardized(frame_of(data))
        ones = np.ones(Z.shape[0])
        f_a = self._real_head(Z, ones)
        f_b = self._real_head(Z, 0.0 * ones)
        return self.p_a * f_a + (1.0 - self.p_a) * f_b

    def payload(self) -> Dict[str, Any]:
        return {
            "encoder": self.encoder.to_dict(),
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "mlp": self.mlp.to_dict(),
            "y_scale": self.y_scale,
            "p_a": self.p_a,
            "lambda": self.lam,
            "sensitive": self.sensitive,
            "a_level": self.a_level,
            "loss": self.loss.to_dict() if self.loss else None,
        }

    @classmethod
    def from_payload(cls, payload, exposure_column):
        loss = payload.get("loss")
        return cls(
            DesignEncoder.from_dict(payload["encoder"]),
            np.asarray(payload["mean"], dtype=float),
            np.asarray(payload["scale"], dtype=float),
            MlpModel.from_dict(payload["mlp"]),
            float(payload["y_scale"]),
            float(payload["p_a"]),
            float(payload["lambda"]),
            payload["sensitive"],
            payload["a_level"],
            MnnLoss(**loss) if loss else None,
        )


def _composite_loss(lam: float):
    def loss_fn(forward, batch: Sequence[torch.Tensor]) -> torch.Tensor:
        x, x_cf, y = batch
        real = forward(x)[0].reshape(-1)
        cf = forward(x_cf)[1].reshape(-1)
        accuracy = torch.mean((y - real) ** 2)
        if lam == 0:
            return accuracy
        return accuracy + lam * torch.mean((real - cf) ** 2)
    return loss_fn


def fit_mnn(
    data: Dataset,
    lam: float,
    params: Optional[MnnParams] = None,
    counterfactual: Optional[ScmAdjustment] = None,
) -> CounterfactualNetModel:
    """
    `counterfactual` (the synthetic-control pairing of the same rows) only feeds
    a diagnostic: the mean gap between f_cf and Y_counterfactual is logged.
    """
    if lam < 0:
        raise DomainError("lambda must be >= 0")
    params = params or MnnParams()
    encoder = DesignEncoder.fit(data)
    X = encoder.transform(data).design
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    Z = (X - mean) / scale
    d = data.d
    y_scale = float(data.y.mean())
    if y_scale <= 0:
        raise DomainError("MNN needs a positive mean target")
    x_real = np.column_stack([Z, d])
    x_cf = np.column_stack([Z, 1.0 - d])
    y = data.y / y_scale

    net = init_mlp(
        [x_real.shape[1], *params.hidden, 1],
        seed=params.seed,
        output_activation=OutputActivation.SOFTPLUS,
        head_count=2,
    )
    net = mlp_train(net, [x_real, x_cf, y], _composite_loss(lam), params.train_params())
    real, _ = mlp_forward(net, x_real)
    _, cf = mlp_forward(net, x_cf)
    decomposition = mnn_loss(y, real, cf, lam)
    if counterfactual is not None:
        gap = float(np.mean(np.abs(cf * y_scale - counterfactual.y_counterfactual)))
        logger.info("MNN: mean |f_cf - Y_counterfactual| = %.4g", gap)
    logger.info("MNN lambda=%g: loss %.4g (accuracy %.4g, fairness %.4g)",
                lam, decomposition.total, decomposition.accuracy, decomposition.fairness)
    return CounterfactualNetModel(
        encoder, mean, scale, net, y_scale, data.proportions[0], float(lam),
        data.schema.sensitive, data.levels[0], loss=decomposition,
    )


@dataclass
class LambdaTuning:
    best: float
    table: pd.DataFrame = field(repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {"best": self.best, "table": self.table.to_dict(orient="records")}


def select_lambda(table: pd.DataFrame) -> float:
    """
    Smallest lambda whose validation loss is within 5% of the minimum and whose
    disparity is within 10% of the minimum disparity; otherwise the lambda
    minimizing the sum of min-max normalized loss and disparity.
    """
    loss = table["val_loss"].to_numpy()
    disp = table["disparity"].to_numpy()
    lams = table["lambda"].to_numpy()
    ok = (loss <= loss.min() * (1 + LAMBDA_LOSS_SLACK)) & (disp <= disp.min() * (1 + LAMBDA_DISPARITY_SLACK))
    if ok.any():
        return float(lams[ok].min())

    def norm(v: np.ndarray) -> np.ndarray:
        span = v.max() - v.min()
        return (v - v.min()) / span if span > 0 else np.zeros_like(v)

    score = norm(loss) + norm(disp)
    best = np.flatnonzero(score == score.min())
    return float(lams[best].min())


def tune_lambda(
    data: Dataset,
    grid: Sequence[float],
    folds: int = 5,
    seed: Optional[int] = None,
    params: Optional[MnnParams] = None,
) -> LambdaTuning:
    """Stratified (by D) k-fold search; returns lambda* and the per-lambda curve."""
    grid = sorted(float(g) for g in grid)
    if not grid:
        raise DomainError("lambda grid is empty")
    if grid[0] < 0:
        raise DomainError("lambda values must be >= 0")
    seed = settings.seed if seed is None else seed
    params = params or MnnParams(seed=seed)
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    splits = list(splitter.split(np.zeros(data.n), data.d))

    rows: List[Dict[str, float]] = []
    for lam in grid:
        losses, disparities = [], []
        for fold, (train_idx, val_idx) in enumerate(splits):
            train, val = data.subset(train_idx), data.subset(val_idx)
            fold_params = MnnParams(
                hidden=params.hidden, epochs=params.epochs, batch=params.batch,
                step_size=params.step_size, seed=params.seed + fold, optimizer=params.optimizer,
            )
            model = fit_mnn(train, lam, fold_params)
            real, cf = model.heads(val)
            losses.append(float(np.mean((val.y - real) ** 2)))
            disparities.append(float(np.mean(np.abs(real - cf))))
        rows.append({"lambda": lam, "val_loss": float(np.mean(losses)), "disparity": float(np.mean(disparities))})
        logger.info("lambda=%g: validation MSE %.4g, disparity %.4g", lam, rows[-1]["val_loss"], rows[-1]["disparity"])

    table = pd.DataFrame(rows, columns=["lambda", "val_loss", "disparity"])
    return LambdaTuning(best=select_lambda(table), table=table)
