"""
Second-order gradient-boosted regression trees.

Each round fits a depth-limited tree to per-row gradients g and hessians h of
the loss at the current raw score, with exact greedy splits maximizing

    0.5 * (GL^2 / (HL + lambda) + GR^2 / (HR + lambda) - G^2 / (H + lambda))

and leaf values -G / (H + lambda). Stored trees carry leaf values already
multiplied by their step size, so the raw score is base + offset + sum(trees).
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from fairprice.config import settings
from fairprice.core.errors import DomainError
from fairprice.types import ModelMatrix

logger = logging.getLogger(__name__)

MAX_HALVINGS = 20


class Loss(str, Enum):
    SQUARED = "SquaredError"
    POISSON = "PoissonDeviance"
    GAMMA = "GammaDeviance"

    @property
    def exponentiates(self) -> bool:
        return self != Loss.SQUARED


@dataclass(frozen=True)
class GbtParams:
    n_trees: int = settings.gbt.n_trees
    max_depth: int = settings.gbt.max_depth
    learning_rate: float = settings.gbt.learning_rate
    min_leaf: int = settings.gbt.min_leaf
    lambda_l2: float = settings.gbt.lambda_l2

    def validate(self) -> None:
        if self.n_trees < 0:
            raise DomainError("n_trees must be >= 0")
        if self.max_depth < 1:
            raise DomainError("max_depth must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise DomainError("learning_rate must lie in (0, 1]")
        if self.min_leaf < 1:
            raise DomainError("min_leaf must be >= 1")
        if self.lambda_l2 < 0:
            raise DomainError("lambda_l2 must be >= 0")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "min_leaf": self.min_leaf,
            "lambda_l2": self.lambda_l2,
        }


@dataclass
class TreeNode:
    value: float = 0.0
    feature: int = -1
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def n_leaves(self) -> int:
        return 1 if self.is_leaf else self.left.n_leaves + self.right.n_leaves

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0])
        self._fill(X, np.arange(X.shape[0]), out)
        return out

    def _fill(self, X: np.ndarray, rows: np.ndarray, out: np.ndarray) -> None:
        if self.is_leaf:
            out[rows] = self.value
            return
        go_left = X[rows, self.feature] <= self.threshold
        self.left._fill(X, rows[go_left], out)
        self.right._fill(X, rows[~go_left], out)

    def scaled(self, factor: float) -> "TreeNode":
        if self.is_leaf:
            return TreeNode(value=self.value * factor)
        return TreeNode(
            feature=self.feature,
            threshold=self.threshold,
            left=self.left.scaled(factor),
            right=self.right.scaled(factor),
        )

    def to_dict(self) -> Dict[str, Any]:
        if self.is_leaf:
            return {"value": self.value}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "TreeNode":
        if "value" in payload:
            return cls(value=float(payload["value"]))
        return cls(
            feature=int(payload["feature"]),
            threshold=float(payload["threshold"]),
            left=cls.from_dict(payload["left"]),
            right=cls.from_dict(payload["right"]),
        )


@dataclass(frozen=True)
class GbtModel:
    loss: Loss
    trees: List[TreeNode]
    learning_rate: float
    base_score: float
    column_names: Tuple[str, ...]
    params: GbtParams = field(default_factory=GbtParams)
    loss_history: Tuple[float, ...] = ()

    @property
    def base_raw(self) -> float:
        return float(np.log(self.base_score)) if self.loss.exponentiates else self.base_score

    def raw_score(self, mm: ModelMatrix, offset: Optional[np.ndarray] = None) -> np.ndarray:
        if mm.n_cols != len(self.column_names):
            raise DomainError(
                f"design has {mm.n_cols} columns but the model was fitted on {len(self.column_names)}"
            )
        raw = np.full(mm.n_rows, self.base_raw)
        if offset is not None:
            raw = raw + offset
        for tree in self.trees:
            raw += tree.predict(mm.design)
        return raw

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "gbt",
            "version": 1,
            "loss": self.loss.value,
            "learning_rate": self.learning_rate,
            "base_score": self.base_score,
            "column_names": list(self.column_names),
            "params": self.params.to_dict(),
            "loss_history": list(self.loss_history),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "GbtModel":
        return cls(
            loss=Loss(payload["loss"]),
            trees=[TreeNode.from_dict(t) for t in payload["trees"]],
            learning_rate=float(payload["learning_rate"]),
            base_score=float(payload["base_score"]),
            column_names=tuple(payload["column_names"]),
            params=GbtParams(**payload["params"]),
            loss_history=tuple(payload.get("loss_history", ())),
        )


def _gradients(loss: Loss, y: np.ndarray, raw: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    if loss == Loss.SQUARED:
        return raw - y, np.ones_like(y)
    mu = np.exp(raw)
    if loss == Loss.POISSON:
        return mu - y, mu
    ratio = y / mu
    return 1.0 - ratio, ratio


def _loss_value(loss: Loss, y: np.ndarray, raw: np.ndarray, w: np.ndarray) -> float:
    """Weighted mean loss up to terms constant in the raw score."""
    if loss == Loss.SQUARED:
        per_row = 0.5 * (y - raw) ** 2
    elif loss == Loss.POISSON:
        per_row = np.exp(raw) - y * raw
    else:
        per_row = y * np.exp(-raw) + raw
    return float(np.sum(w * per_row) / np.sum(w))


def _base_score(loss: Loss, y: np.ndarray, w: np.ndarray, off: np.ndarray) -> float:
    """Loss-minimizing constant on the prediction scale."""
    if loss == Loss.SQUARED:
        return float(np.sum(w * (y - off)) / np.sum(w))
    if loss == Loss.POISSON:
        return float(np.sum(w * y) / np.sum(w * np.exp(off)))
    return float(np.sum(w * y * np.exp(-off)) / np.sum(w))


class _TreeBuilder:
    def __init__(self, X: np.ndarray, g: np.ndarray, h: np.ndarray, params: GbtParams):
        self.X = X
        self.g = g
        self.h = h
        self.params = params
        self.lam = params.lambda_l2

    def leaf(self, rows: np.ndarray) -> TreeNode:
        G = self.g[rows].sum()
        H = self.h[rows].sum()
        denom = H + self.lam
        return TreeNode(value=float(-G / denom) if denom > 0 else 0.0)

    def _score(self, G: np.ndarray, H: np.ndarray) -> np.ndarray:
        denom = H + self.lam
        return np.divide(G ** 2, denom, out=np.zeros_like(G, dtype=float), where=denom > 0)

    def best_split(self, rows: np.ndarray) -> Optional[Tuple[int, float, np.ndarray]]:
        n = rows.size
        min_leaf = self.params.min_leaf
        if n < 2 * min_leaf:
            return None
        G = self.g[rows].sum()
        H = self.h[rows].sum()
        parent = self._score(np.array([G]), np.array([H]))[0]
        best_gain, best = 1e-12, None
        for f in range(self.X.shape[1]):
            order = np.argsort(self.X[rows, f], kind="stable")
            xs = self.X[rows[order], f]
            GL = np.cumsum(self.g[rows[order]])[:-1]
            HL = np.cumsum(self.h[rows[order]])[:-1]
            # candidate k = size of the left child, positions 1..n-1
            k = np.arange(1, n)
            valid = (k >= min_leaf) & (n - k >= min_leaf) & (xs[:-1] < xs[1:])
            if not valid.any():
                continue
            gain = 0.5 * (self._score(GL, HL) + self._score(G - GL, H - HL) - parent)
            gain = np.where(valid, gain, -np.inf)
            pos = int(np.argmax(gain))
            if gain[pos] > best_gain:
                lo, hi = xs[pos], xs[pos + 1]
                mid = 0.5 * (lo + hi)
                threshold = mid if mid < hi else lo
                best_gain = float(gain[pos])
                best = (f, float(threshold), rows[order[: pos + 1]])
        return best

    def build(self, rows: np.ndarray, depth: int = 0) -> TreeNode:
        if depth >= self.params.max_depth:
            return self.leaf(rows)
        split = self.best_split(rows)
        if split is None:
            return self.leaf(rows)
        feature, threshold, _ = split
        go_left = self.X[rows, feature] <= threshold
        return TreeNode(
            feature=feature,
            threshold=threshold,
            left=self.build(rows[go_left], depth + 1),
            right=self.build(rows[~go_left], depth + 1),
        )


def _check_target(loss: Loss, y: np.ndarray) -> None:
    if not np.all(np.isfinite(y)):
        raise DomainError("targets must be finite")
    if loss == Loss.POISSON and (np.any(y < 0) or y.sum() <= 0):
        raise DomainError("Poisson deviance needs non-negative targets with a positive total")
    if loss == Loss.GAMMA and np.any(y <= 0):
        raise DomainError("Gamma deviance needs strictly positive targets")


def gbt_fit(
    mm: ModelMatrix,
    y: np.ndarray,
    loss: Loss = Loss.SQUARED,
    params: Optional[GbtParams] = None,
    weights: Optional[np.ndarray] = None,
    offset: Optional[np.ndarray] = None,
) -> GbtModel:
    """
    Boosts `params.n_trees` rounds. A round whose full step would raise the
    training loss is retried with halved step sizes and dropped if none helps,
    so the recorded training loss never increases.
    """
    params = params or GbtParams()
    params.validate()
    loss = Loss(loss)
    y = np.asarray(y, dtype=float)
    n = mm.n_rows
    if n < 2 * params.min_leaf:
        raise DomainError(f"need at least 2 * min_leaf = {2 * params.min_leaf} rows, got {n}")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    off = np.zeros(n) if offset is None else np.asarray(offset, dtype=float)
    _check_target(loss, y)

    base = _base_score(loss, y, w, off)
    raw = np.full(n, np.log(base) if loss.exponentiates else base) + off
    current = _loss_value(loss, y, raw, w)
    history = [current]
    trees: List[TreeNode] = []
    X = mm.design

    for _ in tqdm(range(params.n_trees), desc="boosting", disable=not settings.progress, leave=False):
        g, h = _gradients(loss, y, raw)
        tree = _TreeBuilder(X, g * w, h * w, params).build(np.arange(n))
        update = tree.predict(X)
        step = params.learning_rate
        for _ in range(MAX_HALVINGS):
            trial = _loss_value(loss, y, raw + step * update, w)
            if trial <= current:
                break
            step *= 0.5
        else:
            logger.debug("boosting round skipped: no step reduced the training loss")
            history.append(current)
            continue
        trees.append(tree.scaled(step))
        raw = raw + step * update
        current = trial
        history.append(current)

    return GbtModel(
        loss=loss,
        trees=trees,
        learning_rate=params.learning_rate,
        base_score=base,
        column_names=tuple(mm.column_names),
        params=params,
        loss_history=tuple(history),
    )


def gbt_predict(m: GbtModel, mm: ModelMatrix, offset: Optional[np.ndarray] = None) -> np.ndarray:
    raw = m.raw_score(mm, offset)
    return np.exp(raw) if m.loss.exponentiates else raw
