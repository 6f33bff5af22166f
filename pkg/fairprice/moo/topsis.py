"""TOPSIS selection over a decision matrix (alternatives x criteria)."""
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from fairprice.config import settings
from fairprice.core.errors import DomainError, NormalizationError


class Criterion(str, Enum):
    COST = "cost"
    BENEFIT = "benefit"


class TopsisConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    weights: List[float] = list(settings.ensemble.topsis_weights)
    criteria: Optional[List[Criterion]] = None  # None: every criterion is a cost

    @model_validator(mode="after")
    def check(self) -> "TopsisConfig":
        if any(w < 0 for w in self.weights):
            raise ValueError("TOPSIS weights must be non-negative")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError(f"TOPSIS weights must sum to 1, got {sum(self.weights)}")
        if self.criteria is not None and len(self.criteria) != len(self.weights):
            raise ValueError("one criterion kind per weight")
        return self

    def kinds(self) -> List[Criterion]:
        return self.criteria or [Criterion.COST] * len(self.weights)


@dataclass
class TopsisResult:
    closeness: np.ndarray
    ranking: np.ndarray  # row indices, best first
    best: int
    d_plus: np.ndarray
    d_minus: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {
            "best": self.best,
            "ranking": self.ranking.tolist(),
            "closeness": self.closeness.tolist(),
        }


def topsis_select(matrix: Sequence[Sequence[float]], config: Optional[TopsisConfig] = None) -> TopsisResult:
    config = config or TopsisConfig()
    X = np.atleast_2d(np.asarray(matrix, dtype=float))
    n, m = X.shape
    if n == 0:
        raise DomainError("TOPSIS needs at least one alternative")
    if m != len(config.weights):
        raise DomainError(f"decision matrix has {m} criteria but {len(config.weights)} weights")
    if not np.all(np.isfinite(X)):
        raise DomainError("decision matrix must be finite")

    norms = np.sqrt(np.sum(X ** 2, axis=0))
    if np.any(norms == 0):
        zero = [int(j) for j in np.flatnonzero(norms == 0)]
        raise NormalizationError(f"criteria {zero} are all zero and cannot be vector-normalized")
    V = X / norms * np.asarray(config.weights)

    benefit = np.array([k == Criterion.BENEFIT for k in config.kinds()])
    ideal = np.where(benefit, V.max(axis=0), V.min(axis=0))
    anti = np.where(benefit, V.min(axis=0), V.max(axis=0))
    d_plus = np.sqrt(np.sum((V - ideal) ** 2, axis=1))
    d_minus = np.sqrt(np.sum((V - anti) ** 2, axis=1))
    total = d_plus + d_minus
    # an alternative sitting on both the ideal and the anti-ideal point is taken as ideal
    closeness = np.where(total > 0, d_minus / np.where(total > 0, total, 1.0), 1.0)

    ranking = np.lexsort((np.arange(n), -closeness))
    return TopsisResult(
        closeness=closeness,
        ranking=ranking,
        best=int(ranking[0]),
        d_plus=d_plus,
        d_minus=d_minus,
    )
