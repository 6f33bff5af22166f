from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from sklearn.ensemble import RandomForestRegressor

from fairprice.config import settings
from fairprice.core.errors import DomainError
from fairprice.types import ModelMatrix


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = settings.forest.n_trees
    mtry: float = settings.forest.mtry
    min_leaf: int = settings.forest.min_leaf
    seed: int = settings.seed

    def validate(self) -> None:
        if self.n_trees < 1:
            raise DomainError("forest needs at least one tree")
        if not 0.0 < self.mtry <= 1.0:
            raise DomainError("mtry is a fraction of columns in (0, 1]")
        if self.min_leaf < 1:
            raise DomainError("min_leaf must be >= 1")


@dataclass(frozen=True)
class ForestModel:
    """Bootstrap CART forest; importances are normalized total variance reduction per column."""
    importances: np.ndarray
    column_names: Tuple[str, ...]
    params: ForestParams
    estimator: Optional[RandomForestRegressor] = None

    def importance_of(self, name: str) -> float:
        return float(self.importances[self.column_names.index(name)])

    def predict(self, mm: ModelMatrix) -> np.ndarray:
        if self.estimator is None:
            raise DomainError("forest was reloaded from JSON without its trees; refit to predict")
        return self.estimator.predict(mm.design)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "forest",
            "version": 1,
            "importances": self.importances.tolist(),
            "column_names": list(self.column_names),
            "params": {
                "n_trees": self.params.n_trees,
                "mtry": self.params.mtry,
                "min_leaf": self.params.min_leaf,
                "seed": self.params.seed,
            },
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ForestModel":
        return cls(
            importances=np.asarray(payload["importances"], dtype=float),
            column_names=tuple(payload["column_names"]),
            params=ForestParams(**payload["params"]),
        )


def forest_fit(mm: ModelMatrix, y: np.ndarray, params: Optional[ForestParams] = None) -> ForestModel:
    params = params or ForestParams()
    params.validate()
    y = np.asarray(y, dtype=float)
    if mm.n_rows < 2 * params.min_leaf:
        raise DomainError(f"need at least 2 * min_leaf = {2 * params.min_leaf} rows, got {mm.n_rows}")
    est = RandomForestRegressor(
        n_estimators=params.n_trees,
        max_features=params.mtry,
        min_samples_leaf=params.min_leaf,
        bootstrap=True,
        random_state=params.seed,
        n_jobs=1,
    )
    est.fit(mm.design, y)
    raw = np.asarray(est.feature_importances_, dtype=float)
    total = raw.sum()
    importances = raw / total if total > 0 else np.full(mm.n_cols, 1.0 / mm.n_cols)
    return ForestModel(
        importances=importances,
        column_names=tuple(mm.column_names),
        params=params,
        estimator=est,
    )
