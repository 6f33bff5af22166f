from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import List, Dict, Any, Optional, Tuple

import numpy as np


class FeatureKind(str, Enum):
    NUMERIC = "Numeric"
    CATEGORICAL = "Categorical"


@dataclass(frozen=True)
class ModelMatrix:
    """Numeric design matrix; categoricals one-hot encoded with the reference level dropped."""
    design: np.ndarray
    column_names: Tuple[str, ...]

    def __post_init__(self):
        if self.design.ndim != 2:
            raise ValueError(f"design must be 2-D, got shape {self.design.shape}")
        if self.design.shape[1] != len(self.column_names):
            raise ValueError("column_names must label every design column")

    @property
    def n_rows(self) -> int:
        return self.design.shape[0]

    @property
    def n_cols(self) -> int:
        return self.design.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.design[:, self.column_names.index(name)]


@dataclass(frozen=True)
class Targets:
    amount: np.ndarray
    count: Optional[np.ndarray] = None
    exposure: Optional[np.ndarray] = None

    def offset(self) -> Optional[np.ndarray]:
        if self.exposure is None:
            return None
        return np.log(self.exposure)


@dataclass
class IteDistribution:
    leaf_ites: np.ndarray
    n_a: np.ndarray
    n_b: np.ndarray
    tree_ids: np.ndarray
    median: float
    deciles: List[float]
    histogram_counts: List[int]
    histogram_edges: List[float]

    @property
    def iqr(self) -> float:
        from fairprice.utils.quantiles import quantile
        return quantile(self.leaf_ites, 0.75) - quantile(self.leaf_ites, 0.25)

    def summary(self) -> Dict[str, Any]:
        return {
            "n_leaves": int(self.leaf_ites.size),
            "median": self.median,
            "deciles": self.deciles,
            "iqr": self.iqr,
            "histogram": {"counts": self.histogram_counts, "edges": self.histogram_edges},
        }


@dataclass(frozen=True)
class ObjectiveVector:
    """(rmse, |dir-1|, lipschitz_q95, |median_ite|), all minimized."""
    rmse: float
    dir_gap: float
    lipschitz: float
    ite_gap: float

    def as_array(self) -> np.ndarray:
        return np.array([self.rmse, self.dir_gap, self.lipschitz, self.ite_gap], dtype=float)

    NAMES = ("rmse", "dir_gap", "lipschitz_q95", "median_ite_gap")


@dataclass
class FairnessReport:
    model: str
    split: str
    rmse: float
    gini: float
    dir: float
    lipschitz_q95: float
    median_ite: float
    ite_distribution: Optional[IteDistribution] = field(default=None, repr=False)

    def __post_init__(self):
        if self.rmse < 0:
            raise ValueError("rmse must be non-negative")
        if not self.dir > 0:
            raise ValueError("dir must be positive")
        if self.lipschitz_q95 < 0:
            raise ValueError("lipschitz_q95 must be non-negative")

    def to_dict(self) -> Dict[str, Any]:
        out = {k: v for k, v in asdict(self).items() if k != "ite_distribution"}
        if self.ite_distribution is not None:
            out["ite_summary"] = self.ite_distribution.summary()
        return out
