from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from fairprice.core.errors import DomainError
from fairprice.types import ModelMatrix


@dataclass(frozen=True)
class OrthogonalizedMatrix:
    """Design columns replaced by their OLS residual against (1, D); betas has shape (2, p)."""
    design: ModelMatrix
    betas: np.ndarray
    p_a: float

    @property
    def b0(self) -> np.ndarray:
        return self.betas[0]

    @property
    def b1(self) -> np.ndarray:
        return self.betas[1]

    def apply(self, mm: ModelMatrix, d: Optional[np.ndarray] = None) -> ModelMatrix:
        """
        Residualize new rows with the training betas. Rows without a known D
        (d is None or NaN) use the training share of group a instead.
        """
        if mm.n_cols != self.betas.shape[1]:
            raise DomainError("design does not match the residualized columns")
        if d is None:
            d = np.full(mm.n_rows, np.nan)
        d = np.asarray(d, dtype=float)
        d = np.where(np.isnan(d), self.p_a, d)
        fitted = self.b0[None, :] + d[:, None] * self.b1[None, :]
        return ModelMatrix(design=mm.design - fitted, column_names=mm.column_names)

    def betas_dict(self) -> Dict[str, Any]:
        return {"b0": self.b0.tolist(), "b1": self.b1.tolist(), "p_a": self.p_a}

    @classmethod
    def from_betas(cls, payload: Dict[str, Any], column_names) -> "OrthogonalizedMatrix":
        betas = np.vstack([np.asarray(payload["b0"], dtype=float), np.asarray(payload["b1"], dtype=float)])
        empty = ModelMatrix(design=np.zeros((0, betas.shape[1])), column_names=tuple(column_names))
        return cls(design=empty, betas=betas, p_a=float(payload["p_a"]))


def orthogonalize(mm: ModelMatrix, d: np.ndarray) -> OrthogonalizedMatrix:
    """Per column: b1 = cov(x, d) / var(d), b0 = mean(x) - b1 * mean(d); residuals stored."""
    d = np.asarray(d, dtype=float)
    if d.shape != (mm.n_rows,):
        raise DomainError("indicator must align with the design rows")
    d_mean = d.mean()
    dc = d - d_mean
    var_d = float(dc @ dc)
    if var_d <= 0.0:
        raise DomainError("the sensitive indicator has zero variance (single group)")
    X = mm.design
    x_mean = X.mean(axis=0)
    b1 = (dc @ (X - x_mean)) / var_d
    b0 = x_mean - b1 * d_mean
    # centred form keeps the residual covariance with d at rounding level
    residual = (X - x_mean) - dc[:, None] * b1[None, :]
    return OrthogonalizedMatrix(
        design=ModelMatrix(design=residual, column_names=mm.column_names),
        betas=np.vstack([b0, b1]),
        p_a=float(d_mean),
    )
