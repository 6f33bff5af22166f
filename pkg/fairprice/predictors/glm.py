"""Generalized linear models fitted by iteratively reweighted least squares."""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from fairprice.core.errors import DivergenceError, DomainError, RankError
from fairprice.types import ModelMatrix

logger = logging.getLogger(__name__)

INTERCEPT = "(Intercept)"
MAX_ITER = 100
TOL = 1e-8


class Family(str, Enum):
    POISSON = "Poisson"
    GAMMA = "Gamma"
    GAUSSIAN = "Gaussian"


class Link(str, Enum):
    LOG = "log"
    IDENTITY = "identity"


CANONICAL_LINK = {Family.POISSON: Link.LOG, Family.GAMMA: Link.LOG, Family.GAUSSIAN: Link.IDENTITY}


@dataclass(frozen=True)
class GlmModel:
    family: Family
    link: Link
    coefficients: np.ndarray
    column_names: Tuple[str, ...]
    converged: bool
    iterations: int

    def linear_predictor(self, mm: ModelMatrix, offset: Optional[np.ndarray] = None) -> np.ndarray:
        if mm.n_cols + 1 != self.coefficients.size:
            raise DomainError(
                f"design has {mm.n_cols} columns but the model was fitted on {self.coefficients.size - 1}"
            )
        eta = self.coefficients[0] + mm.design @ self.coefficients[1:]
        if offset is not None:
            eta = eta + offset
        return eta

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "glm",
            "version": 1,
            "family": self.family.value,
            "link": self.link.value,
            "coefficients": self.coefficients.tolist(),
            "column_names": list(self.column_names),
            "converged": self.converged,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "GlmModel":
        return cls(
            family=Family(payload["family"]),
            link=Link(payload["link"]),
            coefficients=np.asarray(payload["coefficients"], dtype=float),
            column_names=tuple(payload["column_names"]),
            converged=bool(payload["converged"]),
            iterations=int(payload["iterations"]),
        )


def _with_intercept(mm: ModelMatrix) -> np.ndarray:
    return np.column_stack([np.ones(mm.n_rows), mm.design])


def _collinear_column(X: np.ndarray, names: Tuple[str, ...]) -> Optional[str]:
    """First column that adds no rank to the columns before it."""
    scale = np.linalg.norm(X, axis=0)
    Xn = X / np.where(scale > 0, scale, 1.0)
    for k in range(X.shape[1]):
        if scale[k] == 0 or np.linalg.matrix_rank(Xn[:, : k + 1]) < k + 1:
            return names[k]
    return None


def _check_targets(y: np.ndarray, w: np.ndarray, family: Family) -> None:
    if not np.all(np.isfinite(y)):
        raise DomainError("targets must be finite")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DomainError("weights must be finite and non-negative")
    if not np.any(w > 0):
        raise DomainError("all weights are zero")
    active = w > 0
    if family == Family.GAMMA and np.any(y[active] <= 0):
        raise DomainError("Gamma targets must be strictly positive")
    if family == Family.POISSON and np.any(y[active] < 0):
        raise DomainError("Poisson targets must be non-negative")


def glm_fit(
    mm: ModelMatrix,
    y: np.ndarray,
    family: Family,
    weights: Optional[np.ndarray] = None,
    offset: Optional[np.ndarray] = None,
    max_iter: int = MAX_ITER,
    tol: float = TOL,
) -> GlmModel:
    """
    IRLS with the intercept prepended. Starts from beta = 0 except
    intercept = link(weighted mean of y), iterates until max|delta beta| < tol
    or max_iter steps. Gamma dispersion is never estimated.
    """
    family = Family(family)
    link = CANONICAL_LINK[family]
    y = np.asarray(y, dtype=float)
    n = mm.n_rows
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    off = np.zeros(n) if offset is None else np.asarray(offset, dtype=float)
    if y.shape != (n,) or w.shape != (n,) or off.shape != (n,):
        raise DomainError("targets, weights and offset must align with the design rows")
    _check_targets(y, w, family)

    X = _with_intercept(mm)
    names = (INTERCEPT,) + tuple(mm.column_names)
    active = w > 0
    bad = _collinear_column(X[active], names)
    if bad is not None:
        raise RankError(bad)

    beta = np.zeros(X.shape[1])
    if link == Link.LOG:
        denom = float(np.sum(w * np.exp(off)))
        level = float(np.sum(w * y)) / denom
        if level <= 0:
            raise DomainError("log-link GLM needs a positive weighted mean target")
        beta[0] = np.log(level)
    else:
        beta[0] = float(np.sum(w * (y - off)) / np.sum(w))

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        eta = X @ beta + off
        if link == Link.LOG:
            mu = np.exp(eta)
            if not np.all(np.isfinite(mu)):
                raise DivergenceError("IRLS linear predictor overflowed; check the design scaling")
            # working weights (dmu/deta)^2 / V(mu) with dmu/deta = mu
            working = w * (mu if family == Family.POISSON else np.ones(n))
            z = eta - off + (y - mu) / mu
        else:
            working = w
            z = y - off
        XtW = X.T * working
        try:
            beta_new = np.linalg.solve(XtW @ X, XtW @ z)
        except np.linalg.LinAlgError:
            raise RankError(_collinear_column(X * np.sqrt(working)[:, None], names) or INTERCEPT)
        if not np.all(np.isfinite(beta_new)):
            raise DivergenceError("IRLS produced non-finite coefficients")
        delta = float(np.max(np.abs(beta_new - beta)))
        beta = beta_new
        if delta < tol:
            converged = True
            break

    if not converged:
        logger.warning("IRLS (%s) stopped after %d iterations without converging", family.value, iterations)
    return GlmModel(
        family=family,
        link=link,
        coefficients=beta,
        column_names=tuple(mm.column_names),
        converged=converged,
        iterations=iterations,
    )


def glm_predict(m: GlmModel, mm: ModelMatrix, offset: Optional[np.ndarray] = None) -> np.ndarray:
    eta = m.linear_predictor(mm, offset)
    return np.exp(eta) if m.link == Link.LOG else eta
