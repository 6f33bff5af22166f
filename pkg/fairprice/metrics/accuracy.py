import numpy as np
from scipy.stats import rankdata

from fairprice.core.errors import DomainError, UndefinedMetricError


def _paired(y, yhat):
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.size != yhat.size:
        raise DomainError(f"y and yhat differ in length ({y.size} vs {yhat.size})")
    if y.size == 0:
        raise DomainError("empty input")
    return y, yhat


def rmse(y, yhat) -> float:
    y, yhat = _paired(y, yhat)
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


def _lorenz_term(y: np.ndarray, score: np.ndarray) -> float:
    # ordinal ranks, lowest first; equal scores ordered by row index
    r = rankdata(score, method="ordinal")
    return float(np.sum(y * r) / np.sum(y) - (y.size + 1) / 2.0)


def normalized_gini(y, yhat) -> float:
    """
    Rank-based Gini of the predictions normalized by the Gini of the outcomes
    themselves, so a perfect ordering scores 1 and a reversed one -1.
    """
    y, yhat = _paired(y, yhat)
    if y.size < 2:
        raise DomainError("normalized Gini needs at least 2 rows")
    if np.sum(y) == 0:
        raise UndefinedMetricError("normalized Gini is undefined when the outcomes sum to 0")
    denom = _lorenz_term(y, y)
    if denom == 0:
        raise UndefinedMetricError("normalized Gini is undefined for constant outcomes")
    return _lorenz_term(y, yhat) / denom
