"""
Synthetic-control counterfactual claims.

Each row is approximated by a simplex-weighted combination of its k
Gower-nearest rows from the other sensitive group; the weighted donor claims
give Y_counterfactual and the adjusted target is (Y + Y_counterfactual) / 2.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from fairprice.config import settings
from fairprice.core.errors import DomainError
from fairprice.datakit.dataset import Dataset, DesignEncoder
from fairprice.datakit.gower import dataset_space
from fairprice.predictors.forest import ForestModel
from fairprice.utils.monitor import get_optimal_workers

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScmSolution:
    weights: np.ndarray
    objective: float  # sqrt((x0 - X1 w)' V (x0 - X1 w))
    iterations: int


def scm_weights(
    x0: np.ndarray,
    donors: np.ndarray,
    v: np.ndarray,
    max_iter: Optional[int] = None,
    tol: Optional[float] = None,
) -> ScmSolution:
    """
    min_w ||V^1/2 (x0 - donors' w)|| subject to w >= 0, sum(w) = 1.

    `donors` is (k, p), one donor per row. Pairwise Frank-Wolfe with exact line
    search, started at the best single donor; stops when the duality gap of the
    half squared objective falls below `tol`.
    """
    max_iter = settings.scm.max_iter if max_iter is None else max_iter
    tol = settings.scm.tol if tol is None else tol
    donors = np.atleast_2d(np.asarray(donors, dtype=float))
    x0 = np.asarray(x0, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if donors.shape[0] == 0:
        raise DomainError("donor pool is empty")
    if donors.shape[1] != x0.size or v.size != x0.size:
        raise DomainError("donors, target row and V must share the feature dimension")
    if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-9:
        raise DomainError("V must be non-negative and sum to 1")

    sqrt_v = np.sqrt(v)
    X = (donors * sqrt_v).T  # (p, k)
    y = x0 * sqrt_v
    k = X.shape[1]

    errs = np.sum((X - y[:, None]) ** 2, axis=0)
    w = np.zeros(k)
    w[int(np.argmin(errs))] = 1.0
    Xw = X @ w
    it = 0
    for it in range(1, max_iter + 1):
        r = Xw - y
        g = X.T @ r
        s = int(np.argmin(g))
        gap = float(g @ w - g[s])
        if gap < tol:
            break
        active = np.flatnonzero(w > 0)
        away = int(active[np.argmax(g[active])])
        d_x = X[:, s] - X[:, away]
        den = float(d_x @ d_x)
        num = float(d_x @ r)
        if den > 0 and num < 0 and s != away:
            gamma = min(-num / den, w[away])
            w[s] += gamma
            w[away] -= gamma
            if w[away] <= 0:
                w[away] = 0.0
            Xw = Xw + gamma * d_x
        else:
            # plain Frank-Wolfe step toward vertex s
            d_x = X[:, s] - Xw
            den = float(d_x @ d_x)
            gamma = 0.0 if den <= 0 else min(max(-float(d_x @ r) / den, 0.0), 1.0)
            if gamma <= 0.0:
                break
            w = (1.0 - gamma) * w
            w[s] += gamma
            Xw = Xw + gamma * d_x

    w = np.maximum(w, 0.0)
    w /= w.sum()
    resid = y - X @ w
    return ScmSolution(weights=w, objective=float(np.sqrt(resid @ resid)), iterations=it)


@dataclass(frozen=True)
class ScmAdjustment:
    y: np.ndarray
    y_counterfactual: np.ndarray
    y_adjusted: np.ndarray
    donors: List[np.ndarray]
    weights: List[np.ndarray]
    objective: np.ndarray
    v: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "row": np.arange(self.y.size),
            "y": self.y,
            "y_counterfactual": self.y_counterfactual,
            "y_adjusted": self.y_adjusted,
            "objective": self.objective,
            "n_donors": [int(np.count_nonzero(w)) for w in self.weights],
        })

    def summary(self) -> Dict[str, Any]:
        return {
            "n_rows": int(self.y.size),
            "mean_objective": float(self.objective.mean()),
            "max_objective": float(self.objective.max()),
            "v": self.v.tolist(),
        }


def scaled_design(data: Dataset, encoder: DesignEncoder) -> np.ndarray:
    """Design with numeric columns divided by their training range."""
    mm = encoder.transform(data)
    X = mm.design.copy()
    for c, name in enumerate(mm.column_names):
        if name in data.numeric_ranges:
            lo, hi = data.numeric_ranges[name]
            X[:, c] = X[:, c] / (hi - lo) if hi > lo else 0.0
    return X


def donor_pools(data: Dataset, k: int) -> List[np.ndarray]:
    """The k Gower-nearest opposite-group rows of every row (ties to the smaller index)."""
    space = dataset_space(data)
    d = data.d
    groups = {1.0: np.flatnonzero(d == 1.0), 0.0: np.flatnonzero(d == 0.0)}
    pools: List[Optional[np.ndarray]] = [None] * data.n
    block = settings.distance_block_rows
    for label, rows in groups.items():
        others = groups[1.0 - label]
        if others.size == 0:
            raise DomainError("a sensitive group has no rows to draw donors from")
        kk = min(k, others.size)
        other_space = space.take(others)
        for start in range(0, rows.size, block):
            chunk = rows[start: start + block]
            dist = space.distances_from(chunk, other_space)
            order = np.argsort(dist, axis=1, kind="stable")[:, :kk]
            for r, row in enumerate(chunk):
                pools[row] = others[order[r]]
    return pools


def scm_adjust(
    data: Dataset,
    forest: ForestModel,
    k: Optional[int] = None,
    encoder: Optional[DesignEncoder] = None,
) -> ScmAdjustment:
    """
    Counterfactual claim for every row. V is the forest's importance vector,
    which must be indexed by the columns of `encoder` (fitted on `data`
    without the sensitive attribute when not given).
    """
    k = settings.scm.donor_k if k is None else k
    if k < 1:
        raise DomainError("donor pool size k must be >= 1")
    encoder = encoder or DesignEncoder.fit(data)
    if tuple(encoder.column_names) != tuple(forest.column_names):
        raise DomainError("forest importances do not match the design columns")
    X = scaled_design(data, encoder)
    v = forest.importances / forest.importances.sum()
    y = data.y
    pools = donor_pools(data, k)

    def solve(i: int) -> ScmSolution:
        return scm_weights(X[i], X[pools[i]], v)

    with ThreadPoolExecutor(max_workers=get_optimal_workers(data.n)) as pool:
        solutions = list(tqdm(
            pool.map(solve, range(data.n)),
            total=data.n, desc="synthetic control", disable=not settings.progress, leave=False,
        ))

    y_cf = np.array([y[pools[i]] @ sol.weights for i, sol in enumerate(solutions)])
    adjusted = (y + y_cf) / 2.0
    objective = np.array([sol.objective for sol in solutions])
    logger.info("SCM: %d rows, k=%d, mean objective %.3g", data.n, min(k, data.n), objective.mean())
    return ScmAdjustment(
        y=y,
        y_counterfactual=y_cf,
        y_adjusted=adjusted,
        donors=pools,
        weights=[sol.weights for sol in solutions],
        objective=objective,
        v=v,
    )
