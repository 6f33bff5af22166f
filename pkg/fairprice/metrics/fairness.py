"""
Group, individual and counterfactual fairness scores.

Disparity impact ratio compares group means of the premium, the local
Lipschitz constant takes a high quantile of premium change per unit of Gower
distance between nearest neighbours, and the counterfactual score is the
pooled median leaf ITE of a causal forest grown on the premiums.
"""
import logging
from typing import Optional

import numpy as np

from fairprice.causalforest.forest import CausalForestParams, causal_forest_fit, ite_summary
from fairprice.core.errors import DomainError, UndefinedMetricError
from fairprice.datakit.dataset import Dataset
from fairprice.datakit.gower import NeighborPairs, neighbor_pairs
from fairprice.metrics.accuracy import normalized_gini, rmse
from fairprice.types import FairnessReport, ObjectiveVector
from fairprice.utils.quantiles import quantile

logger = logging.getLogger(__name__)

LIPSCHITZ_QUANTILE = 0.95


def disparity_impact_ratio(yhat, d) -> float:
    """E[yhat | D = a] / E[yhat | D = b], with d = 1 marking group a."""
    yhat = np.asarray(yhat, dtype=float).ravel()
    is_a = np.asarray(d, dtype=float).ravel() == 1.0
    if yhat.size != is_a.size:
        raise DomainError("predictions and group indicator differ in length")
    if not is_a.any() or is_a.all():
        raise DomainError("both groups must be non-empty")
    mean_b = float(yhat[~is_a].mean())
    if mean_b <= 0:
        raise DomainError("mean premium of group b must be positive")
    return float(yhat[is_a].mean()) / mean_b


def lipschitz_ratios(yhat, pairs: NeighborPairs) -> np.ndarray:
    """
    |yhat_i - yhat_j| / d_ij per pair. Pairs at distance 0 with equal premiums
    are dropped; at distance 0 with different premiums the ratio is +inf.
    """
    yhat = np.asarray(yhat, dtype=float).ravel()
    delta = np.abs(yhat[pairs.i] - yhat[pairs.j])
    dist = np.asarray(pairs.d, dtype=float)
    keep = (dist > 0) | (delta > 0)
    delta, dist = delta[keep], dist[keep]
    with np.errstate(divide="ignore"):
        return np.where(dist > 0, delta / np.where(dist > 0, dist, 1.0), np.inf)


def local_lipschitz(
    data: Dataset,
    yhat,
    q: float = LIPSCHITZ_QUANTILE,
    pairs: Optional[NeighborPairs] = None,
) -> float:
    if data.n < 2:
        raise DomainError("local Lipschitz needs at least 2 rows")
    pairs = pairs if pairs is not None else neighbor_pairs(data)
    ratios = lipschitz_ratios(yhat, pairs)
    if ratios.size == 0:
        raise UndefinedMetricError("every neighbour pair was a duplicate with equal premiums")
    return quantile(ratios, q)


def objective_vector(report: FairnessReport) -> ObjectiveVector:
    """Aligned so that every entry is minimized."""
    return ObjectiveVector(
        rmse=report.rmse,
        dir_gap=abs(report.dir - 1.0),
        lipschitz=report.lipschitz_q95,
        ite_gap=abs(report.median_ite),
    )


def fairness_report(
    model: str,
    split: str,
    data: Dataset,
    yhat,
    pairs: Optional[NeighborPairs] = None,
    forest_params: Optional[CausalForestParams] = None,
    bins: Optional[int] = None,
) -> FairnessReport:
    """All six scores of one model's premiums on one split."""
    yhat = np.asarray(yhat, dtype=float).ravel()
    if yhat.size != data.n:
        raise DomainError(f"{model}: {yhat.size} predictions for {data.n} rows")
    y = data.y
    try:
        gini = normalized_gini(y, yhat)
    except UndefinedMetricError as e:
        logger.warning("%s/%s: %s", model, split, e)
        gini = float("nan")
    ites = ite_summary(causal_forest_fit(data, yhat, forest_params), bins=bins)
    report = FairnessReport(
        model=model,
        split=split,
        rmse=rmse(y, yhat),
        gini=gini,
        dir=disparity_impact_ratio(yhat, data.d),
        lipschitz_q95=local_lipschitz(data, yhat, pairs=pairs),
        median_ite=ites.median,
        ite_distribution=ites,
    )
    logger.info(
        "%s/%s: rmse %.4g, gini %.4f, dir %.4f, lipschitz %.4g, median ITE %.4g",
        model, split, report.rmse, report.gini, report.dir, report.lipschitz_q95, report.median_ite,
    )
    return report
