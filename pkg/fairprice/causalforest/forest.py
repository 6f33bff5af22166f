"""
Causal forests of honest trees and the pooled leaf-ITE distribution.

Trees are grown from pre-drawn SeedSequence substreams, so the forest is the
same whether the pool runs one worker or many.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from fairprice.config import settings
from fairprice.core.errors import DomainError
from fairprice.causalforest.tree import CausalTree, fit_causal_tree
from fairprice.datakit.dataset import Dataset, DesignEncoder
from fairprice.types import IteDistribution
from fairprice.utils.monitor import get_optimal_workers
from fairprice.utils.quantiles import quantile

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CausalForestParams:
    n_trees: int = settings.causal_forest.n_trees
    min_group: int = settings.causal_forest.min_group
    max_depth: int = settings.causal_forest.max_depth
    mtry: Optional[int] = None
    seed: int = settings.seed

    def validate(self) -> None:
        if self.n_trees < 1:
            raise DomainError("n_trees must be >= 1")
        if self.min_group < 1:
            raise DomainError("min_group must be >= 1")
        if self.max_depth < 0:
            raise DomainError("max_depth must be >= 0")
        if self.mtry is not None and self.mtry < 1:
            raise DomainError("mtry must be >= 1")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_trees": self.n_trees,
            "min_group": self.min_group,
            "max_depth": self.max_depth,
            "mtry": self.mtry,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class CausalForest:
    trees: List[Optional[CausalTree]] = field(repr=False)
    params: CausalForestParams

    @property
    def fitted_trees(self) -> List[CausalTree]:
        return [t for t in self.trees if t is not None]

    def leaf_table(self) -> pd.DataFrame:
        """One row per leaf: leaf_ite, n_a, n_b, tree_id (trees in seed order)."""
        rows = [
            (leaf.ite, leaf.n_a, leaf.n_b, tree_id)
            for tree_id, tree in enumerate(self.trees)
            if tree is not None
            for leaf in tree.leaves()
        ]
        return pd.DataFrame(rows, columns=["leaf_ite", "n_a", "n_b", "tree_id"]).astype(
            {"leaf_ite": float, "n_a": int, "n_b": int, "tree_id": int}
        )

    def is_honest(self) -> bool:
        return all(t.is_honest() for t in self.fitted_trees)


def causal_forest_fit_matrix(
    X: np.ndarray,
    d: np.ndarray,
    predictions: np.ndarray,
    params: Optional[CausalForestParams] = None,
) -> CausalForest:
    """Forest over an explicit feature matrix X (rows aligned with d and predictions)."""
    params = params or CausalForestParams()
    params.validate()
    X = np.asarray(X, dtype=float)
    yhat = np.asarray(predictions, dtype=float).ravel()
    is_a = np.asarray(d, dtype=float).ravel() == 1.0
    if X.shape[0] != yhat.size or yhat.size != is_a.size:
        raise DomainError("predictions must be aligned with the data rows")
    if not np.all(np.isfinite(yhat)):
        raise DomainError("predictions must be finite")
    n_a = int(is_a.sum())
    n_b = int(is_a.size - n_a)
    if min(n_a, n_b) < 2 * params.min_group:
        raise DomainError(
            f"each group needs at least {2 * params.min_group} rows, found {n_a} and {n_b}"
        )

    streams = np.random.SeedSequence(params.seed).spawn(params.n_trees)

    def grow(t: int) -> Optional[CausalTree]:
        rng = np.random.default_rng(streams[t])
        return fit_causal_tree(X, is_a, yhat, rng, params.min_group, params.max_depth, params.mtry)

    with ThreadPoolExecutor(max_workers=get_optimal_workers(params.n_trees)) as pool:
        trees = list(tqdm(
            pool.map(grow, range(params.n_trees)),
            total=params.n_trees, desc="causal forest", disable=not settings.progress, leave=False,
        ))

    skipped = sum(t is None for t in trees)
    if skipped:
        logger.warning("Causal forest: %d of %d trees skipped (a half held too few rows of one group)", skipped, params.n_trees)
    if skipped == params.n_trees:
        raise DomainError("no causal tree could be grown; groups are too small")
    return CausalForest(trees=trees, params=params)


def causal_forest_fit(
    data: Dataset,
    predictions: np.ndarray,
    params: Optional[CausalForestParams] = None,
    encoder: Optional[DesignEncoder] = None,
) -> CausalForest:
    """Splits run over the non-protected design of `data`; D only labels the groups."""
    encoder = encoder or DesignEncoder.fit(data)
    if encoder.sensitive is not None:
        raise DomainError("causal-forest splits must not use the sensitive attribute")
    return causal_forest_fit_matrix(encoder.transform(data).design, data.d, predictions, params)


def ite_summary(forest: CausalForest, bins: Optional[int] = None, weighted: bool = False) -> IteDistribution:
    """
    Pooled leaf ITEs (each leaf once) with median, deciles and a fixed-width
    histogram over the observed range. `weighted` repeats each leaf by its
    estimation size n_a + n_b before taking quantiles.
    """
    bins = settings.causal_forest.histogram_bins if bins is None else bins
    if bins < 1:
        raise DomainError("bins must be >= 1")
    table = forest.leaf_table()
    ites = table["leaf_ite"].to_numpy()
    if ites.size == 0:
        raise DomainError("forest has no leaves")
    sample = np.repeat(ites, table["n_a"] + table["n_b"]) if weighted else ites
    lo, hi = float(ites.min()), float(ites.max())
    counts, edges = np.histogram(ites, bins=bins, range=(lo, hi) if hi > lo else (lo - 0.5, hi + 0.5))
    return IteDistribution(
        leaf_ites=ites,
        n_a=table["n_a"].to_numpy(),
        n_b=table["n_b"].to_numpy(),
        tree_ids=table["tree_id"].to_numpy(),
        median=quantile(sample, 0.5),
        deciles=[quantile(sample, k / 10) for k in range(1, 10)],
        histogram_counts=counts.tolist(),
        histogram_edges=edges.tolist(),
    )


def ite_frame(distribution: IteDistribution) -> pd.DataFrame:
    return pd.DataFrame({
        "leaf_ite": distribution.leaf_ites,
        "n_a": distribution.n_a,
        "n_b": distribution.n_b,
        "tree_id": distribution.tree_ids,
    })


def histogram_frame(distribution: IteDistribution) -> pd.DataFrame:
    edges = np.asarray(distribution.histogram_edges)
    return pd.DataFrame({
        "bin_lo": edges[:-1],
        "bin_hi": edges[1:],
        "count": distribution.histogram_counts,
    })


def median_ite(data: Dataset, predictions: np.ndarray, params: Optional[CausalForestParams] = None) -> float:
    return ite_summary(causal_forest_fit(data, predictions, params)).median
