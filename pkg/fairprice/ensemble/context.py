"""
Frozen evaluation state shared by every genome of one ensemble run.

RMSE and the disparity ratio use the whole evaluation split; the Lipschitz
and ITE objectives use a fixed subsample with pre-computed neighbour pairs and
a fixed forest seed. Objective vectors are cached by genome content.
"""
import hashlib
import logging
import threading
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from fairprice.causalforest.forest import CausalForestParams, causal_forest_fit_matrix, ite_summary
from fairprice.config import settings
from fairprice.core.errors import DomainError, UndefinedMetricError
from fairprice.datakit.dataset import Dataset, DesignEncoder
from fairprice.datakit.gower import NeighborPairs, neighbor_pairs
from fairprice.ensemble.meta import MetaLearner, decode
from fairprice.metrics.accuracy import normalized_gini, rmse
from fairprice.metrics.fairness import disparity_impact_ratio, local_lipschitz
from fairprice.types import FairnessReport, ObjectiveVector

logger = logging.getLogger(__name__)


def genome_key(genome: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(genome, dtype=np.float64).tobytes()).hexdigest()


@dataclass
class EvaluationContext:
    meta: MetaLearner
    evaluation: Dataset
    features: np.ndarray
    y_mo: np.ndarray
    y_mscm: np.ndarray
    sample_rows: np.ndarray
    sample: Dataset
    sample_design: np.ndarray
    pairs: NeighborPairs
    forest_params: CausalForestParams
    _cache: Dict[str, ObjectiveVector] = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    hits: int = 0

    @classmethod
    def freeze(
        cls,
        meta: MetaLearner,
        evaluation: Dataset,
        encoder: DesignEncoder,
        y_mo: np.ndarray,
        y_mscm: np.ndarray,
        seed: int,
        subsample: Optional[int] = None,
        forest_params: Optional[CausalForestParams] = None,
    ) -> "EvaluationContext":
        subsample = settings.ensemble.objective_subsample if subsample is None else subsample
        rows = np.arange(evaluation.n)
        if evaluation.n > subsample:
            rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
            rows = np.sort(rng.choice(evaluation.n, size=subsample, replace=False))
        sample = evaluation.subset(rows, numeric_ranges=evaluation.numeric_ranges)
        forest_params = forest_params or CausalForestParams(
            n_trees=settings.ensemble.ite_trees,
            max_depth=settings.ensemble.ite_max_depth,
            seed=seed,
        )
        ctx = cls(
            meta=meta,
            evaluation=evaluation,
            features=encoder.transform(evaluation).design,
            y_mo=np.asarray(y_mo, dtype=float),
            y_mscm=np.asarray(y_mscm, dtype=float),
            sample_rows=rows,
            sample=sample,
            sample_design=encoder.transform(sample).design,
            pairs=neighbor_pairs(sample, seed=seed),
            forest_params=forest_params,
        )
        logger.info(
            "Evaluation context: %d rows, %d in the fairness subsample, %d neighbour pairs",
            evaluation.n, sample.n, ctx.pairs.i.size,
        )
        return ctx

    def premiums(self, genome: np.ndarray) -> np.ndarray:
        return decode(self.meta, genome).premium(self.features, self.y_mo, self.y_mscm)

    def _scores(self, yhat: np.ndarray):
        sub = yhat[self.sample_rows]
        forest = causal_forest_fit_matrix(self.sample_design, self.sample.d, sub, self.forest_params)
        return (
            rmse(self.evaluation.y, yhat),
            disparity_impact_ratio(yhat, self.evaluation.d),
            local_lipschitz(self.sample, sub, pairs=self.pairs),
            ite_summary(forest),
        )

    def objectives_of(self, yhat: np.ndarray) -> ObjectiveVector:
        """Objective vector of any premium vector over the evaluation split."""
        yhat = np.asarray(yhat, dtype=float)
        if not np.all(np.isfinite(yhat)):
            inf = float("inf")
            return ObjectiveVector(inf, inf, inf, inf)
        error, dir_, lipschitz, ites = self._scores(yhat)
        return ObjectiveVector(rmse=error, dir_gap=abs(dir_ - 1.0), lipschitz=lipschitz, ite_gap=abs(ites.median))

    def report_of(self, model: str, yhat: np.ndarray, split: str = "validation") -> FairnessReport:
        """
        Report row scored exactly like a genome: objective_vector(report_of(m, y))
        equals objectives_of(y).
        """
        yhat = np.asarray(yhat, dtype=float).ravel()
        if yhat.size != self.evaluation.n:
            raise DomainError(f"{model}: {yhat.size} predictions for {self.evaluation.n} rows")
        error, dir_, lipschitz, ites = self._scores(yhat)
        try:
            gini = normalized_gini(self.evaluation.y, yhat)
        except UndefinedMetricError as e:
            logger.warning("%s/%s: %s", model, split, e)
            gini = float("nan")
        return FairnessReport(
            model=model,
            split=split,
            rmse=error,
            gini=gini,
            dir=dir_,
            lipschitz_q95=lipschitz,
            median_ite=ites.median,
            ite_distribution=ites,
        )

    def evaluate(self, genome: np.ndarray) -> ObjectiveVector:
        key = genome_key(genome)
        with self._lock:
            cached = self._cache.get(key)
            if cached is not None:
                self.hits += 1
                return cached
        value = self.objectives_of(self.premiums(genome))
        with self._lock:
            self._cache.setdefault(key, value)
            return self._cache[key]


def evaluate_genome(genome: np.ndarray, ctx: EvaluationContext) -> ObjectiveVector:
    return ctx.evaluate(np.asarray(genome, dtype=float))
