"""
Two-stage ensemble: MO and MSCM base learners, a gated meta-learner evolved
by NSGA-II against (rmse, |dir - 1|, lipschitz, |median ITE|), and a TOPSIS
pick from the resulting Pareto archive.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from scipy.stats import rankdata

from fairprice.config import settings
from fairprice.core.errors import DomainError
from fairprice.core.resilience import CircuitBreaker
from fairprice.datakit.dataset import Dataset, FrameLike, split
from fairprice.ensemble.context import EvaluationContext
from fairprice.ensemble.meta import MetaLearner, build_meta_learner, decode, endpoint_genome
from fairprice.fairmodels.base import FairModel, FairModelKind, STANDARD_KINDS, frame_of
from fairprice.fairmodels.models import OrthogonalModel, SyntheticControlModel, fit_models
from fairprice.moo.archive import archive_document, archive_frame
from fairprice.moo.nsga2 import Individual, NsgaConfig, nsga2_evolve, rank_one
from fairprice.moo.topsis import TopsisConfig, TopsisResult, topsis_select
from fairprice.predictors.engine import Engine
from fairprice.predictors.forest import ForestParams
from fairprice.types import FairnessReport, ObjectiveVector

logger = logging.getLogger(__name__)

ENSEMBLE = "Ensemble"
REPORT_COLUMNS = ["model", "split", "rmse", "gini", "dir", "lipschitz_q95", "median_ite"]
RADAR_DIMENSIONS = {
    "rmse": lambda t: t["rmse"],
    "dir_gap": lambda t: (t["dir"] - 1.0).abs(),
    "lipschitz_q95": lambda t: t["lipschitz_q95"],
    "median_ite_gap": lambda t: t["median_ite"].abs(),
}


class EnsembleOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    validation_fraction: float = settings.ensemble.validation_fraction
    objective_subsample: int = settings.ensemble.objective_subsample
    include_features: bool = True
    hidden_units: int = settings.ensemble.hidden_units
    donor_k: Optional[int] = None
    report_models: List[FairModelKind] = list(STANDARD_KINDS)


class GatedEnsembleModel:
    """Deployable ensemble: the selected meta-learner over the fitted MO and MSCM."""

    def __init__(self, mo: OrthogonalModel, mscm: SyntheticControlModel, meta: MetaLearner):
        self.mo = mo
        self.mscm = mscm
        self.meta = meta

    def gate(self, data: FrameLike) -> np.ndarray:
        frame = frame_of(data)
        return self.meta.gate(self.mo.encoder.transform(frame).design, self.mo.predict(frame), self.mscm.predict(frame))

    def predict(self, data: FrameLike) -> np.ndarray:
        frame = frame_of(data)
        features = self.mo.encoder.transform(frame).design
        return self.meta.premium(features, self.mo.predict(frame), self.mscm.predict(frame))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": ENSEMBLE,
            "version": 1,
            "mo": self.mo.to_dict(),
            "mscm": self.mscm.to_dict(),
            "meta": self.meta.to_dict(),
        }


@dataclass
class EnsembleResult:
    archive: List[Individual]
    tags: List[str]
    selection: TopsisResult
    model: GatedEnsembleModel
    endpoints: Dict[str, ObjectiveVector]
    reports: List[FairnessReport] = field(default_factory=list)
    hypervolume_trace: List[float] = field(default_factory=list)
    evaluations: int = 0
    context: Optional[EvaluationContext] = field(default=None, repr=False)

    @property
    def selected(self) -> Individual:
        return self.archive[self.selection.best]

    def pareto_frame(self) -> pd.DataFrame:
        frame = archive_frame(self.archive, ObjectiveVector.NAMES)
        frame["tag"] = self.tags
        frame["closeness"] = self.selection.closeness
        return frame

    def pareto_document(self) -> Dict[str, Any]:
        return archive_document(self.archive, ObjectiveVector.NAMES, self.tags)

    def selected_document(self) -> Dict[str, Any]:
        best = self.selected
        return {
            "solution": self.selection.best,
            "tag": self.tags[self.selection.best],
            "genome": best.genome.tolist(),
            "objectives": dict(zip(ObjectiveVector.NAMES, best.objectives.tolist())),
            "closeness": float(self.selection.closeness[self.selection.best]),
            "endpoints": {k: dict(zip(ObjectiveVector.NAMES, v.as_array().tolist())) for k, v in self.endpoints.items()},
        }

    def report_frame(self) -> pd.DataFrame:
        return report_table(self.reports)


def report_table(reports: Sequence[FairnessReport]) -> pd.DataFrame:
    return pd.DataFrame([{c: getattr(r, c) for c in REPORT_COLUMNS} for r in reports], columns=REPORT_COLUMNS)


def radar_export(table: pd.DataFrame) -> pd.DataFrame:
    """
    Per dimension, models ranked 1..k on the aligned (minimized) scores; ties
    share the lower rank.
    """
    missing = {"model", "rmse", "dir", "lipschitz_q95", "median_ite"} - set(table.columns)
    if missing:
        raise DomainError(f"report table lacks column(s) {sorted(missing)}")
    out = pd.DataFrame({"model": table["model"].to_numpy()})
    for dim, aligned in RADAR_DIMENSIONS.items():
        out[dim] = rankdata(aligned(table).to_numpy(dtype=float), method="min").astype(int)
    return out


def _merge_endpoints(evolved: List[Individual], endpoints: List[Individual], endpoint_tags: List[str]):
    """
    Rank-1 set of the evolved archive plus the two endpoint genomes, evolved
    first. Penalized individuals (every objective +inf) are left out.
    """
    pool = evolved + endpoints
    tags = ["evolved"] * len(evolved) + endpoint_tags
    scored = [k for k, ind in enumerate(pool) if np.any(np.isfinite(ind.objectives))]
    if not scored:
        raise DomainError("every candidate solution failed to evaluate")
    candidates = [pool[k] for k in scored]
    front = rank_one(candidates)
    keep = {id(ind) for ind in front}
    archive, archive_tags = [], []
    for k in scored:
        if id(pool[k]) in keep:
            archive.append(pool[k])
            archive_tags.append(tags[k])
    return archive, archive_tags


def finite_decision_matrix(objectives: np.ndarray) -> np.ndarray:
    """
    TOPSIS needs finite criteria: +inf in a column becomes twice the column's
    largest finite value plus one, or 1.0 when nothing in the column is finite.
    """
    X = np.array(objectives, dtype=float)
    for j in range(X.shape[1]):
        col = X[:, j]
        bad = ~np.isfinite(col)
        if bad.any():
            col[bad] = 2.0 * col[~bad].max() + 1.0 if (~bad).any() else 1.0
    return X


def run_ensemble(
    data: Dataset,
    engine: Engine,
    nsga_config: NsgaConfig,
    topsis_config: Optional[TopsisConfig] = None,
    options: Optional[EnsembleOptions] = None,
) -> EnsembleResult:
    options = options or EnsembleOptions()
    topsis_config = topsis_config or TopsisConfig()
    seed = nsga_config.resolved_seed()

    fit_part, eval_part = split(data, options.validation_fraction, seed)
    logger.info("Ensemble: %d rows to fit base learners, %d to evaluate genomes", fit_part.n, eval_part.n)
    kinds = [FairModelKind.MO, FairModelKind.MSCM] + [
        k for k in options.report_models if k not in (FairModelKind.MO, FairModelKind.MSCM)
    ]
    models: Dict[FairModelKind, FairModel] = fit_models(
        engine, fit_part, kinds, forest_params=ForestParams(seed=seed), k=options.donor_k,
    )
    mo, mscm = models[FairModelKind.MO], models[FairModelKind.MSCM]

    encoder = mo.encoder
    meta = build_meta_learner(
        encoder.transform(fit_part).design if options.include_features else None,
        mo.predict(fit_part),
        mscm.predict(fit_part),
        include_features=options.include_features,
        hidden=options.hidden_units,
    )
    y_mo, y_mscm = mo.predict(eval_part), mscm.predict(eval_part)
    ctx = EvaluationContext.freeze(
        meta, eval_part, encoder, y_mo, y_mscm, seed, subsample=options.objective_subsample,
    )

    lipschitz_slot = ObjectiveVector.NAMES.index("lipschitz_q95")
    breaker = CircuitBreaker(len(ObjectiveVector.NAMES), failure_threshold=None, inf_allowed=(lipschitz_slot,))
    result = nsga2_evolve(
        lambda genome: ctx.evaluate(genome).as_array(),
        nsga_config,
        n_genes=meta.genome_length,
        n_objectives=len(ObjectiveVector.NAMES),
        breaker=breaker,
    )

    g_mo, g_mscm = endpoint_genome(meta, towards_mo=True), endpoint_genome(meta, towards_mo=False)
    endpoints = {"MO": ctx.evaluate(g_mo), "MSCM": ctx.evaluate(g_mscm)}
    archive, tags = _merge_endpoints(
        result.archive,
        [Individual(g_mo, endpoints["MO"].as_array()), Individual(g_mscm, endpoints["MSCM"].as_array())],
        ["endpoint:MO", "endpoint:MSCM"],
    )
    selection = topsis_select(finite_decision_matrix([ind.objectives for ind in archive]), topsis_config)
    chosen = archive[selection.best]
    logger.info(
        "TOPSIS picked solution %d (%s) of %d, closeness %.4f",
        selection.best, tags[selection.best], len(archive), selection.closeness[selection.best],
    )
    model = GatedEnsembleModel(mo, mscm, decode(meta, chosen.genome))

    reports: List[FairnessReport] = []
    if options.report_models:
        for kind in options.report_models:
            reports.append(ctx.report_of(kind.value, models[kind].predict(eval_part)))
        reports.append(ctx.report_of(ENSEMBLE, ctx.premiums(chosen.genome)))

    return EnsembleResult(
        archive=archive,
        tags=tags,
        selection=selection,
        model=model,
        endpoints=endpoints,
        reports=reports,
        hypervolume_trace=result.hypervolume_trace,
        evaluations=result.evaluations,
        context=ctx,
    )
