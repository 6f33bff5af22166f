"""Collapses a set of risk-factor columns into one GLM-based `risk_score` feature."""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from fairprice.core.errors import SchemaError
from fairprice.datakit.dataset import Dataset, DesignEncoder
from fairprice.ingestion.schemas import ColumnSpec
from fairprice.predictors.engine import select_family
from fairprice.predictors.glm import GlmModel, glm_fit, glm_predict
from fairprice.types import FeatureKind

logger = logging.getLogger(__name__)

RISK_SCORE = "risk_score"


@dataclass(frozen=True)
class RiskScorer:
    encoder: DesignEncoder
    model: GlmModel
    risk_factors: Sequence[str]
    score_range: Tuple[float, float]
    name: str = RISK_SCORE

    def score(self, data: Dataset) -> np.ndarray:
        # exposure-free: the score ranks risk per unit exposure
        return glm_predict(self.model, self.encoder.transform(data))

    def apply(self, data: Dataset) -> Dataset:
        """Replaces the risk-factor columns of `data` by the score column."""
        frame = data.frame.drop(columns=list(self.risk_factors)).copy()
        frame[self.name] = self.score(data)
        schema = data.schema.replace_features(
            drop=list(self.risk_factors), add=[ColumnSpec(name=self.name, kind=FeatureKind.NUMERIC)]
        )
        ranges = {k: v for k, v in data.numeric_ranges.items() if k not in self.risk_factors}
        ranges[self.name] = self.score_range
        return Dataset.from_frame(
            schema, frame, levels=data.levels, numeric_ranges=ranges,
            dropped_rows=data.dropped_rows, metadata={**data.metadata, "risk_factors": list(self.risk_factors)},
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "risk_factors": list(self.risk_factors),
            "score_range": list(self.score_range),
            "encoder": self.encoder.to_dict(),
            "model": self.model.to_dict(),
        }


def build_risk_score(train: Dataset, risk_factors: List[str]) -> RiskScorer:
    unknown = [f for f in risk_factors if f not in train.schema.feature_names]
    if unknown:
        raise SchemaError(f"risk factors are not non-protected features: {unknown}")
    if not risk_factors:
        raise SchemaError("risk score needs at least one risk factor")
    encoder = DesignEncoder.fit(train, features=risk_factors)
    y = train.y
    mm = encoder.transform(train)
    model = glm_fit(mm, y, select_family(y), offset=_log_exposure(train))
    scores = glm_predict(model, mm)
    logger.info("risk score fitted on %d factor(s), %d iterations", len(risk_factors), model.iterations)
    return RiskScorer(
        encoder=encoder,
        model=model,
        risk_factors=tuple(risk_factors),
        score_range=(float(scores.min()), float(scores.max())),
    )


def _log_exposure(data: Dataset):
    exposure = data.exposure()
    return None if exposure is None else np.log(exposure)
