"""The engine-backed cost models: MB, MU, MO, MDF, MBC and MSCM."""
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd

from fairprice.core.errors import DomainError, SchemaError
from fairprice.datakit.dataset import Dataset, DesignEncoder, FrameLike
from fairprice.fairmodels.barycenter import BarycenterMap, fit_barycenter
from fairprice.fairmodels.base import STANDARD_KINDS, FairModel, FairModelKind, frame_of, register
from fairprice.fairmodels.orthogonal import OrthogonalizedMatrix, orthogonalize
from fairprice.fairmodels.scm import ScmAdjustment, scm_adjust
from fairprice.predictors.engine import Engine, Predictor, predictor_from_dict
from fairprice.predictors.forest import ForestParams, forest_fit
from fairprice.types import Targets

logger = logging.getLogger(__name__)


class _EncodedModel(FairModel):
    """Engine predictor behind a frozen design encoder."""

    def __init__(self, encoder: DesignEncoder, predictor: Predictor, exposure_column: Optional[str] = None):
        super().__init__(exposure_column)
        self.encoder = encoder
        self.predictor = predictor

    def predict(self, data: FrameLike) -> np.ndarray:
        frame = frame_of(data)
        return self.predictor.predict(self.encoder.transform(frame), self.exposure(frame))

    def payload(self) -> Dict[str, Any]:
        return {"encoder": self.encoder.to_dict(), "predictor": self.predictor.to_dict()}

    @classmethod
    def from_payload(cls, payload, exposure_column):
        return cls(
            DesignEncoder.from_dict(payload["encoder"]),
            predictor_from_dict(payload["predictor"]),
            exposure_column,
        )


@register(FairModelKind.MB)
class BestEstimateModel(_EncodedModel):
    """mu(X, D): the benchmark, fitted with the group-a indicator in the design."""
    reads_sensitive = True

    def predict_at(self, data: FrameLike, d_value: float) -> np.ndarray:
        """mu(x, D = d_value) for every row, whatever the row's own D."""
        frame = frame_of(data)
        mm = self.encoder.transform(frame, d=np.full(len(frame), float(d_value)))
        return self.predictor.predict(mm, self.exposure(frame))

    def conditional(self, data: FrameLike) -> Tuple[np.ndarray, np.ndarray]:
        return self.predict_at(data, 1.0), self.predict_at(data, 0.0)


@register(FairModelKind.MU)
class UnawareModel(_EncodedModel):
    pass


@register(FairModelKind.MSCM)
class SyntheticControlModel(_EncodedModel):
    """Engine fitted on X against the synthetic-control adjusted claims Y'."""

    def __init__(self, encoder, predictor, exposure_column=None, adjustment: Optional[ScmAdjustment] = None,
                 scm_summary: Optional[Dict[str, Any]] = None):
        super().__init__(encoder, predictor, exposure_column)
        self.adjustment = adjustment
        self.scm_summary = scm_summary or (adjustment.summary() if adjustment is not None else {})

    def payload(self) -> Dict[str, Any]:
        out = super().payload()
        out["scm"] = self.scm_summary
        return out

    @classmethod
    def from_payload(cls, payload, exposure_column):
        return cls(
            DesignEncoder.from_dict(payload["encoder"]),
            predictor_from_dict(payload["predictor"]),
            exposure_column,
            scm_summary=payload.get("scm", {}),
        )


@register(FairModelKind.MO)
class OrthogonalModel(FairModel):
    """mu(X*) with X* the design residualized on D using training-time betas."""

    def __init__(self, encoder: DesignEncoder, orth: OrthogonalizedMatrix, predictor: Predictor,
                 sensitive: str, a_level: str, exposure_column: Optional[str] = None):
        super().__init__(exposure_column)
        self.encoder = encoder
        self.orth = orth
        self.predictor = predictor
        self.sensitive = sensitive
        self.a_level = a_level

    def indicator(self, frame: pd.DataFrame) -> Optional[np.ndarray]:
        if self.sensitive not in frame.columns:
            return None
        return (frame[self.sensitive].astype(str).to_numpy() == self.a_level).astype(float)

    def predict(self, data: FrameLike, d: Optional[np.ndarray] = None) -> np.ndarray:
        frame = frame_of(data)
        d = self.indicator(frame) if d is None else d
        residual = self.orth.apply(self.encoder.transform(frame), d)
        return self.predictor.predict(residual, self.exposure(frame))

    def payload(self) -> Dict[str, Any]:
        return {
            "encoder": self.encoder.to_dict(),
            "betas": self.orth.betas_dict(),
            "predictor": self.predictor.to_dict(),
            "sensitive": self.sensitive,
            "a_level": self.a_level,
        }

    @classmethod
    def from_payload(cls, payload, exposure_column):
        encoder = DesignEncoder.from_dict(payload["encoder"])
        return cls(
            encoder,
            OrthogonalizedMatrix.from_betas(payload["betas"], encoder.column_names),
            predictor_from_dict(payload["predictor"]),
            payload["sensitive"],
            payload["a_level"],
            exposure_column,
        )


def mdf_combine(mu_a: np.ndarray, mu_b: np.ndarray, p_a: float) -> np.ndarray:
    """mu(x, a) * P(a) + mu(x, b) * P(b)."""
    if not 0.0 <= p_a <= 1.0:
        raise DomainError("P(a) must lie in [0, 1]")
    return np.asarray(mu_a, dtype=float) * p_a + np.asarray(mu_b, dtype=float) * (1.0 - p_a)


def predict_mdf(mb: BestEstimateModel, data: FrameLike, proportions: Tuple[float, float]) -> np.ndarray:
    p_a, p_b = proportions
    if abs(p_a + p_b - 1.0) > 1e-9:
        raise DomainError("proportions must sum to 1")
    mu_a, mu_b = mb.conditional(data)
    return mdf_combine(mu_a, mu_b, p_a)


@register(FairModelKind.MDF)
class DemographicFreeModel(FairModel):
    """MB averaged over the training distribution of D."""

    def __init__(self, mb: BestEstimateModel, proportions: Tuple[float, float]):
        super().__init__(mb.exposure_column)
        self.mb = mb
        self.proportions = proportions

    def predict(self, data: FrameLike) -> np.ndarray:
        return predict_mdf(self.mb, data, self.proportions)

    def payload(self) -> Dict[str, Any]:
        return {"mb": self.mb.to_dict(), "p_a": self.proportions[0], "p_b": self.proportions[1]}

    @classmethod
    def from_payload(cls, payload, exposure_column):
        mb = BestEstimateModel.from_payload(payload["mb"]["payload"], payload["mb"]["exposure_column"])
        return cls(mb, (float(payload["p_a"]), float(payload["p_b"])))


def predict_mbc(bmap: BarycenterMap, s: np.ndarray, d: np.ndarray) -> np.ndarray:
    return bmap.transform(s, d)


@register(FairModelKind.MBC)
class BarycenterModel(FairModel):
    """MB predictions transported to the barycenter of the two group distributions."""
    reads_sensitive = True

    def __init__(self, mb: BestEstimateModel, bmap: BarycenterMap, sensitive: str, a_level: str):
        super().__init__(mb.exposure_column)
        self.mb = mb
        self.bmap = bmap
        self.sensitive = sensitive
        self.a_level = a_level

    def predict(self, data: FrameLike) -> np.ndarray:
        frame = frame_of(data)
        if self.sensitive not in frame.columns:
            raise SchemaError(f"MBC needs the sensitive column {self.sensitive!r} to pick a group map")
        d = (frame[self.sensitive].astype(str).to_numpy() == self.a_level).astype(float)
        return predict_mbc(self.bmap, self.mb.predict(frame), d)

    def payload(self) -> Dict[str, Any]:
        return {
            "mb": self.mb.to_dict(),
            "barycenter": self.bmap.to_dict(),
            "sensitive": self.sensitive,
            "a_level": self.a_level,
        }

    @classmethod
    def from_payload(cls, payload, exposure_column):
        mb = BestEstimateModel.from_payload(payload["mb"]["payload"], payload["mb"]["exposure_column"])
        return cls(mb, BarycenterMap.from_dict(payload["barycenter"]), payload["sensitive"], payload["a_level"])


def fit_mb(engine: Engine, data: Dataset) -> BestEstimateModel:
    encoder = DesignEncoder.fit(data, include_sensitive=True)
    predictor = engine.fit(encoder.transform(data), data.targets())
    return BestEstimateModel(encoder, predictor, data.schema.exposure)


def fit_mu(engine: Engine, data: Dataset) -> UnawareModel:
    encoder = DesignEncoder.fit(data)
    predictor = engine.fit(encoder.transform(data), data.targets())
    return UnawareModel(encoder, predictor, data.schema.exposure)


def fit_mo(engine: Engine, data: Dataset) -> OrthogonalModel:
    encoder = DesignEncoder.fit(data)
    orth = orthogonalize(encoder.transform(data), data.d)
    predictor = engine.fit(orth.design, data.targets())
    return OrthogonalModel(encoder, orth, predictor, data.schema.sensitive, data.levels[0], data.schema.exposure)


def fit_mdf(mb: BestEstimateModel, data: Dataset) -> DemographicFreeModel:
    return DemographicFreeModel(mb, data.proportions)


def fit_mbc(mb: BestEstimateModel, data: Dataset) -> BarycenterMap:
    """CDFs are estimated on MB's training predictions, each row under its own D."""
    return fit_barycenter(mb.predict(data), data.d)


def fit_mbc_model(mb: BestEstimateModel, data: Dataset) -> BarycenterModel:
    return BarycenterModel(mb, fit_mbc(mb, data), data.schema.sensitive, data.levels[0])


def fit_mscm(
    engine: Engine,
    data: Dataset,
    forest_params: Optional[ForestParams] = None,
    k: Optional[int] = None,
) -> SyntheticControlModel:
    encoder = DesignEncoder.fit(data)
    mm = encoder.transform(data)
    forest = forest_fit(mm, data.y, forest_params)
    adjustment = scm_adjust(data, forest, k=k, encoder=encoder)
    targets = Targets(amount=adjustment.y_adjusted, exposure=data.exposure())
    predictor = engine.fit(mm, targets)
    return SyntheticControlModel(encoder, predictor, data.schema.exposure, adjustment=adjustment)


def fit_models(
    engine: Engine,
    data: Dataset,
    kinds=STANDARD_KINDS,
    forest_params: Optional[ForestParams] = None,
    k: Optional[int] = None,
) -> Dict[FairModelKind, FairModel]:
    """Fits the requested engine-backed kinds; MDF and MBC reuse the fitted MB."""
    kinds = [FairModelKind(kind) for kind in kinds]
    if FairModelKind.MNN in kinds:
        raise DomainError("MNN is trained through its lambda search, not fit_models")
    models: Dict[FairModelKind, FairModel] = {}
    mb: Optional[BestEstimateModel] = None
    for kind in kinds:
        logger.info("Fitting %s on %d rows", kind.value, data.n)
        if kind in (FairModelKind.MB, FairModelKind.MDF, FairModelKind.MBC) and mb is None:
            mb = fit_mb(engine, data)
        if kind == FairModelKind.MB:
            models[kind] = mb
        elif kind == FairModelKind.MU:
            models[kind] = fit_mu(engine, data)
        elif kind == FairModelKind.MO:
            models[kind] = fit_mo(engine, data)
        elif kind == FairModelKind.MDF:
            models[kind] = fit_mdf(mb, data)
        elif kind == FairModelKind.MBC:
            models[kind] = fit_mbc_model(mb, data)
        elif kind == FairModelKind.MSCM:
            models[kind] = fit_mscm(engine, data, forest_params=forest_params, k=k)
    return models
