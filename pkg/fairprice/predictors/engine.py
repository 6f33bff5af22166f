"""
Interchangeable GLM / GBT engines.

An engine turns a ModelMatrix plus Targets into a premium predictor. With a
claim-count target it fits a frequency model (Poisson, log exposure offset) and
a severity model (amount per claim on rows with claims, weighted by count) and
predicts their product. Without one it fits the amount directly: Gamma when
every target is strictly positive, Poisson quasi-likelihood otherwise.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Union

import numpy as np

from fairprice.core.errors import DomainError
from fairprice.predictors.gbt import GbtModel, GbtParams, Loss, gbt_fit, gbt_predict
from fairprice.predictors.glm import Family, GlmModel, glm_fit, glm_predict
from fairprice.types import ModelMatrix, Targets

logger = logging.getLogger(__name__)

BaseModel = Union[GlmModel, GbtModel]

FAMILY_LOSS = {Family.POISSON: Loss.POISSON, Family.GAMMA: Loss.GAMMA, Family.GAUSSIAN: Loss.SQUARED}


class EngineKind(str, Enum):
    GLM = "glm"
    GBT = "gbt"


def _offset(exposure: Optional[np.ndarray]) -> Optional[np.ndarray]:
    return None if exposure is None else np.log(np.asarray(exposure, dtype=float))


def select_family(y: np.ndarray) -> Family:
    return Family.GAMMA if np.all(np.asarray(y) > 0) else Family.POISSON


@dataclass(frozen=True)
class DirectPredictor:
    model: BaseModel
    uses_offset: bool = False

    def predict(self, mm: ModelMatrix, exposure: Optional[np.ndarray] = None) -> np.ndarray:
        offset = _offset(exposure) if self.uses_offset else None
        if isinstance(self.model, GlmModel):
            return glm_predict(self.model, mm, offset)
        return gbt_predict(self.model, mm, offset)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "direct", "uses_offset": self.uses_offset, "model": self.model.to_dict()}


@dataclass(frozen=True)
class FreqSevPredictor:
    frequency: DirectPredictor
    severity: DirectPredictor

    def predict_components(self, mm: ModelMatrix, exposure: Optional[np.ndarray] = None):
        return self.frequency.predict(mm, exposure), self.severity.predict(mm)

    def predict(self, mm: ModelMatrix, exposure: Optional[np.ndarray] = None) -> np.ndarray:
        freq, sev = self.predict_components(mm, exposure)
        return freq * sev

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "freqsev", "frequency": self.frequency.to_dict(), "severity": self.severity.to_dict()}


Predictor = Union[DirectPredictor, FreqSevPredictor]


def _model_from_dict(payload: Dict[str, Any]) -> BaseModel:
    if payload["kind"] == "glm":
        return GlmModel.from_dict(payload)
    if payload["kind"] == "gbt":
        return GbtModel.from_dict(payload)
    raise DomainError(f"unknown base model kind {payload['kind']!r}")


def predictor_from_dict(payload: Dict[str, Any]) -> Predictor:
    if payload["kind"] == "direct":
        return DirectPredictor(model=_model_from_dict(payload["model"]), uses_offset=bool(payload["uses_offset"]))
    if payload["kind"] == "freqsev":
        return FreqSevPredictor(
            frequency=predictor_from_dict(payload["frequency"]),
            severity=predictor_from_dict(payload["severity"]),
        )
    raise DomainError(f"unknown predictor kind {payload['kind']!r}")


class Engine(ABC):
    kind: EngineKind

    def __init__(self, family: Optional[Family] = None):
        self.family = Family(family) if family is not None else None

    @abstractmethod
    def fit_model(
        self,
        mm: ModelMatrix,
        y: np.ndarray,
        family: Family,
        weights: Optional[np.ndarray] = None,
        offset: Optional[np.ndarray] = None,
    ) -> BaseModel:
        ...

    def fit_direct(self, mm: ModelMatrix, y: np.ndarray, exposure: Optional[np.ndarray] = None) -> DirectPredictor:
        family = self.family or select_family(y)
        offset = _offset(exposure) if family != Family.GAUSSIAN else None
        model = self.fit_model(mm, y, family, offset=offset)
        return DirectPredictor(model=model, uses_offset=offset is not None)

    def fit(self, mm: ModelMatrix, targets: Targets) -> Predictor:
        if targets.count is None:
            return self.fit_direct(mm, targets.amount, targets.exposure)

        count = np.asarray(targets.count, dtype=float)
        offset = targets.offset()
        frequency = DirectPredictor(
            model=self.fit_model(mm, count, Family.POISSON, offset=offset),
            uses_offset=offset is not None,
        )
        has_claim = count > 0
        if not has_claim.any():
            raise DomainError("no row has a positive claim count; cannot fit severity")
        sev_rows = np.flatnonzero(has_claim)
        sev_mm = ModelMatrix(design=mm.design[sev_rows], column_names=mm.column_names)
        severity_target = targets.amount[sev_rows] / count[sev_rows]
        severity = DirectPredictor(
            model=self.fit_model(sev_mm, severity_target, select_family(severity_target), weights=count[sev_rows])
        )
        logger.debug("freq-sev fit: %d of %d rows carry claims", sev_rows.size, mm.n_rows)
        return FreqSevPredictor(frequency=frequency, severity=severity)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "family": self.family.value if self.family else None}


class GlmEngine(Engine):
    kind = EngineKind.GLM

    def fit_model(self, mm, y, family, weights=None, offset=None) -> GlmModel:
        return glm_fit(mm, y, family, weights=weights, offset=offset)


class GbtEngine(Engine):
    kind = EngineKind.GBT

    def __init__(self, params: Optional[GbtParams] = None, family: Optional[Family] = None):
        super().__init__(family)
        self.params = params or GbtParams()

    def fit_model(self, mm, y, family, weights=None, offset=None) -> GbtModel:
        return gbt_fit(mm, y, FAMILY_LOSS[family], self.params, weights=weights, offset=offset)

    def to_dict(self) -> Dict[str, Any]:
        out = super().to_dict()
        out["params"] = self.params.to_dict()
        return out


def make_engine(kind: Union[str, EngineKind], gbt_params: Optional[GbtParams] = None, family: Optional[Family] = None) -> Engine:
    kind = EngineKind(kind)
    if kind == EngineKind.GLM:
        return GlmEngine(family=family)
    return GbtEngine(params=gbt_params, family=family)
