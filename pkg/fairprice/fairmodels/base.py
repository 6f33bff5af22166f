from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Callable, Dict, Optional, Type

import numpy as np
import pandas as pd

from fairprice.core.errors import ArtifactError, SchemaError
from fairprice.datakit.dataset import FrameLike, as_frame


class FairModelKind(str, Enum):
    MB = "MB"
    MU = "MU"
    MO = "MO"
    MDF = "MDF"
    MBC = "MBC"
    MSCM = "MSCM"
    MNN = "MNN"


# Kinds cmd_train builds by default; MNN is trained through its own lambda search.
STANDARD_KINDS = (
    FairModelKind.MB,
    FairModelKind.MU,
    FairModelKind.MO,
    FairModelKind.MDF,
    FairModelKind.MBC,
    FairModelKind.MSCM,
)

_REGISTRY: Dict[FairModelKind, Type["FairModel"]] = {}


def register(kind: FairModelKind) -> Callable[[Type["FairModel"]], Type["FairModel"]]:
    def deco(cls: Type["FairModel"]) -> Type["FairModel"]:
        cls.kind = kind
        _REGISTRY[kind] = cls
        return cls
    return deco


class FairModel(ABC):
    """A fitted cost model. Only MB (and MBC, through its group maps) reads D."""
    kind: FairModelKind
    reads_sensitive: bool = False

    def __init__(self, exposure_column: Optional[str] = None):
        self.exposure_column = exposure_column

    def exposure(self, frame: pd.DataFrame) -> Optional[np.ndarray]:
        if self.exposure_column is None:
            return None
        if self.exposure_column not in frame.columns:
            raise SchemaError(f"frame is missing exposure column {self.exposure_column!r}")
        return frame[self.exposure_column].to_numpy(dtype=float)

    @abstractmethod
    def predict(self, data: FrameLike) -> np.ndarray:
        ...

    @abstractmethod
    def payload(self) -> Dict[str, Any]:
        ...

    @classmethod
    @abstractmethod
    def from_payload(cls, payload: Dict[str, Any], exposure_column: Optional[str]) -> "FairModel":
        ...

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "version": 1,
            "exposure_column": self.exposure_column,
            "payload": self.payload(),
        }


def load_fair_model(document: Dict[str, Any]) -> FairModel:
    try:
        kind = FairModelKind(document["kind"])
        cls = _REGISTRY[kind]
    except (KeyError, ValueError) as e:
        raise ArtifactError(f"unrecognised model document: {e}")
    return cls.from_payload(document["payload"], document.get("exposure_column"))


def frame_of(data: FrameLike) -> pd.DataFrame:
    return as_frame(data)
