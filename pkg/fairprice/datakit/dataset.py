"""Dataset container, stratified splitting and design-matrix encoding."""
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split

from fairprice.core.errors import DomainError, SchemaError
from fairprice.ingestion.schemas import Schema
from fairprice.types import ModelMatrix, Targets

FrameLike = Union["Dataset", pd.DataFrame]


def compute_ranges(schema: Schema, frame: pd.DataFrame) -> Dict[str, Tuple[float, float]]:
    return {
        col: (float(frame[col].min()), float(frame[col].max()))
        for col in schema.numeric_features
    }


def resolve_levels(schema: Schema, frame: pd.DataFrame) -> Tuple[str, str]:
    observed = sorted(frame[schema.sensitive].astype(str).unique())
    if len(observed) != 2:
        raise DomainError(f"sensitive column must have two levels, found {observed}")
    a = schema.protected_level or observed[0]
    b = observed[1] if observed[0] == a else observed[0]
    return a, b


@dataclass(frozen=True)
class Dataset:
    schema: Schema
    frame: pd.DataFrame
    levels: Tuple[str, str]
    numeric_ranges: Dict[str, Tuple[float, float]]
    dropped_rows: int = 0
    metadata: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_frame(
        cls,
        schema: Schema,
        frame: pd.DataFrame,
        *,
        levels: Optional[Tuple[str, str]] = None,
        numeric_ranges: Optional[Dict[str, Tuple[float, float]]] = None,
        dropped_rows: int = 0,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> "Dataset":
        frame = frame.reset_index(drop=True)
        if len(frame) < 2:
            raise DomainError(f"a dataset needs at least 2 rows, found {len(frame)}")
        if frame[schema.column_names].isna().any().any():
            raise DomainError("datasets cannot hold missing values")
        ranges = numeric_ranges if numeric_ranges is not None else compute_ranges(schema, frame)
        for col, (lo, hi) in ranges.items():
            if lo > hi:
                raise DomainError(f"numeric range of {col!r} has min > max")
        return cls(
            schema=schema,
            frame=frame,
            levels=levels or resolve_levels(schema, frame),
            numeric_ranges=dict(ranges),
            dropped_rows=dropped_rows,
            metadata=dict(metadata or {}),
        )

    @property
    def n(self) -> int:
        return len(self.frame)

    @property
    def d(self) -> np.ndarray:
        """Indicator of group a (1.0) versus group b (0.0)."""
        return (self.frame[self.schema.sensitive].astype(str).to_numpy() == self.levels[0]).astype(float)

    @property
    def y(self) -> np.ndarray:
        return self.frame[self.schema.target].to_numpy(dtype=float)

    @property
    def proportions(self) -> Tuple[float, float]:
        p_a = float(self.d.mean())
        return p_a, 1.0 - p_a

    def targets(self) -> Targets:
        s = self.schema
        count = self.frame[s.count_target].to_numpy(dtype=float) if s.count_target else None
        exposure = self.frame[s.exposure].to_numpy(dtype=float) if s.exposure else None
        return Targets(amount=self.y, count=count, exposure=exposure)

    def exposure(self) -> Optional[np.ndarray]:
        if self.schema.exposure is None:
            return None
        return self.frame[self.schema.exposure].to_numpy(dtype=float)

    def subset(self, rows: Sequence[int], numeric_ranges: Optional[Dict[str, Tuple[float, float]]] = None) -> "Dataset":
        frame = self.frame.iloc[np.asarray(rows, dtype=int)].reset_index(drop=True)
        return Dataset.from_frame(
            self.schema,
            frame,
            levels=self.levels,
            numeric_ranges=numeric_ranges,
            metadata=self.metadata,
        )

    def with_target(self, values: np.ndarray) -> "Dataset":
        """Copy with the claim-amount column replaced (count target removed)."""
        frame = self.frame.copy()
        frame[self.schema.target] = np.asarray(values, dtype=float)
        schema = self.schema.model_copy(update={"count_target": None})
        return replace(self, schema=schema, frame=frame)

    def flip_sensitive(self) -> "Dataset":
        a, b = self.levels
        frame = self.frame.copy()
        col = self.schema.sensitive
        frame[col] = np.where(frame[col].astype(str) == a, b, a)
        return replace(self, frame=frame)


def as_frame(data: FrameLike) -> pd.DataFrame:
    return data.frame if isinstance(data, Dataset) else data


def split(data: Dataset, test_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Stratified (by D) train/test partition; the test split reuses training ranges."""
    if not 0.0 < test_fraction < 1.0:
        raise DomainError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if data.n * test_fraction < 1:
        raise DomainError("n * test_fraction must be at least 1")
    d = data.d
    if min(d.sum(), (1 - d).sum()) < 2:
        raise DomainError("each sensitive group needs at least 2 rows to stratify")
    train_idx, test_idx = train_test_split(
        np.arange(data.n), test_size=test_fraction, random_state=seed, stratify=d
    )
    train = data.subset(np.sort(train_idx))
    test = data.subset(np.sort(test_idx), numeric_ranges=train.numeric_ranges)
    return train, test


@dataclass(frozen=True)
class DesignEncoder:
    """One-hot encoder frozen on a training Dataset.

    Numeric features pass through; each categorical contributes (levels - 1)
    indicator columns with the alphabetically first level as reference. When
    `sensitive` is set, a final indicator column for group a is appended.
    """
    features: Tuple[str, ...]
    numeric: Tuple[str, ...]
    categorical_levels: Dict[str, Tuple[str, ...]]
    sensitive: Optional[str] = None
    a_level: Optional[str] = None

    @classmethod
    def fit(cls, data: Dataset, include_sensitive: bool = False, features: Optional[List[str]] = None) -> "DesignEncoder":
        schema = data.schema
        features = list(features) if features is not None else schema.feature_names
        numeric = tuple(f for f in features if f in schema.numeric_features)
        levels = {
            f: tuple(sorted(data.frame[f].astype(str).unique()))
            for f in features
            if f in schema.categorical_features
        }
        enc = cls(
            features=tuple(features),
            numeric=numeric,
            categorical_levels=levels,
            sensitive=schema.sensitive if include_sensitive else None,
            a_level=data.levels[0] if include_sensitive else None,
        )
        if not enc.column_names:
            raise SchemaError("design matrix would have no columns")
        return enc

    @property
    def column_names(self) -> Tuple[str, ...]:
        names: List[str] = []
        for f in self.features:
            if f in self.categorical_levels:
                names.extend(f"{f}[{lvl}]" for lvl in self.categorical_levels[f][1:])
            else:
                names.append(f)
        if self.sensitive is not None:
            names.append(f"{self.sensitive}[{self.a_level}]")
        return tuple(names)

    def transform(self, data: FrameLike, d: Optional[np.ndarray] = None) -> ModelMatrix:
        """Encode rows; `d` overrides the group-a indicator (used for mu(x, D=a))."""
        frame = as_frame(data)
        missing = [f for f in self.features if f not in frame.columns]
        if missing:
            raise SchemaError(f"frame is missing feature column(s) {missing}")
        blocks: List[np.ndarray] = []
        for f in self.features:
            if f in self.categorical_levels:
                values = frame[f].astype(str).to_numpy()
                for lvl in self.categorical_levels[f][1:]:
                    blocks.append((values == lvl).astype(float))
            else:
                blocks.append(frame[f].to_numpy(dtype=float))
        if self.sensitive is not None:
            if d is None:
                if self.sensitive not in frame.columns:
                    raise SchemaError(f"frame is missing sensitive column {self.sensitive!r}")
                d = (frame[self.sensitive].astype(str).to_numpy() == self.a_level).astype(float)
            blocks.append(np.broadcast_to(np.asarray(d, dtype=float), (len(frame),)).copy())
        design = np.column_stack(blocks) if blocks else np.empty((len(frame), 0))
        return ModelMatrix(design=design, column_names=self.column_names)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "features": list(self.features),
            "numeric": list(self.numeric),
            "categorical_levels": {k: list(v) for k, v in self.categorical_levels.items()},
            "sensitive": self.sensitive,
            "a_level": self.a_level,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "DesignEncoder":
        return cls(
            features=tuple(payload["features"]),
            numeric=tuple(payload["numeric"]),
            categorical_levels={k: tuple(v) for k, v in payload["categorical_levels"].items()},
            sensitive=payload.get("sensitive"),
            a_level=payload.get("a_level"),
        )


def build_model_matrix(data: Dataset, include_sensitive: bool = False) -> ModelMatrix:
    return DesignEncoder.fit(data, include_sensitive=include_sensitive).transform(data)
