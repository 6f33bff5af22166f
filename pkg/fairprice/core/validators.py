from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

from fairprice.core.errors import CardinalityError, DomainError, ParseError, SchemaError
from fairprice.ingestion.schemas import Schema
from fairprice.types import FeatureKind


@dataclass
class ValidationIssue:
    column: str
    reason: str
    row: Optional[int] = None


@dataclass
class ValidationResult:
    frame: pd.DataFrame
    dropped_rows: int
    issues: List[ValidationIssue] = field(default_factory=list)


class TableValidator:
    """Checks a raw string table against a Schema and coerces it to typed columns."""

    def __init__(self, schema: Schema):
        self.schema = schema

    def check_header(self, header: List[str]) -> None:
        unknown = [h for h in header if h not in self.schema.column_names]
        if unknown:
            raise SchemaError(f"unknown column(s) not in schema: {unknown}")
        missing = [c for c in self.schema.column_names if c not in header]
        if missing:
            raise SchemaError(f"schema column(s) missing from header: {missing}")

    def validate_frame(self, raw: pd.DataFrame) -> ValidationResult:
        """
        Drops rows with any missing value, parses Numeric columns and enforces
        the two-level sensitive attribute. `raw` holds strings (NaN for empty
        cells); the first data row is reported as row 1.
        """
        self.check_header(list(raw.columns))
        raw = raw[self.schema.column_names]
        issues: List[ValidationIssue] = []

        missing_mask = raw.isna().any(axis=1)
        for col in raw.columns:
            n_missing = int(raw[col].isna().sum())
            if n_missing:
                issues.append(ValidationIssue(col, f"{n_missing} missing value(s)"))
        frame = raw.loc[~missing_mask].copy()
        dropped = int(missing_mask.sum())

        for col in self.schema.column_names:
            if self.schema.kind_of(col) == FeatureKind.NUMERIC:
                parsed = pd.to_numeric(frame[col], errors="coerce")
                bad = parsed.isna()
                if bad.any():
                    first = frame.index[bad.to_numpy()][0]
                    raise ParseError(f"non-numeric token {frame.at[first, col]!r}", row=int(first) + 1, column=col)
                frame[col] = parsed.astype(float)
            else:
                frame[col] = frame[col].astype(str).str.strip()

        self.check_roles(frame)
        frame = frame.reset_index(drop=True)
        return ValidationResult(frame=frame, dropped_rows=dropped, issues=issues)

    def check_roles(self, frame: pd.DataFrame) -> None:
        s = self.schema
        levels = sorted(frame[s.sensitive].unique())
        if len(levels) != 2:
            raise CardinalityError(
                f"sensitive column {s.sensitive!r} must have exactly 2 observed levels, found {len(levels)}: {levels}"
            )
        if s.protected_level is not None and s.protected_level not in levels:
            raise CardinalityError(f"protected_level {s.protected_level!r} not observed in {levels}")
        if len(frame) < 2:
            raise DomainError(f"a dataset needs at least 2 rows, found {len(frame)}")
        y = frame[s.target].to_numpy(dtype=float)
        if np.any(y < 0):
            raise DomainError(f"target column {s.target!r} must be non-negative")
        if s.count_target is not None and np.any(frame[s.count_target].to_numpy(dtype=float) < 0):
            raise DomainError(f"count column {s.count_target!r} must be non-negative")
        if s.exposure is not None and np.any(frame[s.exposure].to_numpy(dtype=float) <= 0):
            raise DomainError(f"exposure column {s.exposure!r} must be strictly positive")
