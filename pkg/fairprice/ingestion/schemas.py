from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from fairprice.types import FeatureKind


class ColumnSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(..., description="Column header in the CSV file.")
    kind: FeatureKind = Field(..., description="Numeric or Categorical.")


class Schema(BaseModel):
    """Column layout of an insurance portfolio table."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    columns: List[ColumnSpec] = Field(..., description="Every column with its kind.")
    sensitive: str = Field(..., description="Binary protected attribute D.")
    target: str = Field(..., description="Claim amount Y.")
    count_target: Optional[str] = Field(None, description="Claim count, enables frequency-severity models.")
    exposure: Optional[str] = Field(None, description="Exposure in policy-years.")
    permitted: Optional[List[str]] = Field(None, description="Permitted subset of non-protected columns.")
    protected_level: Optional[str] = Field(
        None, description="Level of the sensitive column treated as group a; defaults to the first level alphabetically."
    )

    @model_validator(mode="after")
    def validate_roles(self) -> "Schema":
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError("column names must be unique")
        kinds = {c.name: c.kind for c in self.columns}
        if self.sensitive not in kinds:
            raise ValueError(f"sensitive column {self.sensitive!r} is not declared")
        if kinds[self.sensitive] != FeatureKind.CATEGORICAL:
            raise ValueError("the sensitive attribute must be Categorical")
        for role in ("target", "count_target", "exposure"):
            col = getattr(self, role)
            if col is None:
                continue
            if col not in kinds:
                raise ValueError(f"{role} column {col!r} is not declared")
            if kinds[col] != FeatureKind.NUMERIC:
                raise ValueError(f"{role} column {col!r} must be Numeric")
        if not self.feature_names:
            raise ValueError("schema declares no non-protected feature columns")
        if self.permitted is not None:
            unknown = set(self.permitted) - set(self.feature_names)
            if unknown:
                raise ValueError(f"permitted columns are not non-protected features: {sorted(unknown)}")
        return self

    @property
    def column_names(self) -> List[str]:
        return [c.name for c in self.columns]

    def kind_of(self, name: str) -> FeatureKind:
        for c in self.columns:
            if c.name == name:
                return c.kind
        raise KeyError(name)

    @property
    def role_columns(self) -> Tuple[str, ...]:
        return tuple(c for c in (self.sensitive, self.target, self.count_target, self.exposure) if c is not None)

    @property
    def feature_names(self) -> List[str]:
        """Non-protected features X, in declaration order."""
        roles = set(self.role_columns)
        return [c.name for c in self.columns if c.name not in roles]

    @property
    def numeric_features(self) -> List[str]:
        return [n for n in self.feature_names if self.kind_of(n) == FeatureKind.NUMERIC]

    @property
    def categorical_features(self) -> List[str]:
        return [n for n in self.feature_names if self.kind_of(n) == FeatureKind.CATEGORICAL]

    def replace_features(self, drop: List[str], add: List[ColumnSpec]) -> "Schema":
        """Copy with some feature columns removed and new ones appended."""
        kept = [c for c in self.columns if c.name not in set(drop)]
        permitted = None
        if self.permitted is not None:
            permitted = [p for p in self.permitted if p not in set(drop)] + [c.name for c in add]
        return self.model_copy(update={"columns": kept + list(add), "permitted": permitted})
