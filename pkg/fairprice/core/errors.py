"""Exception hierarchy shared by every fairprice module."""
from typing import Optional


class FairPriceError(Exception):
    """Base class; the CLI turns any subclass into a one-line error record."""


class SchemaError(FairPriceError):
    pass


class ParseError(FairPriceError):
    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class CardinalityError(FairPriceError):
    pass


class DomainError(FairPriceError, ValueError):
    pass


class RankError(FairPriceError):
    def __init__(self, column: str, message: Optional[str] = None):
        self.column = column
        super().__init__(message or f"singular weighted normal equations: column {column!r} is collinear")


class DivergenceError(FairPriceError):
    pass


class NormalizationError(FairPriceError):
    pass


class UndefinedMetricError(FairPriceError):
    pass


class ArtifactError(FairPriceError):
    pass


class CircuitOpenError(FairPriceError):
    pass
