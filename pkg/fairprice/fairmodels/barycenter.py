"""
Barycenter transport of group-conditional predictions.

A prediction s from group a is mapped to P(a) * s + P(b) * F_B^-1(F_A(s)), and
symmetrically for group b, so both groups land on the same mixture of quantile
functions. CDFs follow the engine-wide k/(m+1) convention.
"""
from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

from fairprice.core.errors import DomainError
from fairprice.utils.quantiles import EmpiricalCdf


@dataclass(frozen=True)
class BarycenterMap:
    samples_a: np.ndarray
    samples_b: np.ndarray
    p_a: float
    p_b: float
    _cdf_a: EmpiricalCdf = field(init=False, repr=False, compare=False)
    _cdf_b: EmpiricalCdf = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if abs(self.p_a + self.p_b - 1.0) > 1e-12 or min(self.p_a, self.p_b) < 0:
            raise DomainError("group proportions must be non-negative and sum to 1")
        if self.samples_a.size < 2 or self.samples_b.size < 2:
            raise DomainError("each group needs at least 2 training predictions")
        object.__setattr__(self, "_cdf_a", EmpiricalCdf(self.samples_a))
        object.__setattr__(self, "_cdf_b", EmpiricalCdf(self.samples_b))

    def a_to_b(self, s: np.ndarray) -> np.ndarray:
        return self._cdf_b.inverse(self._cdf_a.cdf(s))

    def b_to_a(self, s: np.ndarray) -> np.ndarray:
        return self._cdf_a.inverse(self._cdf_b.cdf(s))

    def transform_a(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return self.p_a * s + self.p_b * self.a_to_b(s)

    def transform_b(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return self.p_b * s + self.p_a * self.b_to_a(s)

    def transform(self, s: np.ndarray, d: np.ndarray) -> np.ndarray:
        """Maps each prediction through the map of its own group (d = 1 for group a)."""
        s = np.asarray(s, dtype=float)
        is_a = np.asarray(d, dtype=float) == 1.0
        return np.where(is_a, self.transform_a(s), self.transform_b(s))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "samples_a": self.samples_a.tolist(),
            "samples_b": self.samples_b.tolist(),
            "p_a": self.p_a,
            "p_b": self.p_b,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "BarycenterMap":
        return cls(
            samples_a=np.asarray(payload["samples_a"], dtype=float),
            samples_b=np.asarray(payload["samples_b"], dtype=float),
            p_a=float(payload["p_a"]),
            p_b=float(payload["p_b"]),
        )


def fit_barycenter(s: np.ndarray, d: np.ndarray) -> BarycenterMap:
    """Builds the map from training predictions s (own-group) and the D indicator."""
    s = np.asarray(s, dtype=float)
    is_a = np.asarray(d, dtype=float) == 1.0
    if not is_a.any() or is_a.all():
        raise DomainError("barycenter transport needs both groups")
    p_a = float(is_a.mean())
    return BarycenterMap(samples_a=np.sort(s[is_a]), samples_b=np.sort(s[~is_a]), p_a=p_a, p_b=1.0 - p_a)
