"""Engine-wide empirical quantile convention.

Plotting positions are k/(m+1) for the k-th order statistic (ties share their
average rank); the CDF and its inverse interpolate linearly between those
positions and clamp outside the sample range. Barycenter transport, the local
Lipschitz Q0.95 and the median ITE all go through this module so they agree.
"""
from typing import Union

import numpy as np
from scipy.stats import rankdata

ArrayLike = Union[np.ndarray, list]


def quantile(values: ArrayLike, q: float) -> float:
    """Q_q under the k/(m+1) convention; +inf propagates when it is one of the neighbours."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    m = v.size
    if m == 0:
        raise ValueError("quantile of an empty sample")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    h = min(max(q * (m + 1), 1.0), float(m))
    lo = int(np.floor(h))
    frac = h - lo
    lower = v[lo - 1]
    if frac == 0.0 or lo == m:
        return float(lower)
    upper = v[lo]
    if np.isinf(upper) or np.isinf(lower):
        return float(upper if np.isinf(upper) else lower)
    return float(lower + frac * (upper - lower))


class EmpiricalCdf:
    """Monotone empirical CDF F and quantile function F^-1 of one sample."""

    def __init__(self, sample: ArrayLike):
        s = np.asarray(sample, dtype=float).ravel()
        if s.size == 0:
            raise ValueError("EmpiricalCdf needs at least one sample")
        if not np.all(np.isfinite(s)):
            raise ValueError("EmpiricalCdf sample must be finite")
        self.sorted = np.sort(s)
        self.m = s.size
        ranks = rankdata(self.sorted, method="average")
        self._support, first = np.unique(self.sorted, return_index=True)
        self._levels = ranks[first] / (self.m + 1)

    def cdf(self, x: ArrayLike) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self._support, self._levels)

    def inverse(self, u: ArrayLike) -> np.ndarray:
        h = np.clip(np.asarray(u, dtype=float) * (self.m + 1), 1.0, float(self.m))
        return np.interp(h, np.arange(1, self.m + 1, dtype=float), self.sorted)
