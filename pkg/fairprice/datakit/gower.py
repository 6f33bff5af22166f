"""
Gower distance over non-protected features and exact nearest neighbours.

Numeric features contribute |x - y| / range, categoricals 0/1 mismatch, and the
distance is the mean over features. A numeric column whose range is degenerate
(max == min) contributes 0 but still counts towards the mean. Nearest-neighbour
search is exact and processed in row blocks so memory stays O(block * n).
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from fairprice.config import settings
from fairprice.core.errors import DomainError
from fairprice.datakit.dataset import Dataset, FrameLike, as_frame
from fairprice.utils.monitor import get_optimal_workers

logger = logging.getLogger(__name__)

Ranges = Mapping[str, Tuple[float, float]]


def gower_distance(x: Mapping[str, object], y: Mapping[str, object], ranges: Ranges) -> float:
    """Gower distance between two records; keys present in `ranges` are numeric."""
    if set(x) != set(y):
        raise DomainError("records must share the same feature set")
    if not x:
        raise DomainError("records have no features")
    total = 0.0
    for name in x:
        if name in ranges:
            lo, hi = ranges[name]
            span = hi - lo
            if span > 0:
                total += min(abs(float(x[name]) - float(y[name])) / span, 1.0)
        else:
            total += 0.0 if str(x[name]) == str(y[name]) else 1.0
    return total / len(x)


@dataclass(frozen=True)
class GowerSpace:
    """Pre-scaled feature arrays. Spaces obtained via take() from one build share categorical codes."""
    scaled: np.ndarray        # numeric columns divided by their range (0 where degenerate)
    codes: np.ndarray         # categorical columns as integer codes
    n_features: int

    @property
    def n(self) -> int:
        return self.scaled.shape[0]

    def take(self, rows: Sequence[int]) -> "GowerSpace":
        rows = np.asarray(rows, dtype=int)
        return GowerSpace(self.scaled[rows], self.codes[rows], self.n_features)

    def distances_from(self, rows: np.ndarray, other: Optional["GowerSpace"] = None) -> np.ndarray:
        """Block of distances, shape (len(rows), other.n)."""
        other = other or self
        acc = np.zeros((len(rows), other.n))
        for f in range(self.scaled.shape[1]):
            acc += np.minimum(np.abs(self.scaled[rows, f][:, None] - other.scaled[None, :, f]), 1.0)
        for f in range(self.codes.shape[1]):
            acc += self.codes[rows, f][:, None] != other.codes[None, :, f]
        return np.minimum(acc / self.n_features, 1.0)


def build_space(data: FrameLike, features: Sequence[str], ranges: Ranges) -> GowerSpace:
    frame = as_frame(data)
    numeric = [f for f in features if f in ranges]
    categorical = [f for f in features if f not in ranges]
    if numeric:
        spans = np.array([ranges[f][1] - ranges[f][0] for f in numeric], dtype=float)
        inv = np.where(spans > 0, 1.0 / np.where(spans > 0, spans, 1.0), 0.0)
        scaled = frame[numeric].to_numpy(dtype=float) * inv
    else:
        scaled = np.zeros((len(frame), 0))
    if categorical:
        codes = np.column_stack([
            pd.factorize(frame[c].astype(str), sort=True)[0] for c in categorical
        ])
    else:
        codes = np.zeros((len(frame), 0), dtype=int)
    return GowerSpace(scaled=scaled, codes=codes, n_features=len(features))


def dataset_space(data: Dataset, features: Optional[Sequence[str]] = None) -> GowerSpace:
    features = list(features) if features is not None else data.schema.feature_names
    return build_space(data, features, {f: data.numeric_ranges[f] for f in features if f in data.numeric_ranges})


def _nn_block(space: GowerSpace, rows: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    dist = space.distances_from(rows)
    dist[np.arange(len(rows)), rows] = np.inf
    # argmin returns the first minimum, i.e. the smallest row index on ties
    j = np.argmin(dist, axis=1)
    return j, dist[np.arange(len(rows)), j]


def nearest_neighbors(space: GowerSpace, block_rows: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Nearest neighbour (j != i) and its distance for every row of `space`."""
    n = space.n
    if n < 2:
        raise DomainError("nearest neighbours need at least 2 rows")
    block = block_rows or settings.distance_block_rows
    blocks = [np.arange(s, min(s + block, n)) for s in range(0, n, block)]
    with ThreadPoolExecutor(max_workers=get_optimal_workers(len(blocks))) as pool:
        results = list(pool.map(lambda rows: _nn_block(space, rows), blocks))
    j = np.concatenate([r[0] for r in results])
    d = np.concatenate([r[1] for r in results])
    return j, d


def nearest_neighbor(data: Dataset, i: int) -> Tuple[int, float]:
    if data.n < 2:
        raise DomainError("nearest neighbour needs at least 2 rows")
    if not 0 <= i < data.n:
        raise DomainError(f"row index {i} out of range")
    j, d = _nn_block(dataset_space(data), np.array([i]))
    return int(j[0]), float(d[0])


@dataclass(frozen=True)
class NeighborPairs:
    """Row i paired with its Gower-nearest row j at distance d (original row indices)."""
    i: np.ndarray
    j: np.ndarray
    d: np.ndarray

    def to_dict(self) -> Dict[str, List]:
        return {"i": self.i.tolist(), "j": self.j.tolist(), "d": self.d.tolist()}


def neighbor_pairs(
    data: Dataset,
    cap: Optional[int] = None,
    seed: Optional[int] = None,
    features: Optional[Sequence[str]] = None,
) -> NeighborPairs:
    """
    Nearest-neighbour pairs for the local Lipschitz metric. With more rows than
    `cap`, a seeded subsample of `cap` rows is drawn and neighbours are searched
    within it.
    """
    cap = settings.lipschitz_cap if cap is None else cap
    rows = np.arange(data.n)
    if data.n > cap:
        rng = np.random.default_rng(settings.seed if seed is None else seed)
        rows = np.sort(rng.choice(data.n, size=cap, replace=False))
        logger.info("Lipschitz pairs: subsampled %d of %d rows", cap, data.n)
    space = dataset_space(data, features).take(rows)
    j, d = nearest_neighbors(space)
    return NeighborPairs(i=rows, j=rows[j], d=d)
