"""Pareto dominance, non-dominated sorting and crowding distance (all objectives minimized)."""
from typing import List

import numpy as np

from fairprice.core.errors import DomainError


def dominates(u, v) -> bool:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return bool(np.all(u <= v) and np.any(u < v))


def dominance_matrix(F: np.ndarray) -> np.ndarray:
    """M[p, q] is True when row p dominates row q."""
    F = np.asarray(F, dtype=float)
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    return le & lt


def fast_nondominated_sort(F: np.ndarray) -> List[np.ndarray]:
    """
    Fronts F1, F2, ... as arrays of row indices in ascending order. Every row
    lands in exactly one front.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    n = F.shape[0]
    if n == 0:
        return []
    dom = dominance_matrix(F)
    dominated_by = dom.sum(axis=0)
    fronts: List[np.ndarray] = []
    current = np.flatnonzero(dominated_by == 0)
    while current.size:
        fronts.append(current)
        dominated_by = dominated_by - dom[current].sum(axis=0)
        dominated_by[current] = -1
        current = np.flatnonzero(dominated_by == 0)
    return fronts


def front_ranks(F: np.ndarray) -> np.ndarray:
    """1-based front index of every row."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    ranks = np.zeros(F.shape[0], dtype=int)
    for k, front in enumerate(fast_nondominated_sort(F), start=1):
        ranks[front] = k
    return ranks


def crowding_distance(F: np.ndarray) -> np.ndarray:
    """
    Per objective the front is sorted; boundary points get +inf and interior
    points add (next - prev) / (max - min). Objectives with max == min, or with
    a non-finite span, add nothing.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    n, m = F.shape
    if n == 0:
        raise DomainError("crowding distance of an empty front")
    dist = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for j in range(m):
        order = np.argsort(F[:, j], kind="stable")
        col = F[order, j]
        span = col[-1] - col[0]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        if not np.isfinite(span) or span <= 0:
            continue
        dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist
