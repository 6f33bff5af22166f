"""
Exact hypervolume by slicing along the last objective (minimization).

Used to monitor front quality across generations; selection never reads it.
"""
import logging

import numpy as np

from fairprice.core.errors import DomainError
from fairprice.moo.dominance import dominance_matrix

logger = logging.getLogger(__name__)

MAX_OBJECTIVES = 4


def _nondominated(P: np.ndarray) -> np.ndarray:
    P = np.unique(P, axis=0)
    if P.shape[0] <= 1:
        return P
    return P[~dominance_matrix(P).any(axis=0)]


def _hv2(P: np.ndarray, ref: np.ndarray) -> float:
    P = P[np.argsort(P[:, 0], kind="stable")]
    volume, best_y = 0.0, ref[1]
    for x, y in P:
        if y < best_y:
            volume += (ref[0] - x) * (best_y - y)
            best_y = y
    return volume


def _hv(P: np.ndarray, ref: np.ndarray) -> float:
    m = P.shape[1]
    if P.shape[0] == 0:
        return 0.0
    if m == 1:
        return float(ref[0] - P[:, 0].min())
    if m == 2:
        return _hv2(P, ref)
    P = P[np.argsort(P[:, -1], kind="stable")]
    levels = np.append(P[:, -1], ref[-1])
    volume = 0.0
    for i in range(P.shape[0]):
        depth = levels[i + 1] - levels[i]
        if depth <= 0:
            continue
        volume += depth * _hv(_nondominated(P[: i + 1, :-1]), ref[:-1])
    return volume


def hypervolume(points, reference) -> float:
    """
    Lebesgue measure of the union of boxes [p, reference]. Points exceeding the
    reference in any objective are dropped with a warning.
    """
    ref = np.asarray(reference, dtype=float).ravel()
    P = np.asarray(points, dtype=float)
    if P.size == 0:
        return 0.0
    P = np.atleast_2d(P)
    if P.shape[1] != ref.size:
        raise DomainError("points and reference differ in dimension")
    if ref.size > MAX_OBJECTIVES:
        raise DomainError(f"exact hypervolume is limited to {MAX_OBJECTIVES} objectives")
    inside = np.all(P <= ref, axis=1)
    if not inside.all():
        logger.warning("hypervolume: dropped %d point(s) beyond the reference", int((~inside).sum()))
    P = P[inside]
    if P.shape[0] == 0:
        return 0.0
    return float(_hv(_nondominated(P), ref))
