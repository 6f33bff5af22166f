"""Binary tournament, simulated binary crossover and polynomial mutation."""
from typing import Sequence, Tuple

import numpy as np

from fairprice.core.errors import DomainError

Bounds = Tuple[np.ndarray, np.ndarray]


def as_bounds(bounds, n_genes: int) -> Bounds:
    """(lo, hi) scalars or per-gene sequences, broadcast to n_genes."""
    lo, hi = bounds
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (n_genes,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (n_genes,)).copy()
    if np.any(lo >= hi):
        raise DomainError("every gene needs lower bound < upper bound")
    return lo, hi


def crowded_better(rank_a: int, crowd_a: float, rank_b: int, crowd_b: float) -> bool:
    """True when a strictly wins the crowded comparison against b."""
    if rank_a != rank_b:
        return rank_a < rank_b
    return crowd_a > crowd_b


def tournament_select(ranks: Sequence[int], crowding: Sequence[float], rng: np.random.Generator) -> int:
    """
    Index of the winner of a binary tournament: lower rank wins, then larger
    crowding distance, and a full tie goes to the first candidate drawn.
    """
    n = len(ranks)
    if n == 0:
        raise DomainError("tournament over an empty population")
    first, second = (int(k) for k in rng.integers(0, n, size=2))
    if crowded_better(ranks[second], crowding[second], ranks[first], crowding[first]):
        return second
    return first


def sbx_spread(p1: np.ndarray, p2: np.ndarray, eta_c: float, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Unclipped per-gene SBX children; (c1 + c2) / 2 equals (p1 + p2) / 2."""
    u = rng.random(p1.size)
    beta = np.where(
        u <= 0.5,
        (2.0 * u) ** (1.0 / (eta_c + 1.0)),
        (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta_c + 1.0)),
    )
    c1 = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2)
    c2 = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)
    return c1, c2


def sbx_crossover(
    p1, p2, p_c: float, eta_c: float, bounds: Bounds, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape != p2.shape:
        raise DomainError("parents must have the same length")
    if not 0.0 <= p_c <= 1.0:
        raise DomainError("crossover probability must lie in [0, 1]")
    # the stream advances identically whatever p_c is
    crossover = rng.random() < p_c
    c1, c2 = sbx_spread(p1, p2, eta_c, rng)
    if not crossover:
        return p1.copy(), p2.copy()
    lo, hi = bounds
    return np.clip(c1, lo, hi), np.clip(c2, lo, hi)


def polynomial_mutation(genome, p_m: float, eta_m: float, bounds: Bounds, rng: np.random.Generator) -> np.ndarray:
    """Each gene moves by delta * (hi - lo) with probability p_m, then is clipped."""
    x = np.asarray(genome, dtype=float).copy()
    if not 0.0 <= p_m <= 1.0:
        raise DomainError("mutation probability must lie in [0, 1]")
    lo, hi = bounds
    mutate = rng.random(x.size) < p_m
    r = rng.random(x.size)
    delta = np.where(
        r < 0.5,
        (2.0 * r) ** (1.0 / (eta_m + 1.0)) - 1.0,
        1.0 - (2.0 * (1.0 - r)) ** (1.0 / (eta_m + 1.0)),
    )
    x = np.where(mutate, x + delta * (hi - lo), x)
    return np.clip(x, lo, hi)
