"""
Honest causal regression trees over model predictions.

The tree's distinct sampled rows are split into a structure half, used only to
choose splits, and an estimation half, used only to compute leaf effects. A
split maximizes sum_children n_child * (ITE_child - ITE_parent)^2 on the
structure half and must leave at least `min_group` rows of each group in each
child of both halves.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from fairprice.core.errors import DomainError


def leaf_ite(y_a: np.ndarray, y_b: np.ndarray) -> float:
    """mean(Y | a) - mean(Y | b)."""
    y_a = np.asarray(y_a, dtype=float)
    y_b = np.asarray(y_b, dtype=float)
    if y_a.size == 0 or y_b.size == 0:
        raise DomainError("a leaf needs at least one row of each group")
    return float(y_a.mean() - y_b.mean())


@dataclass
class CausalNode:
    feature: int = -1
    threshold: float = 0.0
    left: Optional["CausalNode"] = None
    right: Optional["CausalNode"] = None
    ite: float = 0.0
    n_a: int = 0
    n_b: int = 0
    estimation_rows: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int), repr=False)

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def leaves(self) -> Iterator["CausalNode"]:
        if self.is_leaf:
            yield self
        else:
            yield from self.left.leaves()
            yield from self.right.leaves()

    def to_dict(self) -> Dict[str, Any]:
        if self.is_leaf:
            return {"ite": self.ite, "n_a": self.n_a, "n_b": self.n_b}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }


@dataclass
class CausalTree:
    root: CausalNode
    structure_rows: np.ndarray
    estimation_rows: np.ndarray

    def leaves(self) -> List[CausalNode]:
        return list(self.root.leaves())

    def is_honest(self) -> bool:
        used = set(self.structure_rows.tolist())
        return all(not used.intersection(leaf.estimation_rows.tolist()) for leaf in self.leaves())


class _Sample:
    """Row ids (with multiplicity) of one half, with cached per-row values."""

    def __init__(self, rows: np.ndarray, X: np.ndarray, yhat: np.ndarray, is_a: np.ndarray):
        self.rows = rows
        self.X = X[rows]
        self.y = yhat[rows]
        self.a = is_a[rows].astype(float)

    def subset(self, mask: np.ndarray) -> "_Sample":
        out = object.__new__(_Sample)
        out.rows, out.X, out.y, out.a = self.rows[mask], self.X[mask], self.y[mask], self.a[mask]
        return out

    def counts(self) -> Tuple[int, int]:
        n_a = int(self.a.sum())
        return n_a, int(self.a.size - n_a)

    def ite(self) -> float:
        a = self.a == 1.0
        return leaf_ite(self.y[a], self.y[~a])


class TreeGrower:
    def __init__(self, min_group: int, max_depth: int, mtry: Optional[int], rng: np.random.Generator):
        self.min_group = min_group
        self.max_depth = max_depth
        self.mtry = mtry
        self.rng = rng

    def _features(self, p: int) -> np.ndarray:
        if self.mtry is None or self.mtry >= p:
            return np.arange(p)
        return np.sort(self.rng.choice(p, size=self.mtry, replace=False))

    def best_split(self, s: _Sample, e: _Sample) -> Optional[Tuple[int, float]]:
        mg = self.min_group
        s_na, s_nb = s.counts()
        if min(s_na, s_nb, *e.counts()) < 2 * mg:
            return None
        parent = s.ite()
        best_score, best = 1e-12, None
        e_is_a = e.a == 1.0
        for f in self._features(s.X.shape[1]):
            order = np.argsort(s.X[:, f], kind="stable")
            xs = s.X[order, f]
            a = s.a[order]
            y = s.y[order]
            na_l = np.cumsum(a)[:-1]
            nb_l = np.cumsum(1.0 - a)[:-1]
            sa_l = np.cumsum(y * a)[:-1]
            sb_l = np.cumsum(y * (1.0 - a))[:-1]
            na_r, nb_r = s_na - na_l, s_nb - nb_l
            sa_r, sb_r = sa_l[-1] + y[-1] * a[-1] - sa_l, sb_l[-1] + y[-1] * (1.0 - a[-1]) - sb_l
            mid = 0.5 * (xs[:-1] + xs[1:])
            thresholds = np.where(mid < xs[1:], mid, xs[:-1])

            ea = np.sort(e.X[e_is_a, f])
            eb = np.sort(e.X[~e_is_a, f])
            ea_l = np.searchsorted(ea, thresholds, side="right")
            eb_l = np.searchsorted(eb, thresholds, side="right")
            valid = (
                (xs[:-1] < xs[1:])
                & (na_l >= mg) & (nb_l >= mg) & (na_r >= mg) & (nb_r >= mg)
                & (ea_l >= mg) & (eb_l >= mg) & (ea.size - ea_l >= mg) & (eb.size - eb_l >= mg)
            )
            if not valid.any():
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                ite_l = sa_l / na_l - sb_l / nb_l
                ite_r = sa_r / na_r - sb_r / nb_r
                score = (na_l + nb_l) * (ite_l - parent) ** 2 + (na_r + nb_r) * (ite_r - parent) ** 2
            score = np.where(valid, score, -np.inf)
            k = int(np.argmax(score))
            if score[k] > best_score:
                best_score = float(score[k])
                best = (int(f), float(thresholds[k]))
        return best

    def _leaf(self, e: _Sample) -> CausalNode:
        n_a, n_b = e.counts()
        if min(n_a, n_b) < self.min_group:
            raise DomainError(f"leaf holds {n_a} and {n_b} estimation rows, below min_group={self.min_group}")
        return CausalNode(ite=e.ite(), n_a=n_a, n_b=n_b, estimation_rows=np.unique(e.rows))

    def grow(self, s: _Sample, e: _Sample, depth: int = 0) -> CausalNode:
        if depth >= self.max_depth:
            return self._leaf(e)
        split = self.best_split(s, e)
        if split is None:
            return self._leaf(e)
        f, t = split
        return CausalNode(
            feature=f,
            threshold=t,
            left=self.grow(s.subset(s.X[:, f] <= t), e.subset(e.X[:, f] <= t), depth + 1),
            right=self.grow(s.subset(s.X[:, f] > t), e.subset(e.X[:, f] > t), depth + 1),
        )


def fit_causal_tree(
    X: np.ndarray,
    is_a: np.ndarray,
    yhat: np.ndarray,
    rng: np.random.Generator,
    min_group: int,
    max_depth: int,
    mtry: Optional[int] = None,
) -> Optional[CausalTree]:
    """
    Bootstrap sample, then a random half/half partition of its distinct rows.
    Returns None when either half holds fewer than `min_group` rows of a group.
    """
    n = X.shape[0]
    boot = rng.integers(0, n, size=n)
    distinct = rng.permutation(np.unique(boot))
    half = distinct.size // 2
    in_structure = np.zeros(n, dtype=bool)
    in_structure[distinct[:half]] = True
    s_rows = np.sort(boot[in_structure[boot]])
    e_rows = np.sort(boot[~in_structure[boot]])

    s = _Sample(s_rows, X, yhat, is_a)
    e = _Sample(e_rows, X, yhat, is_a)
    if min(*e.counts(), *s.counts()) < min_group:
        return None
    root = TreeGrower(min_group, max_depth, mtry, rng).grow(s, e)
    return CausalTree(root=root, structure_rows=np.unique(s_rows), estimation_rows=np.unique(e_rows))
