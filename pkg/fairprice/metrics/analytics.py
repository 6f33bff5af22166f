"""Solidarity (price of fairness) tables and double-lift charts."""
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np
import pandas as pd

from fairprice.core.errors import DomainError

DEFAULT_BANDS = 5
DEFAULT_LIFT_BINS = 10


@dataclass
class SolidarityTable:
    table: pd.DataFrame
    grand_total: float
    n: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cells": self.table.to_dict(orient="records"),
            "grand_total": self.grand_total,
            "n": self.n,
        }


def _grouping(frame: pd.DataFrame, col: str, bands: int) -> pd.Series:
    values = frame[col]
    if pd.api.types.is_numeric_dtype(values) and values.nunique() > bands:
        # equal-frequency bands, labelled by their interval
        return pd.qcut(values, q=bands, duplicates="drop").astype(str)
    return values.astype(str)


def solidarity_table(
    yhat_fair,
    yhat_benchmark,
    frame: pd.DataFrame,
    group_cols: Sequence[str],
    bands: int = DEFAULT_BANDS,
) -> SolidarityTable:
    """
    Mean and total of (fair - benchmark) per cell of one or two grouping
    columns. Numeric columns with more than `bands` distinct values are cut
    into equal-frequency bands first.
    """
    group_cols = list(group_cols)
    if not 1 <= len(group_cols) <= 2:
        raise DomainError("solidarity tables take one or two grouping columns")
    missing = [c for c in group_cols if c not in frame.columns]
    if missing:
        raise DomainError(f"unknown grouping column(s) {missing}")
    if bands < 1:
        raise DomainError("bands must be >= 1")
    diff = np.asarray(yhat_fair, dtype=float) - np.asarray(yhat_benchmark, dtype=float)
    if diff.size != len(frame):
        raise DomainError("premium vectors must align with the frame rows")

    work = pd.DataFrame({c: _grouping(frame.reset_index(drop=True), c, bands) for c in group_cols})
    work["diff"] = diff
    table = (
        work.groupby(group_cols, sort=True, observed=True)["diff"]
        .agg(mean_diff="mean", total_diff="sum", count="size")
        .reset_index()
    )
    return SolidarityTable(table=table, grand_total=float(diff.sum()), n=int(diff.size))


def double_lift(
    yhat_benchmark,
    yhat_fair,
    y_actual,
    d,
    bins: int = DEFAULT_LIFT_BINS,
    labels: Tuple[str, str] = ("a", "b"),
) -> pd.DataFrame:
    """
    Rows sorted by benchmark / fair premium (stable, so ties keep row order)
    and cut into `bins` equal-count bins, the remainder going to the first
    bins. One output row per bin and group, plus an "all" row per bin.
    """
    bench = np.asarray(yhat_benchmark, dtype=float).ravel()
    fair = np.asarray(yhat_fair, dtype=float).ravel()
    y = np.asarray(y_actual, dtype=float).ravel()
    is_a = np.asarray(d, dtype=float).ravel() == 1.0
    if not (bench.size == fair.size == y.size == is_a.size):
        raise DomainError("double lift inputs differ in length")
    if np.any(fair <= 0):
        raise DomainError("fair premiums must be strictly positive for the lift ratio")
    if bins < 1 or bins > bench.size:
        raise DomainError(f"bins must lie in [1, {bench.size}]")

    ratio = bench / fair
    order = np.argsort(ratio, kind="stable")
    rows = []
    for b, idx in enumerate(np.array_split(order, bins), start=1):
        groups = (
            (labels[0], idx[is_a[idx]]),
            (labels[1], idx[~is_a[idx]]),
            ("all", idx),
        )
        for group, members in groups:
            rows.append({
                "bin": b,
                "group": group,
                "count": int(members.size),
                "mean_ratio": float(ratio[members].mean()) if members.size else float("nan"),
                "mean_actual": float(y[members].mean()) if members.size else float("nan"),
                "mean_benchmark": float(bench[members].mean()) if members.size else float("nan"),
                "mean_fair": float(fair[members].mean()) if members.size else float("nan"),
            })
    return pd.DataFrame(rows)
