"""
Plot data for the accuracy / fairness trade-off and ITE densities.

CSV frames are the canonical artifacts; SVG rendering is optional and goes
through matplotlib's non-interactive backend.
"""
import logging
from pathlib import Path
from typing import Dict, Sequence, Union

import pandas as pd

from fairprice.types import FairnessReport

logger = logging.getLogger(__name__)

# dimension name -> aligned (minimized) value of a report
SCATTER_DIMENSIONS = {
    "dir_gap": lambda r: abs(r.dir - 1.0),
    "lipschitz_q95": lambda r: r.lipschitz_q95,
    "median_ite_gap": lambda r: abs(r.median_ite),
}


def scatter_frames(reports: Sequence[FairnessReport]) -> Dict[str, pd.DataFrame]:
    """One frame per fairness dimension: model, split, rmse, fairness value."""
    frames = {}
    for dim, value in SCATTER_DIMENSIONS.items():
        frames[dim] = pd.DataFrame(
            [{"model": r.model, "split": r.split, "rmse": r.rmse, dim: value(r)} for r in reports],
            columns=["model", "split", "rmse", dim],
        )
    return frames


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def save_scatter_svg(frame: pd.DataFrame, dimension: str, path: Union[str, Path]) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.scatter(frame["rmse"], frame[dimension])
    for _, row in frame.iterrows():
        ax.annotate(row["model"], (row["rmse"], row[dimension]), textcoords="offset points", xytext=(4, 4))
    ax.set_xlabel("RMSE")
    ax.set_ylabel(dimension)
    fig.tight_layout()
    path = Path(path)
    # fixed metadata keeps reruns byte-identical
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info("Wrote %s", path)
    return path


def save_density_svg(histograms: Dict[str, pd.DataFrame], path: Union[str, Path]) -> Path:
    """Overlaid ITE histograms (bin_lo, bin_hi, count) normalized to densities."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for name, h in histograms.items():
        width = (h["bin_hi"] - h["bin_lo"]).to_numpy()
        total = h["count"].sum()
        density = h["count"].to_numpy() / (total * width) if total else h["count"].to_numpy()
        ax.step(h["bin_lo"], density, where="post", label=name)
    ax.axvline(0.0, color="grey", linewidth=0.8)
    ax.set_xlabel("leaf ITE")
    ax.set_ylabel("density")
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def save_curve_svg(frame: pd.DataFrame, x: str, ys: Sequence[str], path: Union[str, Path]) -> Path:
    plt = _pyplot()
    fig, axes = plt.subplots(1, len(ys), figsize=(4.5 * len(ys), 4))
    for ax, y in zip(axes if len(ys) > 1 else [axes], ys):
        ax.plot(frame[x], frame[y], marker="o")
        ax.set_xscale("symlog")
        ax.set_xlabel(x)
        ax.set_ylabel(y)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
