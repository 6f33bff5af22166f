import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from fairprice.causalforest.forest import CausalForestParams
from fairprice.core.errors import DomainError, UndefinedMetricError
from fairprice.datakit.gower import NeighborPairs, neighbor_pairs
from fairprice.metrics.accuracy import normalized_gini, rmse
from fairprice.metrics.analytics import double_lift, solidarity_table
from fairprice.metrics.fairness import (
    disparity_impact_ratio,
    fairness_report,
    lipschitz_ratios,
    local_lipschitz,
    objective_vector,
)
from fairprice.metrics.plots import save_curve_svg, save_density_svg, save_scatter_svg, scatter_frames
from fairprice.types import FairnessReport


def _pairs(d):
    return NeighborPairs(i=np.array([0, 1]), j=np.array([1, 0]), d=np.asarray(d, dtype=float))


def test_rmse():
    assert rmse([0.0, 0.0], [5.0, 0.0]) == pytest.approx(3.5355339)
    with pytest.raises(DomainError):
        rmse([1.0], [1.0, 2.0])


def test_gini_perfect_and_reversed():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    assert normalized_gini(y, y) == pytest.approx(1.0)
    assert normalized_gini(y, y[::-1]) == pytest.approx(-1.0)


@hsettings(max_examples=50, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=1000), min_size=2, max_size=30, unique=True))
def test_gini_is_rank_based(values):
    y = np.asarray(values, dtype=float)
    score = np.arange(y.size, dtype=float)
    assert normalized_gini(y, score) == pytest.approx(normalized_gini(y, np.exp(score / 10.0)))
    assert -1.0 - 1e-9 <= normalized_gini(y, score) <= 1.0 + 1e-9


def test_gini_undefined_cases():
    with pytest.raises(UndefinedMetricError):
        normalized_gini([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(UndefinedMetricError):
        normalized_gini([2.0, 2.0], [1.0, 2.0])


def test_disparity_impact_ratio():
    yhat = np.array([8.0, 8.0, 10.0, 10.0])
    d = np.array([1.0, 1.0, 0.0, 0.0])
    assert disparity_impact_ratio(yhat, d) == pytest.approx(0.8)
    assert disparity_impact_ratio(3.0 * yhat, d) == pytest.approx(0.8)
    with pytest.raises(DomainError):
        disparity_impact_ratio(yhat, np.ones(4))


def test_lipschitz_two_rows(small_data):
    two = small_data.subset([0, 1])
    assert local_lipschitz(two, [100.0, 120.0], pairs=_pairs([1.0, 1.0])) == pytest.approx(20.0)
    assert local_lipschitz(two, [100.0, 100.0], pairs=_pairs([0.5, 0.5])) == 0.0
    assert local_lipschitz(two, [100.0, 120.0], pairs=_pairs([0.0, 0.0])) == np.inf


def test_lipschitz_drops_identical_duplicates(small_data):
    assert lipschitz_ratios([5.0, 5.0], _pairs([0.0, 0.0])).size == 0
    with pytest.raises(UndefinedMetricError):
        local_lipschitz(small_data.subset([0, 1]), [5.0, 5.0], pairs=_pairs([0.0, 0.0]))


def test_lipschitz_scales_with_premium(small_data):
    pairs = neighbor_pairs(small_data, seed=1)
    yhat = small_data.y
    base = local_lipschitz(small_data, yhat, pairs=pairs)
    assert local_lipschitz(small_data, 2.0 * yhat, pairs=pairs) == pytest.approx(2.0 * base)


def test_objective_vector_alignment():
    report = FairnessReport(model="MB", split="test", rmse=3.0, gini=0.4, dir=0.8, lipschitz_q95=12.0, median_ite=-2.5)
    np.testing.assert_allclose(objective_vector(report).as_array(), [3.0, 0.2, 12.0, 2.5])


def test_report_rejects_invalid_values():
    with pytest.raises(ValueError):
        FairnessReport(model="MB", split="test", rmse=1.0, gini=0.1, dir=0.0, lipschitz_q95=1.0, median_ite=0.0)


def test_fairness_report_on_true_premium(small_data):
    yhat = small_data.y + 1.0
    report = fairness_report(
        "MB", "train", small_data, yhat, forest_params=CausalForestParams(n_trees=10, seed=2), bins=16,
    )
    assert report.rmse == pytest.approx(1.0)
    assert report.gini == pytest.approx(1.0)
    assert report.lipschitz_q95 >= 0.0
    assert len(report.ite_distribution.histogram_counts) == 16
    assert "ite_summary" in report.to_dict()
    with pytest.raises(DomainError):
        fairness_report("MB", "train", small_data, yhat[:-1])


def test_solidarity_cells():
    frame = pd.DataFrame({"Gender": ["F", "M", "F", "M"], "Region": ["N", "N", "S", "S"]})
    fair = np.array([110.0, 95.0, 105.0, 90.0])
    bench = np.array([100.0, 100.0, 100.0, 100.0])
    sol = solidarity_table(fair, bench, frame, ["Gender"])
    assert sol.grand_total == pytest.approx(0.0)
    assert sol.table["mean_diff"].tolist() == pytest.approx([7.5, -7.5])
    assert sol.table["count"].tolist() == [2, 2]
    two = solidarity_table(fair, bench, frame, ["Gender", "Region"])
    assert len(two.table) == 4
    assert two.table["total_diff"].sum() == pytest.approx(two.grand_total)


def test_solidarity_bands_numeric_columns():
    frame = pd.DataFrame({"Age": np.arange(100, dtype=float)})
    sol = solidarity_table(np.ones(100), np.zeros(100), frame, ["Age"], bands=4)
    assert len(sol.table) == 4
    assert sol.table["count"].tolist() == [25, 25, 25, 25]


@pytest.mark.parametrize("cols", [[], ["A", "B", "C"], ["missing"]])
def test_solidarity_rejects_bad_columns(cols):
    frame = pd.DataFrame({"A": ["x"], "B": ["y"], "C": ["z"]})
    with pytest.raises(DomainError):
        solidarity_table([1.0], [1.0], frame, cols)


def test_double_lift_bins():
    bench = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    fair = np.ones(5)
    d = np.array([1.0, 0.0, 1.0, 0.0, 1.0])
    lift = double_lift(bench, fair, bench, d, bins=2, labels=("F", "M"))
    assert len(lift) == 6
    every = lift[lift["group"] == "all"]
    assert every["count"].tolist() == [3, 2]
    assert every["mean_ratio"].tolist() == pytest.approx([2.0, 4.5])
    first_f = lift[(lift["bin"] == 1) & (lift["group"] == "F")].iloc[0]
    assert first_f["count"] == 2
    assert first_f["mean_actual"] == pytest.approx(2.0)


def test_double_lift_validation():
    with pytest.raises(DomainError):
        double_lift(np.ones(3), np.array([1.0, 0.0, 1.0]), np.ones(3), np.ones(3))
    with pytest.raises(DomainError):
        double_lift(np.ones(3), np.ones(3), np.ones(3), np.ones(3), bins=4)


def test_scatter_frames_and_svgs(tmp_path):
    reports = [
        FairnessReport(model="MB", split="test", rmse=3.0, gini=0.4, dir=0.8, lipschitz_q95=12.0, median_ite=-2.5),
        FairnessReport(model="MU", split="test", rmse=3.5, gini=0.3, dir=1.1, lipschitz_q95=8.0, median_ite=0.5),
    ]
    frames = scatter_frames(reports)
    assert set(frames) == {"dir_gap", "lipschitz_q95", "median_ite_gap"}
    assert frames["dir_gap"]["dir_gap"].tolist() == pytest.approx([0.2, 0.1])
    svg = save_scatter_svg(frames["dir_gap"], "dir_gap", tmp_path / "scatter.svg")
    assert svg.read_text().lstrip().startswith("<?xml")
    hist = pd.DataFrame({"bin_lo": [0.0, 1.0], "bin_hi": [1.0, 2.0], "count": [3, 1]})
    assert save_density_svg({"MB": hist}, tmp_path / "ite.svg").exists()
    curve = pd.DataFrame({"lambda": [0.0, 1.0, 10.0], "val_loss": [1.0, 1.1, 1.3], "disparity": [2.0, 1.0, 0.1]})
    assert save_curve_svg(curve, "lambda", ["val_loss", "disparity"], tmp_path / "curve.svg").exists()
