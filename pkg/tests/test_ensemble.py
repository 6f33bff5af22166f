import json

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from fairprice.core.errors import DomainError
from fairprice.ensemble.meta import build_meta_learner, decode, encode, endpoint_genome, gated_premium
from fairprice.ensemble.pipeline import (
    ENSEMBLE,
    EnsembleOptions,
    _merge_endpoints,
    finite_decision_matrix,
    radar_export,
    report_table,
    run_ensemble,
)
from fairprice.fairmodels.base import FairModelKind
from fairprice.metrics.fairness import objective_vector
from fairprice.moo.dominance import dominates
from fairprice.moo.nsga2 import Individual, NsgaConfig
from fairprice.predictors.engine import make_engine


@pytest.fixture(scope="module")
def result(small_data):
    return run_ensemble(
        small_data,
        make_engine("glm"),
        NsgaConfig(population=6, generations=2, seed=1),
        options=EnsembleOptions(objective_subsample=200, donor_k=10, report_models=[FairModelKind.MU, FairModelKind.MO]),
    )


@pytest.fixture
def meta():
    rng = np.random.default_rng(0)
    return build_meta_learner(rng.normal(size=(50, 3)), rng.uniform(90, 110, 50), rng.uniform(90, 110, 50), hidden=4)


def test_genome_layout(meta):
    assert meta.genome_length == 5 * 4 + 4 + 4 * 1 + 1
    genome = np.arange(meta.genome_length, dtype=float)
    np.testing.assert_array_equal(encode(decode(meta, genome)), genome)
    with pytest.raises(DomainError):
        decode(meta, np.zeros(3))


def test_zero_genome_gives_midpoint(meta):
    features = np.zeros((2, 3))
    y_mo, y_mscm = np.array([100.0, 120.0]), np.array([110.0, 100.0])
    np.testing.assert_allclose(meta.gate(features, y_mo, y_mscm), 0.5)
    np.testing.assert_allclose(meta.premium(features, y_mo, y_mscm), [105.0, 110.0])


def test_endpoint_genomes_saturate_gate(meta):
    features = np.zeros((2, 3))
    y_mo, y_mscm = np.array([100.0, 120.0]), np.array([110.0, 100.0])
    np.testing.assert_array_equal(decode(meta, endpoint_genome(meta, True)).premium(features, y_mo, y_mscm), y_mo)
    np.testing.assert_array_equal(decode(meta, endpoint_genome(meta, False)).premium(features, y_mo, y_mscm), y_mscm)


@hsettings(max_examples=100, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(1.0, 1e4), st.floats(1.0, 1e4))
def test_gated_premium_between_base_premiums(gate, a, b):
    out = float(gated_premium(np.array([gate]), np.array([a]), np.array([b]))[0])
    assert min(a, b) - 1e-9 <= out <= max(a, b) + 1e-9


def test_meta_learner_without_features():
    m = build_meta_learner(None, np.array([1.0, 2.0, 3.0]), np.array([2.0, 2.0, 2.0]), include_features=False, hidden=0)
    assert m.genome_length == 3
    np.testing.assert_allclose(m.premium(None, np.array([1.0]), np.array([3.0])), [2.0])


def test_endpoints_match_standalone_base_objectives(result):
    ctx = result.context
    for name, base in (("MO", ctx.y_mo), ("MSCM", ctx.y_mscm)):
        standalone = ctx.objectives_of(base).as_array()
        assert np.all(np.isfinite(standalone))
        np.testing.assert_allclose(result.endpoints[name].as_array(), standalone, rtol=0, atol=1e-9)


def test_report_rows_share_objective_scoring(result):
    rows = {r.model: r for r in result.reports}
    np.testing.assert_allclose(
        objective_vector(rows["MO"]).as_array(), result.endpoints["MO"].as_array(), rtol=0, atol=1e-9,
    )
    np.testing.assert_allclose(
        objective_vector(rows[ENSEMBLE]).as_array(), result.selected.objectives, rtol=0, atol=1e-9,
    )


def test_infinite_lipschitz_is_kept_and_capped_for_topsis():
    archive = [
        Individual(np.zeros(1), np.array([1.0, 0.5, np.inf, 0.1])),
        Individual(np.ones(1), np.array([2.0, 0.1, 3.0, 0.2])),
        Individual(np.full(1, 2.0), np.full(4, np.inf)),
    ]
    kept, tags = _merge_endpoints(archive[:2], archive[2:], ["endpoint:MO"])
    assert tags == ["evolved", "evolved"]
    matrix = finite_decision_matrix([ind.objectives for ind in kept])
    np.testing.assert_array_equal(matrix[:, 2], [7.0, 3.0])
    np.testing.assert_array_equal(finite_decision_matrix(np.full((2, 1), np.inf)), np.ones((2, 1)))
    with pytest.raises(DomainError):
        _merge_endpoints([], archive[2:], ["endpoint:MO"])


def test_selection_lies_on_archive_front(result):
    chosen = result.selected.objectives
    assert any(ind is result.selected for ind in result.archive)
    for endpoint in result.endpoints.values():
        assert not dominates(endpoint.as_array(), chosen)
    for ind in result.archive:
        assert not dominates(ind.objectives, chosen)


def test_result_documents(result):
    frame = result.pareto_frame()
    assert list(frame.columns) == ["solution", "rmse", "dir_gap", "lipschitz_q95", "median_ite_gap", "tag", "closeness"]
    doc = result.selected_document()
    assert set(doc["endpoints"]) == {"MO", "MSCM"}
    assert 0.0 <= doc["closeness"] <= 1.0
    json.dumps(result.pareto_document())
    assert json.loads(json.dumps(result.model.to_dict()))["kind"] == ENSEMBLE


def test_ensemble_premium_between_base_premiums(result, small_data):
    model = result.model
    yhat = model.predict(small_data)
    lo = np.minimum(model.mo.predict(small_data), model.mscm.predict(small_data))
    hi = np.maximum(model.mo.predict(small_data), model.mscm.predict(small_data))
    assert np.all(yhat >= lo - 1e-9) and np.all(yhat <= hi + 1e-9)
    gate = model.gate(small_data)
    assert np.all((gate >= 0.0) & (gate <= 1.0))


def test_report_rows(result):
    table = result.report_frame()
    assert table["model"].tolist() == ["MU", "MO", ENSEMBLE]
    assert set(table["split"]) == {"validation"}
    assert result.evaluations == 6 * 3


@pytest.mark.slow
def test_ensemble_improves_on_base_learners_where_each_is_weak(confounded_data):
    out = run_ensemble(
        confounded_data,
        make_engine("glm"),
        NsgaConfig(population=12, generations=4, seed=3),
        options=EnsembleOptions(report_models=[FairModelKind.MO, FairModelKind.MSCM]),
    )
    rows = {r.model: objective_vector(r) for r in out.reports}
    assert rows[ENSEMBLE].dir_gap <= rows["MSCM"].dir_gap + 1e-9
    assert rows[ENSEMBLE].lipschitz <= rows["MO"].lipschitz + 1e-9


def test_radar_ranks():
    table = pd.DataFrame({
        "model": ["MB", "MU", "Ensemble"],
        "rmse": [1.0, 2.0, 1.5],
        "dir": [0.5, 1.25, 0.75],
        "lipschitz_q95": [5.0, 5.0, 3.0],
        "median_ite": [-2.0, 0.5, 1.0],
    })
    radar = radar_export(table)
    assert radar["rmse"].tolist() == [1, 3, 2]
    assert radar["dir_gap"].tolist() == [3, 1, 1]
    assert radar["lipschitz_q95"].tolist() == [2, 2, 1]
    assert radar["median_ite_gap"].tolist() == [3, 1, 2]
    with pytest.raises(DomainError):
        radar_export(table.drop(columns=["dir"]))


def test_report_table_layout():
    assert list(report_table([]).columns) == ["model", "split", "rmse", "gini", "dir", "lipschitz_q95", "median_ite"]
