import numpy as np
import pytest

from fairprice.datakit.dataset import build_model_matrix
from fairprice.datakit.synth import GeneratorSpec, NumericFeatureSpec, synth_generate
from fairprice.predictors.engine import (
    DirectPredictor,
    EngineKind,
    FreqSevPredictor,
    GbtEngine,
    GlmEngine,
    make_engine,
    predictor_from_dict,
    select_family,
)
from fairprice.predictors.gbt import GbtParams
from fairprice.predictors.glm import Family, GlmModel
from fairprice.types import Targets


@pytest.fixture(scope="module")
def claims():
    spec = GeneratorSpec(
        n=2000,
        numeric=[NumericFeatureSpec(name="Age", loc=40, scale=10, coefficient=0.02)],
        intercept=6.0,
        link="log",
        count_target="ClaimNb",
        exposure="Exposure",
        severity_mean=500.0,
        noise="gamma",
        noise_scale=0.5,
    )
    return synth_generate(spec, seed=21)


def test_family_follows_target_sign():
    assert select_family(np.array([1.0, 2.0])) == Family.GAMMA
    assert select_family(np.array([0.0, 2.0])) == Family.POISSON


def test_make_engine_dispatches_on_kind():
    assert isinstance(make_engine("glm"), GlmEngine)
    gbt = make_engine(EngineKind.GBT, GbtParams(n_trees=3))
    assert isinstance(gbt, GbtEngine)
    assert gbt.to_dict()["params"]["n_trees"] == 3


def test_count_target_gives_frequency_times_severity(claims):
    mm = build_model_matrix(claims)
    predictor = GlmEngine().fit(mm, claims.targets())
    assert isinstance(predictor, FreqSevPredictor)
    exposure = claims.exposure()
    freq, sev = predictor.predict_components(mm, exposure)
    assert np.array_equal(predictor.predict(mm, exposure), freq * sev)
    assert predictor.frequency.model.family == Family.POISSON
    assert predictor.severity.model.family == Family.GAMMA


def test_without_count_the_amount_is_modelled_directly(claims):
    mm = build_model_matrix(claims)
    predictor = GlmEngine().fit(mm, Targets(amount=claims.y, exposure=claims.exposure()))
    assert isinstance(predictor, DirectPredictor)
    assert predictor.model.family == Family.POISSON  # zero claims present
    assert predictor.uses_offset


def test_family_override(small_data):
    mm = build_model_matrix(small_data)
    predictor = GlmEngine(family=Family.GAUSSIAN).fit(mm, Targets(amount=small_data.y))
    assert predictor.model.family == Family.GAUSSIAN
    assert not predictor.uses_offset


def test_predictor_round_trips_through_dict(claims):
    mm = build_model_matrix(claims)
    predictor = make_engine("gbt", GbtParams(n_trees=5, min_leaf=20)).fit(mm, claims.targets())
    again = predictor_from_dict(predictor.to_dict())
    exposure = claims.exposure()
    assert np.array_equal(again.predict(mm, exposure), predictor.predict(mm, exposure))


def test_frequency_severity_is_calibrated_in_total(claims):
    mm = build_model_matrix(claims)
    predictor = GlmEngine().fit(mm, claims.targets())
    assert predictor.predict(mm, claims.exposure()).sum() == pytest.approx(claims.y.sum(), rel=0.05)
    assert isinstance(predictor.frequency.model, GlmModel)
