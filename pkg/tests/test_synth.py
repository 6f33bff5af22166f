import numpy as np
import pytest

from fairprice.core.errors import DomainError
from fairprice.datakit.synth import (
    CategoricalFeatureSpec,
    GeneratorSpec,
    NumericFeatureSpec,
    balanced_spec,
    confounded_spec,
    synth_generate,
    true_premium,
)


def test_fixed_seed_reproduces_the_table():
    a = synth_generate(balanced_spec(n=200), seed=5)
    b = synth_generate(balanced_spec(n=200), seed=5)
    assert a.frame.equals(b.frame)


def test_metadata_echoes_the_generator():
    spec = balanced_spec(n=200, tau=3.0)
    data = synth_generate(spec, seed=5)
    assert data.metadata["generator"] == spec.model_dump(mode="json")
    assert data.metadata["ground_truth"]["tau"] == 3.0


def test_noise_free_target_equals_true_premium():
    spec = balanced_spec(n=200, tau=2.0, noise_scale=0.0)
    data = synth_generate(spec, seed=1)
    assert data.y == pytest.approx(true_premium(spec, data.frame))


def test_tau_shifts_group_a_only():
    spec = balanced_spec(n=200, tau=5.0, noise_scale=0.0)
    data = synth_generate(spec, seed=1)
    base = true_premium(balanced_spec(n=200, tau=0.0, noise_scale=0.0), data.frame)
    assert data.y - base == pytest.approx(5.0 * data.d)


def test_proxy_feature_is_correlated_with_d():
    data = synth_generate(confounded_spec(n=3000), seed=2)
    corr = np.corrcoef(data.frame["Power"].to_numpy(), data.d)[0, 1]
    assert corr < -0.3


def test_frequency_severity_columns():
    spec = GeneratorSpec(
        n=500,
        numeric=[NumericFeatureSpec(name="Age", loc=40, scale=10, coefficient=0.01)],
        intercept=1.0,
        link="log",
        count_target="ClaimNb",
        exposure="Exposure",
        severity_mean=2.0,
    )
    data = synth_generate(spec, seed=4)
    counts = data.frame["ClaimNb"].to_numpy()
    assert np.all(counts == np.round(counts))
    assert np.all(data.y[counts == 0] == 0.0)
    assert np.all(data.frame["Exposure"].between(0.1, 1.0))


@pytest.mark.parametrize("bad", [
    dict(group_shares=(0.7, 0.7)),
    dict(levels=("F", "F")),
    dict(numeric=[], categorical=[]),
])
def test_invalid_spec_is_rejected(bad):
    spec = balanced_spec(n=100).model_copy(update=bad)
    with pytest.raises(DomainError):
        synth_generate(spec, seed=0)


def test_categorical_probabilities_must_sum_to_one():
    spec = GeneratorSpec(
        n=100,
        categorical=[CategoricalFeatureSpec(name="Region", levels=["a", "b"], probabilities=[0.5, 0.6])],
    )
    with pytest.raises(DomainError):
        synth_generate(spec, seed=0)
