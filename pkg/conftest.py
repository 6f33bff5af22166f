import pytest

from fairprice.config import settings
from fairprice.datakit.synth import balanced_spec, confounded_spec, synth_generate

settings.progress = False


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running oracle experiments")


@pytest.fixture(scope="session")
def small_data():
    return synth_generate(balanced_spec(n=300, tau=5.0), seed=7)


@pytest.fixture(scope="session")
def balanced_data():
    return synth_generate(balanced_spec(n=2000, tau=0.0), seed=11)


@pytest.fixture(scope="session")
def confounded_data():
    return synth_generate(confounded_spec(n=2000), seed=13)


@pytest.fixture(scope="session")
def confounded_large():
    return synth_generate(confounded_spec(n=5000), seed=17)
