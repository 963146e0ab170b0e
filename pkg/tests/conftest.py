import pytest

from semibus.cli import bundled_path
from semibus.model import load_scenario


@pytest.fixture(scope="session")
def model1():
    return load_scenario(bundled_path("model1"))


@pytest.fixture(scope="session")
def model2():
    return load_scenario(bundled_path("model2"))


@pytest.fixture(scope="session")
def cta126():
    return load_scenario(bundled_path("cta126"))


@pytest.fixture(scope="session")
def cta84():
    return load_scenario(bundled_path("cta84"))
