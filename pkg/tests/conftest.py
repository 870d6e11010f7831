import pytest

from gstein.gcore import GParams
from gstein.gheat import default_config


@pytest.fixture(scope="session")
def p12():
    return GParams(1.0, 2.0)


@pytest.fixture(scope="session")
def p11():
    return GParams(1.0, 1.0)


@pytest.fixture(scope="session")
def cfg12(p12):
    return default_config(p12)


@pytest.fixture(scope="session")
def cfg11(p11):
    return default_config(p11)
