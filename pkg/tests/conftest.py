import numpy as np
import pytest
from hypothesis import settings

from oeem.crystal import default_site_catalog
from oeem.spinmodel import load_g_tensors

settings.register_profile("oeem", deadline=None, max_examples=60)
settings.load_profile("oeem")


@pytest.fixture(scope="session")
def g_pair():
    return load_g_tensors()


@pytest.fixture(scope="session")
def catalog():
    return default_site_catalog()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance") or sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
