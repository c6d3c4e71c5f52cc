import numpy as np
import pytest

from ringid.imprint import WatermarkConfig, build_keyset


@pytest.fixture(scope="session")
def config():
    return WatermarkConfig()


@pytest.fixture(scope="session")
def keyset32(config):
    return build_keyset(32, config, seed=5)


@pytest.fixture
def rs():
    """numpy generator for test inputs (kept apart from the package PRNG)."""
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[num])
