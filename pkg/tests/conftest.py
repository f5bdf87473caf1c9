import os

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session", autouse=True)
def lattice_cache(tmp_path_factory):
    """Keep enumerated lattice balls in a per-session directory."""
    path = os.environ.get("SKEWBALL_CACHE_DIR") or str(tmp_path_factory.mktemp("lattice-cache"))
    os.environ["SKEWBALL_CACHE_DIR"] = path
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if module is None or not module.REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for label, line in module.REPORT.items():
        terminalreporter.write_line(f"criterion {label}: {line}")
