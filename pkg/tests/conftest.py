import os
import sys

import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("repro", derandomize=True, deadline=None, max_examples=40)
settings.load_profile("repro")

ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criterion")


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(int(os.environ.get("SURFNS_TEST_SEED", "0")))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
