from __future__ import annotations

import numpy as np
import pytest

import helpers


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if helpers.CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(helpers.CRITERIA):
            terminalreporter.write_line(helpers.CRITERIA[n])
