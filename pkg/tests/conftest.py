import sys

import numpy as np
import pytest

from wavekin import build_scenario, desk_scale, initial_state


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Replay the acceptance scoreboard after the run, since default output
    capturing hides the lines printed inside passing tests."""
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "SCOREBOARD", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def desk_scenario():
    """Reduced-resolution scenario shared by the slower integration tests."""
    return build_scenario(desk_scale())


@pytest.fixture()
def desk_state(desk_scenario):
    return initial_state(desk_scenario)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
