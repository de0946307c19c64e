import random

import pytest

from wmsr_lab.graph import Digraph


@pytest.fixture
def k2():
    return Digraph(2, frozenset({(0, 1), (1, 0)}))


@pytest.fixture
def cycle3():
    return Digraph.cycle(3)


@pytest.fixture
def rng():
    return random.Random(20240611)


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
