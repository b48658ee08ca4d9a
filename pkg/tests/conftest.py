import itertools

import pytest

from hgff import walks
from hgff.graph import GraphSpec

SMALL_GRID = [(d, n) for d, n in itertools.product((2, 3), (2, 3))]


def named_models(g: GraphSpec):
    return [
        walks.weights_uniform(g),
        walks.weights_nn(g),
        walks.weights_binomial(g, 0.3),
        walks.weights_binomial(g, 0.8),
    ]


@pytest.fixture
def h22():
    return GraphSpec(2, 2)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
