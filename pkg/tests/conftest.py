import pytest

from zhmsp.graph import build_graph
from zhmsp.generators import gen_fn_mu
from zhmsp.reduction import reduce_full


def chain(L=5, labels=None):
    """S - v1 - ... - D with one vertex per stage; labels default to all of E."""
    edges = [(0, 0, l) for l in range(1, L + 1)]
    full = list(range(L))
    lab = {(l, 0): full for l in range(1, L + 1)}
    if labels:
        lab.update(labels)
    return build_graph([1] * (L + 1), edges, lab)


@pytest.fixture
def chain5():
    return chain(5)


@pytest.fixture(scope="session")
def f2_graph():
    return reduce_full(gen_fn_mu(2))


@pytest.fixture(scope="session")
def f3_graph():
    return reduce_full(gen_fn_mu(3))


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=_criterion_order):
            terminalreporter.write_line(line)


def _criterion_order(line):
    tag = line.split()[1]
    num = "".join(ch for ch in tag if ch.isdigit())
    return int(num), tag
