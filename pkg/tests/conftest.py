import itertools

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def all_monotone_tables(n: int) -> list[np.ndarray]:
    """Brute force: every 0/1 table on {0,1}^n that respects the componentwise order."""
    size = 1 << n
    pairs = [(v, w) for v in range(size) for w in range(size) if v != w and v & ~w == 0]
    out = []
    for vals in itertools.product((0, 1), repeat=size):
        if all(vals[v] <= vals[w] for v, w in pairs):
            out.append(np.array(vals, dtype=np.uint8))
    return out


@pytest.fixture(scope="session")
def monotone_tables_3():
    return all_monotone_tables(3)


@pytest.fixture(scope="session")
def monotone_tables_4():
    return all_monotone_tables(4)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
