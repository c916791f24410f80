import numpy as np
import pytest

from gmssc.model import Permutation, Request


def random_request(rng, n, max_size=None, demand=None):
    size = int(rng.integers(1, min(max_size or n, n) + 1))
    items = frozenset((rng.choice(n, size=size, replace=False) + 1).tolist())
    k = int(rng.integers(1, size + 1)) if demand is None else demand
    return Request(items, k)


def random_perm(rng, n):
    return Permutation(tuple((rng.permutation(n) + 1).tolist()))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance results, filled in by tests/test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, ok, note = ACCEPTANCE[num]
        line = f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(f"{line}  [{note}]" if note else line)
