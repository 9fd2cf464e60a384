import numpy as np
import pytest
from hypothesis import settings

from smoothstl.formula import Predicate, PredicateTable

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def channel(name, i, q, b=0.0, noise=(0.0, 0.0)):
    """Predicate reading channel ``i`` of a ``q``-channel sample, plus ``b``."""
    c = np.zeros(q)
    c[i] = 1.0
    return Predicate.affine(name, c, b, noise)


@pytest.fixture
def table2():
    """Two scalar-channel predicates ``a = s0`` and ``b = s1``."""
    t = PredicateTable(q=2)
    t.add("a", channel("a", 0, 2))
    t.add("b", channel("b", 1, 2))
    return t


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion and return the verdict."""

    def record(number: int, title: str, passed: bool, detail: str, seconds: float) -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2} {title}: {detail} ({seconds:.1f} s)"
        _ACCEPTANCE[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
