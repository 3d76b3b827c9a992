from pathlib import Path

import numpy as np
import pytest

from lichnerowicz import Exponents, PowerSum, ProblemSpec
from lichnerowicz.mesh import build_interval_mesh, build_radial_mesh

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

_ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record():
    """Record one acceptance line: ``record(number, name, passed, detail)``."""

    def _record(number: int, name: str, passed: bool, detail: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {name}: {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)

    return _record


def radial_spec(n: int = 2000, b=None) -> ProblemSpec:
    d = build_radial_mesh(1.0, 20.0, n, lambda r: r, 3)
    r = d.coords[:, 0]
    g = PowerSum.from_terms([(1.0, 0.5), (-1.0, 3.0)], d.n)
    bb = np.ones(d.n) if b is None else b(r)
    return ProblemSpec(d, -1.0 / r**2, bb, 1.0, Exponents(5, -7), g)


def bump_b(r):
    return 1.0 - 3.0 * (np.abs(r - 2.0) <= 0.25)


def constant_spec(a: float = 0.0, n: int = 50, left="boundary1", right="boundary1") -> ProblemSpec:
    d = build_interval_mesh(1.0, n, left, right)
    return ProblemSpec(d, a, 1.0, 1.0, Exponents(5, -7))


@pytest.fixture(scope="session")
def radial():
    return radial_spec()
