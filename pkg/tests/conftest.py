import math

import pytest

from stokes_shrink.geometry import build_geometry

_VERDICTS = {}


@pytest.fixture
def verdict():
    """Record one acceptance line: verdict(number, passed, detail)."""
    def record(number: int, passed: bool, detail: str):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        _VERDICTS[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[k])


@pytest.fixture(scope="session")
def cfg9():
    """R_e = 1, R_i = 1/2, eps = e^-9, so delta = 3."""
    return build_geometry(1.0, 0.5, math.exp(-9.0))


@pytest.fixture(scope="session")
def cfg_far():
    """delta = 12 > 4 delta0, the far-field regime."""
    return build_geometry(1.0, 0.5, math.exp(-144.0))
