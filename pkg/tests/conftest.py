import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from safespeed import FlightParams

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def defaults():
    return FlightParams()


@st.composite
def flight_params(draw, max_e=0.05):
    r = draw(st.floats(0.05, 0.5))
    d = draw(st.floats(0.05, 0.6))
    return FlightParams(
        r=r,
        d=d,
        a_max=draw(st.floats(5.0, 40.0)),
        j_max=draw(st.floats(50.0, 400.0)),
        R=r + d + draw(st.floats(0.5, 5.0)),
        e=draw(st.floats(0.0, max_e)),
        S=d + draw(st.floats(2.0, 15.0)),
        tau=draw(st.floats(0.0, 0.05)),
    )


def random_params(rng: np.random.Generator, n: int, max_e=0.05):
    """Independent draws satisfying the FlightParams invariants."""
    out = []
    for _ in range(n):
        r = rng.uniform(0.05, 0.5)
        d = rng.uniform(0.05, 0.6)
        out.append(FlightParams(
            r=r, d=d, a_max=rng.uniform(5, 40), j_max=rng.uniform(50, 400),
            R=r + d + rng.uniform(0.5, 5), e=rng.uniform(0, max_e),
            S=d + rng.uniform(2, 15), tau=rng.uniform(0, 0.05),
        ))
    return out


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
