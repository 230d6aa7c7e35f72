import numpy as np
import pytest

from fsdtiga.geometry import CLAMPED, SIMPLY_SUPPORTED, make_disk, make_rectangle, tag_edge


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small_disk():
    return make_disk(10.0, 3, elements=3)


@pytest.fixture(scope="session")
def small_rect():
    return make_rectangle(4.0, 2.0, 3, 2, 3, 2)


@pytest.fixture(scope="session")
def clamped_rect():
    m = make_rectangle(6.0, 4.0, 3, 3, 4, 3)
    for e in ("left", "right", "bottom", "top"):
        m = tag_edge(m, 0, e, CLAMPED)
    return m


@pytest.fixture(scope="session")
def ss_strip():
    m = make_rectangle(3.0, 30.0, 3, 3, 8, 16)
    m = tag_edge(m, 0, "left", SIMPLY_SUPPORTED)
    return tag_edge(m, 0, "right", SIMPLY_SUPPORTED)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def add(criterion: str, ok: bool, detail: str) -> bool:
        _ACCEPTANCE_LINES.append(f"{criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return add


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
