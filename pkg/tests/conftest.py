import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


FIVE_STREET_CONFIG = {
    "streets": [
        {"id": "s600", "length_m": 600},
        {"id": "s800", "length_m": 800},
        {"id": "s1000", "length_m": 1000},
        {"id": "s1200", "length_m": 1200},
        {"id": "s1400", "length_m": 1400},
    ],
    "density_per_m": 0.1,
    "coverage_radius_m": 100,
    "seed": 7,
}
