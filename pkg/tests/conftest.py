import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kspme.field import Grid, ScalarField

settings.register_profile(
    "default", deadline=None, max_examples=30, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def unit2():
    return Grid(2, 16, 1.0)


def random_field(grid, seed=0, lo=0.0, hi=1.0):
    rng = np.random.default_rng(seed)
    return ScalarField(grid, rng.uniform(lo, hi, grid.shape))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one ``PASS/FAIL criterion N: detail`` line and return the verdict."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
