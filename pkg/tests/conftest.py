import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


def record_criterion(number, checks):
    """Print and keep a PASS/FAIL line for ``checks`` = [(name, passed, detail), ...]."""
    passed = all(ok for _, ok, _ in checks)
    failed = [f"{name} ({detail})" if detail else name for name, ok, detail in checks if not ok]
    shown = "; ".join(failed) if failed else "; ".join(
        f"{name} ({detail})" if detail else name for name, _, detail in checks)
    line = f"CRITERION {number}: {'PASS' if passed else 'FAIL'}  {shown}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return passed, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
