import pytest
from hypothesis import HealthCheck, settings

from builders import three_map_tree

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


@pytest.fixture
def tree3():
    return three_map_tree()


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion; printed after the run."""
    def record(label, ok, detail):
        status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        ACCEPTANCE_LINES.append(f"{status}  criterion {label}: {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
