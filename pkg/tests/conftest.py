import warnings

import pytest
from hypothesis import settings

settings.register_profile("fs", deadline=None, max_examples=60)
settings.load_profile("fs")


@pytest.fixture(autouse=True)
def _quiet_small_window():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="window half-width")
        yield


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def criterion_log():
    def log(n, ok, detail):
        ACCEPTANCE_LINES.append(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
