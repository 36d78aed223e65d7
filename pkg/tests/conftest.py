import numpy as np
import pytest

from grushinlab.geometry import DEFAULT_DIMS, Dims

ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion:>2}: {title}" + (f" | {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def dims():
    return DEFAULT_DIMS


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ALT_DIMS = [Dims(2, 1, 1.0), Dims(1, 1, 2.0), Dims(3, 2, 0.5), Dims(2, 2, 1.5)]
