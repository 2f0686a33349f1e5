import pytest

from allpaysearch.auction import AuctionScene

ACCEPTANCE_LINES = []


@pytest.fixture
def record_criterion():
    """Collects one summary line per acceptance criterion."""

    def record(label, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] {label}" + (f" -- {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def r1_scene():
    return AuctionScene(2, 0.5, 0.1)


@pytest.fixture
def r2_scene():
    return AuctionScene(2, 0.8, 0.6)


@pytest.fixture
def r3_scene():
    return AuctionScene(3, 0.5, 0.5)
