import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from consentify.towers import BaseSpace  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

ACCEPTANCE_LINES: list[str] = []


def to_oracle(t) -> tuple:
    """Package tower -> oracle nested tuple."""
    return (str(t.base),) + tuple(
        tuple((b, frozenset(to_oracle(y) for y in s)) for b, s in level) for level in t.levels
    )


@pytest.fixture
def space2x2() -> BaseSpace:
    return BaseSpace(("alpha", "beta"), (("c", "d"), ("c", "d")))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
