import shutil
import sys
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_sources() -> list[Path]:
    return sorted(FIXTURES.rglob("*.py"))


@pytest.fixture
def verify_project(tmp_path) -> Path:
    """A throwaway copy of the small project whose tests exercise the verify harness."""
    dest = tmp_path / "project"
    shutil.copytree(FIXTURES / "verify_project", dest)
    return dest


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.summary_line(number))
