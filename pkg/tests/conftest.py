import warnings
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

CONFIG_DIR = Path(__file__).resolve().parents[1] / "src" / "mixupecp" / "configs"

# one line per acceptance criterion, printed in the terminal summary
CRITERIA: dict = {}


def record(number: int, title: str, passed: bool, detail: str) -> None:
    CRITERIA[number] = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"


@pytest.fixture
def criterion():
    return record


@pytest.fixture(autouse=True)
def _quiet_duplicate_merges():
    from mixupecp.errors import DuplicatePointsWarning

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DuplicatePointsWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[k])
