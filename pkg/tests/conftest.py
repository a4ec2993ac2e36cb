import io
import sys
from datetime import datetime, timezone
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
REPO_ROOT = TESTS_DIR.parent
FIXTURES_DIR = REPO_ROOT / "fixtures"

sys.path.insert(0, str(TESTS_DIR))


@pytest.fixture(scope="session")
def sandy_counties_path() -> Path:
    return FIXTURES_DIR / "sandy_counties.csv"


@pytest.fixture
def utc():
    def _at(*args) -> datetime:
        return datetime(*args, tzinfo=timezone.utc)

    return _at


def text_stream(content: str) -> io.StringIO:
    return io.StringIO(content)
