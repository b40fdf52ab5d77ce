from __future__ import annotations

from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def drone_scenario_path() -> Path:
    return FIXTURES / "scenarios" / "drone.json"


@pytest.fixture(scope="session")
def model_fixture_dir() -> Path:
    return FIXTURES / "models"
