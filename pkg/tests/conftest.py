from pathlib import Path

import pytest

from app.models.scenario import Scenario
from app.services.scenario_service import load_scenario
from factories import two_node_scenario

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def golden_scenario() -> Scenario:
    return load_scenario(FIXTURES / "golden" / "config.json")


@pytest.fixture(scope="session")
def precharge_scenario() -> Scenario:
    return load_scenario(FIXTURES / "precharge" / "config.json")


@pytest.fixture(scope="session")
def tutorial_scenario() -> Scenario:
    return load_scenario(FIXTURES / "tutorial" / "config.json")


@pytest.fixture(scope="session")
def network_scenario() -> Scenario:
    return two_node_scenario()
