from fastapi import APIRouter

from app.core.exceptions import ScenarioValidationError
from app.models.scenario import Scenario
from app.schemas.api import ScenarioRequest, ScenarioSummary, SyntheticRequest, ValidationResponse
from app.services import scenario_service
from app.services.scenario_service import load_scenario

router = APIRouter(prefix="/api/v1/scenarios", tags=["scenarios"])


def _summary(s: Scenario) -> ScenarioSummary:
    return ScenarioSummary(
        name=s.name,
        nodes=s.nodes,
        n_intervals=s.n_intervals,
        n_years=s.n_years,
        generators=len(s.generators),
        storages=len(s.storages),
        lines=len(s.lines),
        scenario_hash=scenario_service.scenario_hash(s),
    )


@router.post("/validate", response_model=ValidationResponse)
def validate_scenario(body: ScenarioRequest):
    try:
        load_scenario(body.config_path, body.trace_dir)
    except ScenarioValidationError as e:
        return ValidationResponse(valid=False, violations=e.violations)
    return ValidationResponse(valid=True)


@router.post("/synthetic", response_model=ScenarioSummary)
def synthetic_scenario(body: SyntheticRequest):
    return _summary(scenario_service.make_synthetic(body.seed, body.n_nodes, body.n_years, body.r))
