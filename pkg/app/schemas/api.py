from pydantic import BaseModel, Field

from app.schemas.scenario import CandidateDocument, Violation


class ScenarioRequest(BaseModel):
    config_path: str
    trace_dir: str | None = None


class SyntheticRequest(BaseModel):
    seed: int = 0
    n_nodes: int = Field(default=3, ge=1)
    n_years: int = Field(default=1, ge=1)
    r: float = Field(default=1.0, gt=0.0)


class ScenarioSummary(BaseModel):
    name: str
    nodes: list[str]
    n_intervals: int
    n_years: int
    generators: int
    storages: int
    lines: int
    scenario_hash: str


class ValidationResponse(BaseModel):
    valid: bool
    violations: list[Violation] = Field(default_factory=list)


class EvaluationRequest(ScenarioRequest):
    candidate: CandidateDocument = Field(default_factory=CandidateDocument)
    early_exit: bool = False
    precharge: bool = True
