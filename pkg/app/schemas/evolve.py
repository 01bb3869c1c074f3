from pydantic import BaseModel, ConfigDict, Field

from app.schemas.scenario import CandidateDocument


class DEConfig(BaseModel):
    """Differential-evolution settings. Defaults are starting points, not tuned values."""

    model_config = ConfigDict(extra="forbid")

    population: int = 20
    mutation: tuple[float, float] = (0.5, 1.0)  # dithered per generation
    crossover: float = 0.7
    generations: int = 100
    tol: float = 0.01
    atol: float = 0.0
    seed: int | None = None
    initial_guesses: list[CandidateDocument] = Field(default_factory=list)
    workers: int | None = None
    early_exit: bool = True
    precharge: bool = True


class BoundOverride(BaseModel):
    lower: float | None = None
    upper: float | None = None


class NearOptimalConfig(BaseModel):
    """Three-stage search: free run, capped flexible build, storage floor."""

    de: DEConfig = Field(default_factory=DEConfig)
    flexible_cap_scale: float = 1.0
    storage_technology: str = "pumped_hydro"
    storage_floor_power: float | None = None  # GW summed over the technology; default: stage-2 optimum
    storage_floor_scale: float = 1.2
