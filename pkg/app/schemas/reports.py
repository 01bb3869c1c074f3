from pydantic import BaseModel, Field


class AssetCost(BaseModel):
    """Horizon cost of one asset, $."""

    build: float = 0.0
    fom: float = 0.0
    vom: float = 0.0
    fuel: float = 0.0

    @property
    def total(self) -> float:
        return self.build + self.fom + self.vom + self.fuel


class CostReport(BaseModel):
    fc: float
    vc: float
    pf_ue: float
    pf_fc: float
    demand_mwh: float
    sc: float
    lcoe: float
    early_exit: str | None = None  # "fixed_cost" | "unserved_energy"
    assets: dict[str, AssetCost] = Field(default_factory=dict)
    unserved_by_year: list[float] = Field(default_factory=list)  # GWh
    precharge_episodes: int = 0

    @property
    def feasible(self) -> bool:
        return self.pf_ue == 0.0 and self.pf_fc == 0.0


class RunManifest(BaseModel):
    command: str
    scenario_hash: str | None = None
    seed: int
    config: dict = Field(default_factory=dict)
    artifacts: list[str] = Field(default_factory=list)
    duration_seconds: float = 0.0
    version: str
