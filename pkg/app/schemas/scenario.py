from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

GeneratorKind = Literal["pv", "wind", "baseload", "flexible"]


class CostBlock(BaseModel):
    """Per-asset cost inputs. Unset fields fall back to the scenario defaults."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    capital_power: float | None = None  # $/kW (lines: $/kW-km)
    capital_energy: float | None = None  # $/kWh
    fom: float | None = None  # $/kW-yr (lines: $/kW-km-yr)
    vom: float | None = None  # $/MWh
    fuel: float | None = None  # $/MWh
    discount_rate: float | None = None
    lifetime: float | None = None


class Defaults(CostBlock):
    build_cost_per_year: bool = True


class GeneratorSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str
    node: str
    kind: GeneratorKind
    technology: str = ""
    existing_power: float = 0.0
    min_build: float = 0.0
    max_build: float = 0.0
    annual_energy: float | None = None  # GWh per year, flexible only
    trace: str | None = None  # availability column, non-flexible only
    emissions: float = 0.0  # t/MWh
    cost: CostBlock = Field(default_factory=CostBlock)

    @property
    def trace_column(self) -> str | None:
        if self.kind == "flexible":
            return None
        return self.trace or self.id


class StorageSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str
    node: str
    technology: str = ""
    existing_power: float = 0.0
    existing_energy: float = 0.0
    min_build_power: float = 0.0
    max_build_power: float = 0.0
    min_build_energy: float = 0.0
    max_build_energy: float = 0.0
    duration: float | None = None  # fixed hours: new energy = new power × duration
    charge_efficiency: float = 1.0
    discharge_efficiency: float = 1.0
    cost: CostBlock = Field(default_factory=CostBlock)


class LineSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    id: str
    from_node: str = Field(alias="from")
    to_node: str = Field(alias="to")
    length: float = 0.0
    existing_power: float = 0.0
    min_build: float = 0.0
    max_build: float = 0.0
    cost: CostBlock = Field(default_factory=CostBlock)


class HorizonConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    r: float = 1.0
    years: int | list[int] = 1
    repeat_traces: bool = False


class ReliabilityConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    standard: float = Field(default=1.0, alias="RS")
    fixed_cost_threshold: float = Field(default=float("inf"), alias="FCT")
    penalty_scale: float = 1e6


class ScenarioConfig(BaseModel):
    """The scenario JSON document."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "scenario"
    nodes: list[str]
    lines: list[LineSpec] = Field(default_factory=list)
    generators: list[GeneratorSpec] = Field(default_factory=list)
    storages: list[StorageSpec] = Field(default_factory=list)
    defaults: Defaults = Field(default_factory=Defaults)
    horizon: HorizonConfig = Field(default_factory=HorizonConfig)
    reliability: ReliabilityConfig = Field(default_factory=ReliabilityConfig)


class Violation(BaseModel):
    entity: str
    rule: str
    message: str


class StoragePoint(BaseModel):
    power: float = 0.0
    energy: float = 0.0


class CandidateDocument(BaseModel):
    """New-build capacities keyed by asset id: GW for power, GWh for energy."""

    generators: dict[str, float] = Field(default_factory=dict)
    storages: dict[str, StoragePoint] = Field(default_factory=dict)
    lines: dict[str, float] = Field(default_factory=dict)
