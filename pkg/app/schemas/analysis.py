from typing import Literal

from pydantic import BaseModel, Field

AxisName = Literal["discount_rate", "fuel_cost", "capital_power", "capital_energy", "lifetime", "carbon_price"]


class SensitivityAxis(BaseModel):
    """One-at-a-time grid over one cost input.

    ``scale`` multiplies the resolved baseline value, ``set`` replaces it.
    ``carbon_price`` is always an adder in $/t on fuel, via emissions intensity.
    """

    name: AxisName
    values: list[float]
    technology: str | None = None
    mode: Literal["scale", "set"] = "scale"
    redispatch: Literal["never", "auto", "always"] = "auto"


class SensitivityPlan(BaseModel):
    axes: list[SensitivityAxis] = Field(default_factory=list)


class SolutionVectorDocument(BaseModel):
    labels: list[str]
    z: list[float]
    a: list[float]
    sc_ref: float


class L1Request(BaseModel):
    test: SolutionVectorDocument
    reference: SolutionVectorDocument


class L1Response(BaseModel):
    distance: float
    contributions: dict[str, float]


class SpectrumRequest(BaseModel):
    trace: list[float] = Field(..., min_length=2)
    r: float = 1.0


class SpectrumResponse(BaseModel):
    frequency: list[float]
    magnitude: list[float]
