from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from app.schemas.scenario import (
    CostBlock,
    GeneratorSpec,
    LineSpec,
    ScenarioConfig,
    StorageSpec,
)

NON_FLEXIBLE = ("pv", "wind", "baseload")


@dataclass(frozen=True, eq=False)
class TraceSet:
    """Demand in GW per (interval, node) and availability fractions per (interval, column)."""

    demand: np.ndarray
    availability: np.ndarray
    availability_ids: tuple[str, ...]

    def __post_init__(self):
        self.demand.setflags(write=False)
        self.availability.setflags(write=False)

    @property
    def length(self) -> int:
        return int(self.demand.shape[0])

    def column(self, trace_id: str) -> np.ndarray:
        return self.availability[:, self.availability_ids.index(trace_id)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TraceSet):
            return NotImplemented
        return (
            self.availability_ids == other.availability_ids
            and self.demand.shape == other.demand.shape
            and self.availability.shape == other.availability.shape
            and np.allclose(self.demand, other.demand, rtol=1e-12, atol=0.0)
            and np.allclose(self.availability, other.availability, rtol=1e-12, atol=0.0)
        )


@dataclass(frozen=True)
class ResolvedCost:
    capital_power: float
    capital_energy: float
    fom: float
    vom: float
    fuel: float
    discount_rate: float
    lifetime: float


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    traces: TraceSet
    year_intervals: tuple[int, ...] = field(default=())

    @property
    def name(self) -> str:
        return self.config.name

    @property
    def nodes(self) -> list[str]:
        return self.config.nodes

    @property
    def lines(self) -> list[LineSpec]:
        return self.config.lines

    @property
    def generators(self) -> list[GeneratorSpec]:
        return self.config.generators

    @property
    def storages(self) -> list[StorageSpec]:
        return self.config.storages

    @property
    def r(self) -> float:
        return self.config.horizon.r

    @property
    def reliability_standard(self) -> float:
        return self.config.reliability.standard

    @property
    def fixed_cost_threshold(self) -> float:
        return self.config.reliability.fixed_cost_threshold

    @property
    def penalty_scale(self) -> float:
        return self.config.reliability.penalty_scale

    @property
    def n_intervals(self) -> int:
        return self.traces.length

    @property
    def n_years(self) -> int:
        return len(self.year_intervals)

    @cached_property
    def year_starts(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.year_intervals)[:-1])).astype(int)

    def year_slice(self, y: int) -> slice:
        start = int(self.year_starts[y])
        return slice(start, start + self.year_intervals[y])

    def node_index(self, node_id: str) -> int:
        return self.config.nodes.index(node_id)

    @cached_property
    def flexible_indices(self) -> tuple[int, ...]:
        return tuple(i for i, g in enumerate(self.generators) if g.kind == "flexible")

    def resolve_cost(self, block: CostBlock) -> ResolvedCost:
        d = self.config.defaults

        def pick(name: str, fallback: float) -> float:
            value = getattr(block, name)
            if value is None:
                value = getattr(d, name)
            return fallback if value is None else float(value)

        return ResolvedCost(
            capital_power=pick("capital_power", 0.0),
            capital_energy=pick("capital_energy", 0.0),
            fom=pick("fom", 0.0),
            vom=pick("vom", 0.0),
            fuel=pick("fuel", 0.0),
            discount_rate=pick("discount_rate", 0.05),
            lifetime=pick("lifetime", 30.0),
        )

    def with_config(self, config: ScenarioConfig) -> "Scenario":
        return Scenario(config=config, traces=self.traces, year_intervals=self.year_intervals)
