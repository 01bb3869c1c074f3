from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import NamedTuple

import numpy as np

from app.models.network import FlowState


class Direction(str, Enum):
    FORWARD = "forward"
    REVERSE = "reverse"


@dataclass(frozen=True, eq=False)
class MeritOrder:
    """Per node: storage indices by ascending duration, flexible indices by ascending marginal cost."""

    storages: tuple[tuple[int, ...], ...]
    flexibles: tuple[tuple[int, ...], ...]


def _flatten(groups: tuple[tuple[int, ...], ...]) -> tuple[np.ndarray, np.ndarray]:
    order = np.array([i for group in groups for i in group], dtype=np.int64)
    ptr = np.zeros(len(groups) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(group) for group in groups])
    return order, ptr


class FleetArrays(NamedTuple):
    """Fleet parameters for the compiled kernels; merit orders as CSR index arrays."""

    r: float
    storage_node: np.ndarray
    storage_power: np.ndarray
    storage_energy: np.ndarray
    eta_charge: np.ndarray
    eta_discharge: np.ndarray
    flex_node: np.ndarray
    flex_power: np.ndarray
    flex_energy: np.ndarray
    line_caps: np.ndarray
    storage_order: np.ndarray
    storage_ptr: np.ndarray
    flex_order: np.ndarray
    flex_ptr: np.ndarray


@dataclass(frozen=True, eq=False)
class Fleet:
    """Capacities and parameters of one candidate, indexed by asset position."""

    n_nodes: int
    r: float
    storage_node: np.ndarray
    storage_power: np.ndarray
    storage_energy: np.ndarray
    eta_charge: np.ndarray
    eta_discharge: np.ndarray
    flex_gen: np.ndarray  # scenario generator index of each flexible unit
    flex_node: np.ndarray
    flex_power: np.ndarray
    flex_energy: np.ndarray  # annual GWh, inf when unlimited
    line_caps: np.ndarray
    merit: MeritOrder
    gen_power: np.ndarray  # total GW per scenario generator

    @property
    def n_storages(self) -> int:
        return len(self.storage_power)

    @property
    def n_flexibles(self) -> int:
        return len(self.flex_power)

    def storage_by_node(self, values: np.ndarray) -> np.ndarray:
        return np.bincount(self.storage_node, weights=values, minlength=self.n_nodes) if len(values) else np.zeros(self.n_nodes)

    def flex_by_node(self, values: np.ndarray) -> np.ndarray:
        return np.bincount(self.flex_node, weights=values, minlength=self.n_nodes) if len(values) else np.zeros(self.n_nodes)

    @cached_property
    def arrays(self) -> FleetArrays:
        storage_order, storage_ptr = _flatten(self.merit.storages)
        flex_order, flex_ptr = _flatten(self.merit.flexibles)
        return FleetArrays(
            r=float(self.r),
            storage_node=np.ascontiguousarray(self.storage_node, dtype=np.int64),
            storage_power=np.ascontiguousarray(self.storage_power, dtype=float),
            storage_energy=np.ascontiguousarray(self.storage_energy, dtype=float),
            eta_charge=np.ascontiguousarray(self.eta_charge, dtype=float),
            eta_discharge=np.ascontiguousarray(self.eta_discharge, dtype=float),
            flex_node=np.ascontiguousarray(self.flex_node, dtype=np.int64),
            flex_power=np.ascontiguousarray(self.flex_power, dtype=float),
            flex_energy=np.ascontiguousarray(self.flex_energy, dtype=float),
            line_caps=np.ascontiguousarray(self.line_caps, dtype=float),
            storage_order=storage_order,
            storage_ptr=storage_ptr,
            flex_order=flex_order,
            flex_ptr=flex_ptr,
        )


@dataclass(frozen=True, eq=False)
class IntervalLimits:
    discharge: np.ndarray
    charge: np.ndarray
    flexible: np.ndarray
    discharge_node: np.ndarray
    charge_node: np.ndarray
    flexible_node: np.ndarray
    direction: Direction


@dataclass
class PrechargePlan:
    block_start: int
    block_end: int
    pe: np.ndarray
    te: np.ndarray
    fe: np.ndarray
    gamma_max: np.ndarray
    gamma_min: np.ndarray

    @property
    def prechargers(self) -> np.ndarray:
        return self.pe > 0.0

    @property
    def trickle_chargers(self) -> np.ndarray:
        return self.te > 0.0

    @property
    def is_empty(self) -> bool:
        return not bool(np.any(self.pe > 0.0))


@dataclass
class DispatchState:
    """Per-interval dispatch record for one candidate evaluation.

    ``soc[t]`` and ``flex_remaining[t]`` hold values at the end of interval t.
    ``soc_reverse[t]`` holds the start-of-interval energy found while walking
    backward; row ``t_end`` anchors the walk.
    """

    fleet: Fleet
    year_starts: np.ndarray
    residual: np.ndarray
    load: np.ndarray
    pv: np.ndarray
    wind: np.ndarray
    baseload: np.ndarray
    soc_initial: np.ndarray
    storage: np.ndarray = field(init=False)
    soc: np.ndarray = field(init=False)
    flexible: np.ndarray = field(init=False)
    flex_remaining: np.ndarray = field(init=False)
    line_flow: np.ndarray = field(init=False)
    imports: np.ndarray = field(init=False)
    exports: np.ndarray = field(init=False)
    net_load: np.ndarray = field(init=False)
    unserved: np.ndarray = field(init=False)
    spillage: np.ndarray = field(init=False)
    soc_reverse: np.ndarray = field(init=False)
    flex_reverse: np.ndarray = field(init=False)
    year_start_mask: np.ndarray = field(init=False)
    rho: bool = False
    block_start: int = -1
    precharge_episodes: int = 0
    completed_years: int = 0

    def __post_init__(self):
        t, n = self.residual.shape
        s, f, l = self.fleet.n_storages, self.fleet.n_flexibles, len(self.fleet.line_caps)
        self.storage = np.zeros((t, s))
        self.soc = np.zeros((t, s))
        self.flexible = np.zeros((t, f))
        self.flex_remaining = np.zeros((t, f))
        self.line_flow = np.zeros((t, l))
        self.imports = np.zeros((t, n))
        self.exports = np.zeros((t, n))
        self.net_load = np.zeros((t, n))
        self.unserved = np.zeros((t, n))
        self.spillage = np.zeros((t, n))
        self.soc_reverse = np.zeros((t + 1, s))
        self.flex_reverse = np.zeros((t + 1, f))
        self.year_start_mask = np.zeros(t, dtype=np.bool_)
        self.year_start_mask[np.asarray(self.year_starts, dtype=np.int64)] = True

    @property
    def n_intervals(self) -> int:
        return self.residual.shape[0]

    @property
    def surplus(self) -> np.ndarray:
        return np.clip(-self.net_load, 0.0, None)

    def is_year_start(self, t: int) -> bool:
        return bool(self.year_start_mask[t])

    def year_start_of(self, t: int) -> int:
        return int(self.year_starts[np.searchsorted(self.year_starts, t, side="right") - 1])

    def soc_start(self, t: int) -> np.ndarray:
        return self.soc_initial if t == 0 else self.soc[t - 1]

    def flex_start(self, t: int) -> np.ndarray:
        return self.fleet.flex_energy if self.is_year_start(t) else self.flex_remaining[t - 1]

    def flows(self, t: int) -> FlowState:
        n = self.residual.shape[1]
        return FlowState(
            line_flow=self.line_flow[t],
            imports=self.imports[t],
            exports=self.exports[t],
            caps=self.fleet.line_caps,
            fill=np.zeros(n),
            surplus=np.zeros(n),
        )

    def finalize_interval(self, t: int) -> None:
        """Recompute final net load, unserved energy and spillage from the interval's dispatch."""
        fleet = self.fleet
        final = (
            self.residual[t] - self.imports[t] - self.exports[t]
            - fleet.storage_by_node(self.storage[t]) - fleet.flex_by_node(self.flexible[t])
        )
        self.net_load[t] = final
        self.unserved[t] = np.clip(final, 0.0, None)
        self.spillage[t] = np.clip(-final, 0.0, None)

    _SNAPSHOT_FIELDS = ("storage", "soc", "flexible", "flex_remaining", "line_flow", "imports",
                        "exports", "net_load", "unserved", "spillage")

    def snapshot(self, start: int, stop: int) -> dict[str, np.ndarray]:
        return {name: getattr(self, name)[start:stop].copy() for name in self._SNAPSHOT_FIELDS}

    def restore(self, start: int, snap: dict[str, np.ndarray]) -> None:
        for name, values in snap.items():
            getattr(self, name)[start:start + len(values)] = values
