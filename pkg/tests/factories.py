"""Scenario builders and dispatch checks shared by the test modules."""

import numpy as np

from app.core.config import settings
from app.models.dispatch import DispatchState
from app.models.scenario import Scenario, TraceSet
from app.schemas.scenario import ScenarioConfig
from app.services.network_service import enumerate_routes


def build_scenario(config: dict, demand, availability: dict | None = None, years: int = 1) -> Scenario:
    """In-memory scenario; ``demand`` is GW with one column per node."""
    demand = np.asarray(demand, dtype=float).reshape(len(demand), -1)
    availability = availability or {}
    ids = tuple(availability)
    columns = np.column_stack([availability[k] for k in ids]) if ids else np.zeros((len(demand), 0))
    n = len(demand) // years
    return Scenario(
        config=ScenarioConfig.model_validate(config),
        traces=TraceSet(demand=demand, availability=np.asarray(columns, dtype=float), availability_ids=ids),
        year_intervals=(n,) * years,
    )


def routes_for(s: Scenario):
    return enumerate_routes(s, settings.max_legs_for(len(s.nodes)))


TWO_NODE_CONFIG = {
    "name": "two-node",
    "nodes": ["A", "B"],
    "lines": [{"id": "A-B", "from": "A", "to": "B", "length": 100.0, "existing_power": 0.5, "max_build": 2.0,
               "cost": {"capital_power": 1.5, "fom": 0.02}}],
    "generators": [
        {"id": "pv_A", "node": "A", "kind": "pv", "technology": "solar", "existing_power": 1.0, "max_build": 3.0,
         "cost": {"capital_power": 1200.0, "fom": 15.0}},
        {"id": "gas", "node": "B", "kind": "flexible", "technology": "gas", "max_build": 3.0,
         "cost": {"capital_power": 900.0, "fom": 10.0, "vom": 5.0, "fuel": 80.0}},
    ],
    "storages": [
        {"id": "battery_A", "node": "A", "technology": "battery", "max_build_power": 1.0, "max_build_energy": 4.0,
         "cost": {"capital_power": 300.0, "capital_energy": 250.0, "fom": 5.0, "lifetime": 15.0}},
        {"id": "phes_B", "node": "B", "technology": "pumped_hydro", "max_build_power": 1.0, "duration": 12.0,
         "charge_efficiency": 0.9, "discharge_efficiency": 0.9,
         "cost": {"capital_power": 2000.0, "capital_energy": 50.0, "fom": 10.0, "lifetime": 60.0}},
    ],
    "reliability": {"RS": 0.999},
}


def two_node_scenario(n_days: int = 2) -> Scenario:
    hours = np.arange(24 * n_days)
    day = np.sin(np.pi * ((hours % 24) - 6) / 12)
    demand = np.column_stack([
        0.8 + 0.2 * np.sin(2 * np.pi * (hours - 10) / 24),
        0.6 + 0.1 * np.sin(2 * np.pi * (hours - 14) / 24),
    ])
    return build_scenario(TWO_NODE_CONFIG, demand, {"pv_A": np.clip(day, 0.0, None)})


BALANCE_TOLERANCE = 1e-6
SOC_TOLERANCE = 1e-9
FLEX_TOLERANCE = 1e-6


def assert_dispatch_invariants(state: DispatchState) -> None:
    fleet = state.fleet
    storage = np.stack([fleet.storage_by_node(row) for row in state.storage])
    flexible = np.stack([fleet.flex_by_node(row) for row in state.flexible])
    residue = (
        state.load - state.pv - state.wind - state.baseload - storage - flexible
        - state.imports - state.exports - state.unserved + state.spillage
    )
    assert np.abs(residue).max(initial=0.0) <= BALANCE_TOLERANCE
    assert np.all(state.unserved >= 0.0) and np.all(state.spillage >= 0.0)

    assert np.all(state.soc >= -SOC_TOLERANCE)
    assert np.all(state.soc <= fleet.storage_energy + SOC_TOLERANCE)
    previous = np.vstack([state.soc_initial, state.soc[:-1]])
    phi = state.storage
    expected = previous - fleet.r * (np.clip(phi, 0.0, None) / fleet.eta_discharge + fleet.eta_charge * np.minimum(phi, 0.0))
    np.testing.assert_allclose(state.soc, expected, atol=BALANCE_TOLERANCE)
    assert np.all(np.abs(phi) <= fleet.storage_power + SOC_TOLERANCE)

    assert np.all(state.flexible >= -FLEX_TOLERANCE)
    assert np.all(state.flexible <= fleet.flex_power + FLEX_TOLERANCE)
    bounds = np.append(state.year_starts, state.n_intervals)
    for start, stop in zip(bounds[:-1], bounds[1:]):
        used = fleet.r * state.flexible[start:stop].sum(axis=0)
        assert np.all(used <= fleet.flex_energy + FLEX_TOLERANCE)

    assert np.all(np.abs(state.line_flow) <= fleet.line_caps + BALANCE_TOLERANCE)
    np.testing.assert_allclose((state.imports + state.exports).sum(axis=1), 0.0, atol=BALANCE_TOLERANCE)
