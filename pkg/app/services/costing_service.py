"""Annuities, fixed and variable costs, penalties and the system-cost objective.

Capital rates are $/kW and $/kWh, fixed O&M $/kW-yr, VOM and fuel $/MWh.
Capacities are GW/GWh, so capacity terms carry a 10^6 factor and energy
terms a 10^3 factor.
"""

import logging
from dataclasses import dataclass

import numpy as np

from app.core.exceptions import AnnuityError
from app.models.candidate import CandidateSolution
from app.models.dispatch import DispatchState
from app.models.network import RouteTable
from app.models.scenario import ResolvedCost, Scenario
from app.schemas.reports import AssetCost, CostReport

logger = logging.getLogger(__name__)

KW_PER_GW = 1e6
MWH_PER_GWH = 1e3
PENALTY_RELATIVE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class AnnuityFactor:
    af: float
    crf: float


def annuity(dr: float, lifetime: float) -> AnnuityFactor:
    if lifetime < 1:
        raise AnnuityError(lifetime)
    if dr == 0.0:
        af = float(lifetime)
    else:
        af = (1.0 - (1.0 + dr) ** -lifetime) / dr
    return AnnuityFactor(af=af, crf=1.0 / af)


def _build_years(s: Scenario) -> int:
    return s.n_years if s.config.defaults.build_cost_per_year else 1


def _capacity_cost(cost: ResolvedCost, new_power: float, total_power: float,
                   new_energy: float = 0.0, scale: float = 1.0) -> tuple[float, float]:
    crf = annuity(cost.discount_rate, cost.lifetime).crf
    build = KW_PER_GW * scale * (cost.capital_power * new_power + cost.capital_energy * new_energy) * crf
    fom = KW_PER_GW * scale * cost.fom * total_power
    return build, fom


def fixed_costs(s: Scenario, c: CandidateSolution) -> tuple[float, dict[str, AssetCost]]:
    """Horizon fixed cost FC in $ with the per-asset build/FOM breakdown."""
    build_years = _build_years(s)
    years = s.n_years
    assets: dict[str, AssetCost] = {}

    gen_total = c.generator_total(s)
    for i, g in enumerate(s.generators):
        build, fom = _capacity_cost(s.resolve_cost(g.cost), c.generators[i], gen_total[i])
        assets[g.id] = AssetCost(build=build * build_years, fom=fom * years)

    power_total = c.storage_total_power(s)
    for i, st in enumerate(s.storages):
        build, fom = _capacity_cost(
            s.resolve_cost(st.cost), c.storage_power[i], power_total[i], new_energy=c.storage_energy[i],
        )
        assets[st.id] = AssetCost(build=build * build_years, fom=fom * years)

    line_total = c.line_total(s)
    for i, ln in enumerate(s.lines):
        build, fom = _capacity_cost(s.resolve_cost(ln.cost), c.lines[i], line_total[i], scale=ln.length)
        assets[ln.id] = AssetCost(build=build * build_years, fom=fom * years)

    fc = sum(a.build + a.fom for a in assets.values())
    return fc, assets


def variable_costs(state: DispatchState, s: Scenario, n_intervals: int | None = None) -> tuple[float, dict[str, AssetCost]]:
    """Horizon VC in $ over the first ``n_intervals`` dispatched intervals."""
    stop = state.n_intervals if n_intervals is None else n_intervals
    energy = s.r * MWH_PER_GWH
    fleet = state.fleet
    assets: dict[str, AssetCost] = {}

    flex_position = {int(gi): k for k, gi in enumerate(fleet.flex_gen)}
    for i, g in enumerate(s.generators):
        cost = s.resolve_cost(g.cost)
        if g.kind == "flexible":
            generated = state.flexible[:stop, flex_position[i]].sum()
        else:
            generated = fleet.gen_power[i] * s.traces.column(g.trace_column)[:stop].sum()
        assets[g.id] = AssetCost(vom=energy * cost.vom * generated, fuel=energy * cost.fuel * generated)

    discharged = np.clip(state.storage[:stop], 0.0, None).sum(axis=0)
    for i, st in enumerate(s.storages):
        assets[st.id] = AssetCost(vom=energy * s.resolve_cost(st.cost).vom * discharged[i])

    carried = np.abs(state.line_flow[:stop]).sum(axis=0)
    for i, ln in enumerate(s.lines):
        assets[ln.id] = AssetCost(vom=energy * s.resolve_cost(ln.cost).vom * carried[i])

    vc = sum(a.vom + a.fuel for a in assets.values())
    return vc, assets


def penalty_unserved(unserved: np.ndarray, load: np.ndarray, rs: float, r: float, scale: float) -> float:
    total_ue = float(np.sum(unserved))
    allowed = (1.0 - rs) * float(np.sum(load))
    excess = total_ue - allowed
    if excess <= PENALTY_RELATIVE_TOLERANCE * max(float(np.sum(load)), 1.0):
        return 0.0
    return scale * r * MWH_PER_GWH * excess


def penalty_fixed(fc: float, demand_mwh: float, fct: float, scale: float) -> float:
    if np.isinf(fct):
        return 0.0
    return max(fc / demand_mwh - fct, 0.0) * scale


def demand_mwh(s: Scenario) -> float:
    return s.r * MWH_PER_GWH * float(s.traces.demand.sum())


def _merge(fixed: dict[str, AssetCost], variable: dict[str, AssetCost]) -> dict[str, AssetCost]:
    return {
        key: AssetCost(build=f.build, fom=f.fom, vom=variable[key].vom, fuel=variable[key].fuel)
        for key, f in fixed.items()
    }


def evaluate(
    s: Scenario,
    c: CandidateSolution,
    rt: RouteTable,
    early_exit: bool = True,
    precharge: bool = True,
) -> tuple[CostReport, DispatchState | None]:
    """Full cost evaluation; the dispatch state is None when the fixed-cost penalty short-circuits."""
    from app.services.dispatch_service import unit_commit

    demand = demand_mwh(s)
    fc, fixed_assets = fixed_costs(s, c)
    pf_fc = penalty_fixed(fc, demand, s.fixed_cost_threshold, s.penalty_scale)
    if pf_fc > 0.0 and early_exit:
        report = CostReport(
            fc=fc, vc=0.0, pf_ue=0.0, pf_fc=pf_fc, demand_mwh=demand, sc=pf_fc,
            lcoe=fc / demand, early_exit="fixed_cost", assets=fixed_assets,
        )
        return report, None

    state, ue_by_year = unit_commit(s, c, rt, early_exit=early_exit, precharge=precharge)
    pf_ue = 0.0
    for y in range(state.completed_years):
        span = s.year_slice(y)
        pf_ue += penalty_unserved(
            state.unserved[span], s.traces.demand[span], s.reliability_standard, s.r, s.penalty_scale,
        )

    stop = int(s.year_starts[state.completed_years - 1]) + s.year_intervals[state.completed_years - 1]
    vc, variable_assets = variable_costs(state, s, stop)
    assets = _merge(fixed_assets, variable_assets)
    lcoe = (fc + vc) / demand
    unserved = [float(v) for v in ue_by_year[:state.completed_years]]

    if pf_ue > 0.0 and early_exit:
        report = CostReport(
            fc=fc, vc=vc, pf_ue=pf_ue, pf_fc=pf_fc, demand_mwh=demand, sc=pf_ue, lcoe=lcoe,
            early_exit="unserved_energy", assets=assets, unserved_by_year=unserved,
            precharge_episodes=state.precharge_episodes,
        )
        return report, state

    report = CostReport(
        fc=fc, vc=vc, pf_ue=pf_ue, pf_fc=pf_fc, demand_mwh=demand,
        sc=lcoe + pf_ue + pf_fc, lcoe=lcoe, assets=assets, unserved_by_year=unserved,
        precharge_episodes=state.precharge_episodes,
    )
    return report, state


def objective(
    s: Scenario,
    c: CandidateSolution,
    rt: RouteTable,
    early_exit: bool = True,
    precharge: bool = True,
) -> CostReport:
    report, _ = evaluate(s, c, rt, early_exit=early_exit, precharge=precharge)
    return report
