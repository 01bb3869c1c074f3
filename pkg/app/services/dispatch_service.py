"""Business-rules unit commitment.

Each interval is balanced by the fixed rule sequence: surplus transmission,
local storage, storage transmission, flexible generation, flexible
transmission, then storage charging from leftover surplus. Deficit blocks
hand over to ``precharge_service``.
"""

import logging

import numpy as np
from numba import njit

from app.core.config import settings
from app.models.candidate import CandidateSolution
from app.models.dispatch import DispatchState, Direction, Fleet, IntervalLimits, MeritOrder
from app.models.network import RouteTable
from app.models.scenario import Scenario
from app.services.costing_service import penalty_unserved
from app.services.network_service import transmit_arrays

logger = logging.getLogger(__name__)


def generation_by_kind(s: Scenario, c: CandidateSolution) -> dict[str, np.ndarray]:
    """Availability-weighted pv/wind/baseload output per (interval, node), GW."""
    totals = c.generator_total(s)
    out = {kind: np.zeros_like(s.traces.demand) for kind in ("pv", "wind", "baseload")}
    for i, g in enumerate(s.generators):
        if g.kind == "flexible" or totals[i] == 0.0:
            continue
        out[g.kind][:, s.node_index(g.node)] += totals[i] * s.traces.column(g.trace_column)
    return out


def residual_load(s: Scenario, c: CandidateSolution) -> np.ndarray:
    gen = generation_by_kind(s, c)
    return s.traces.demand - gen["pv"] - gen["wind"] - gen["baseload"]


def init_storage(s: Scenario, c: CandidateSolution) -> np.ndarray:
    return 0.5 * c.storage_total_energy(s)


def merit_order(s: Scenario, power: np.ndarray, energy: np.ndarray, flex_gen: np.ndarray) -> MeritOrder:
    n = len(s.nodes)
    storages: list[list[tuple]] = [[] for _ in range(n)]
    for i, st in enumerate(s.storages):
        if power[i] <= 0.0 or energy[i] <= 0.0:
            continue
        storages[s.node_index(st.node)].append((energy[i] / power[i], st.id, i))
    flexibles: list[list[tuple]] = [[] for _ in range(n)]
    for k, gi in enumerate(flex_gen):
        g = s.generators[gi]
        cost = s.resolve_cost(g.cost)
        flexibles[s.node_index(g.node)].append((cost.vom + cost.fuel, g.id, k))
    return MeritOrder(
        storages=tuple(tuple(e[-1] for e in sorted(group)) for group in storages),
        flexibles=tuple(tuple(e[-1] for e in sorted(group)) for group in flexibles),
    )


def build_fleet(s: Scenario, c: CandidateSolution) -> Fleet:
    power = c.storage_total_power(s)
    energy = c.storage_total_energy(s)
    flex_gen = np.array(s.flexible_indices, dtype=np.intp)
    gen_total = c.generator_total(s)
    flex_energy = np.array(
        [np.inf if s.generators[i].annual_energy is None else s.generators[i].annual_energy for i in flex_gen],
        dtype=float,
    )
    return Fleet(
        n_nodes=len(s.nodes),
        r=s.r,
        storage_node=np.array([s.node_index(st.node) for st in s.storages], dtype=np.intp),
        storage_power=power,
        storage_energy=energy,
        eta_charge=np.array([st.charge_efficiency for st in s.storages], dtype=float),
        eta_discharge=np.array([st.discharge_efficiency for st in s.storages], dtype=float),
        flex_gen=flex_gen,
        flex_node=np.array([s.node_index(s.generators[i].node) for i in flex_gen], dtype=np.intp),
        flex_power=gen_total[flex_gen] if len(flex_gen) else np.zeros(0),
        flex_energy=flex_energy,
        line_caps=c.line_total(s),
        merit=merit_order(s, power, energy, flex_gen),
        gen_power=gen_total,
    )


def new_state(s: Scenario, c: CandidateSolution) -> DispatchState:
    gen = generation_by_kind(s, c)
    return DispatchState(
        fleet=build_fleet(s, c),
        year_starts=s.year_starts,
        residual=s.traces.demand - gen["pv"] - gen["wind"] - gen["baseload"],
        load=s.traces.demand,
        pv=gen["pv"],
        wind=gen["wind"],
        baseload=gen["baseload"],
        soc_initial=init_storage(s, c),
    )


@njit(cache=True)
def _node_sum(values, nodes, n):
    out = np.zeros(n)
    for i in range(len(values)):
        out[nodes[i]] += values[i]
    return out


@njit(cache=True)
def _where_settled(mask, values, tol):
    """Positive part of ``values`` where ``mask`` is at most ``tol``, zero elsewhere."""
    out = np.zeros(len(values))
    for n in range(len(values)):
        if mask[n] <= tol:
            out[n] = max(values[n], 0.0)
    return out


@njit(cache=True)
def _dispatch_storage(nl, discharge, charge, fa, out):
    out[:] = 0.0
    for n in range(len(fa.storage_ptr) - 1):
        a, b = fa.storage_ptr[n], fa.storage_ptr[n + 1]
        if a == b:
            continue
        most_discharge = 0.0
        most_charge = 0.0
        for k in range(a, b):
            most_discharge += discharge[fa.storage_order[k]]
            most_charge += charge[fa.storage_order[k]]
        residue = min(max(nl[n], -most_charge), most_discharge)
        for k in range(a, b):
            s = fa.storage_order[k]
            if residue > 0.0:
                p = min(residue, discharge[s])
            elif residue < 0.0:
                p = max(residue, -charge[s])
            else:
                break
            out[s] = p
            residue -= p


@njit(cache=True)
def _dispatch_flexible(remaining, flexible, fa, out):
    out[:] = 0.0
    for n in range(len(fa.flex_ptr) - 1):
        a, b = fa.flex_ptr[n], fa.flex_ptr[n + 1]
        if a == b or remaining[n] <= 0.0:
            continue
        most = 0.0
        for k in range(a, b):
            most += flexible[fa.flex_order[k]]
        residue = min(remaining[n], most)
        for k in range(a, b):
            if residue <= 0.0:
                break
            g = fa.flex_order[k]
            p = min(residue, flexible[g])
            out[g] = p
            residue -= p


@njit(cache=True)
def balance_arrays(fa, ra, tol, rl, discharge, charge, flexible,
                   phi_s, phi_f, line_flow, imports, exports, net_load, unserved, spillage):
    """Balance one interval against precomputed limits; every output row is overwritten."""
    n = len(rl)
    line_flow[:] = 0.0
    imports[:] = 0.0
    exports[:] = 0.0
    phi_f[:] = 0.0
    caps = fa.line_caps

    # surplus generation to deficit nodes
    nl = rl.copy()
    if np.any(nl > tol):
        transmit_arrays(ra, np.maximum(nl, 0.0), np.maximum(-nl, 0.0), line_flow, imports, exports, caps)
        nl = rl - imports - exports
    _dispatch_storage(nl, discharge, charge, fa, phi_s)
    remaining = nl - _node_sum(phi_s, fa.storage_node, n)

    # storage discharge capacity to deficit nodes, then local flexible
    if np.any(remaining > tol):
        spare = _where_settled(remaining, _node_sum(discharge - phi_s, fa.storage_node, n), tol)
        transmit_arrays(ra, np.maximum(remaining, 0.0), spare, line_flow, imports, exports, caps)
        nl = rl - imports - exports
        _dispatch_storage(nl, discharge, charge, fa, phi_s)
        _dispatch_flexible(nl - _node_sum(phi_s, fa.storage_node, n), flexible, fa, phi_f)
        remaining = nl - _node_sum(phi_s, fa.storage_node, n) - _node_sum(phi_f, fa.flex_node, n)

    # flexible capacity to deficit nodes
    if np.any(remaining > tol):
        spare = _where_settled(remaining, _node_sum(flexible - phi_f, fa.flex_node, n), tol)
        transmit_arrays(ra, np.maximum(remaining, 0.0), spare, line_flow, imports, exports, caps)
        nl = rl - imports - exports
        _dispatch_flexible(nl - _node_sum(phi_s, fa.storage_node, n), flexible, fa, phi_f)
        remaining = nl - _node_sum(phi_s, fa.storage_node, n) - _node_sum(phi_f, fa.flex_node, n)

    # leftover surplus charges storage elsewhere
    surplus = np.maximum(-remaining, 0.0)
    if np.any(surplus > tol):
        headroom = _where_settled(surplus, _node_sum(charge + phi_s, fa.storage_node, n), tol)
        transmit_arrays(ra, headroom, surplus, line_flow, imports, exports, caps)
        nl = rl - imports - exports
        _dispatch_storage(nl - _node_sum(phi_f, fa.flex_node, n), discharge, charge, fa, phi_s)

    final = rl - imports - exports - _node_sum(phi_s, fa.storage_node, n) - _node_sum(phi_f, fa.flex_node, n)
    net_load[:] = final
    unserved[:] = np.maximum(final, 0.0)
    spillage[:] = np.maximum(-final, 0.0)


@njit(cache=True)
def _forward_limits(fa, soc_start, flex_start, discharge, charge, flexible):
    for i in range(len(soc_start)):
        gamma = soc_start[i]
        discharge[i] = max(min(gamma * fa.eta_discharge[i] / fa.r, fa.storage_power[i]), 0.0)
        charge[i] = max(min((fa.storage_energy[i] - gamma) / (fa.r * fa.eta_charge[i]), fa.storage_power[i]), 0.0)
    for k in range(len(flex_start)):
        flexible[k] = max(min(flex_start[k] / fa.r, fa.flex_power[k]), 0.0)


@njit(cache=True)
def _advance_forward(fa, phi_s, phi_f, soc_start, flex_start, soc, flex_remaining):
    for i in range(len(phi_s)):
        p = phi_s[i]
        delta = fa.r * (max(p, 0.0) / fa.eta_discharge[i] + fa.eta_charge[i] * min(p, 0.0))
        soc[i] = min(max(soc_start[i] - delta, 0.0), fa.storage_energy[i])
    for k in range(len(phi_f)):
        flex_remaining[k] = max(flex_start[k] - fa.r * phi_f[k], 0.0)


@njit(cache=True)
def _forward_span(fa, ra, tol, t_start, t_stop, rho, block_start, year_start, soc_initial, residual,
                  storage, soc, flexible, flex_remaining, line_flow, imports, exports, net_load, unserved, spillage):
    """Forward dispatch over [t_start, t_stop); stops early at the interval that closes a deficit block."""
    discharge = np.zeros(len(fa.storage_power))
    charge = np.zeros(len(fa.storage_power))
    flex_limit = np.zeros(len(fa.flex_power))
    for t in range(t_start, t_stop):
        soc_start = soc_initial if t == 0 else soc[t - 1]
        flex_start = fa.flex_energy if year_start[t] else flex_remaining[t - 1]
        _forward_limits(fa, soc_start, flex_start, discharge, charge, flex_limit)
        balance_arrays(fa, ra, tol, residual[t], discharge, charge, flex_limit, storage[t], flexible[t],
                       line_flow[t], imports[t], exports[t], net_load[t], unserved[t], spillage[t])
        _advance_forward(fa, storage[t], flexible[t], soc_start, flex_start, soc[t], flex_remaining[t])
        deficit = unserved[t].sum() > tol
        if not rho and deficit:
            rho = True
            block_start = t
        elif rho and not deficit:
            return t, rho, block_start
    return t_stop, rho, block_start


@njit(cache=True)
def _reverse_limits(fa, gamma, flex_used, discharge, charge, flexible):
    for i in range(len(gamma)):
        discharge[i] = max(min((fa.storage_energy[i] - gamma[i]) * fa.eta_discharge[i] / fa.r, fa.storage_power[i]), 0.0)
        charge[i] = max(min(gamma[i] / (fa.r * fa.eta_charge[i]), fa.storage_power[i]), 0.0)
    for k in range(len(flex_used)):
        headroom = fa.flex_energy[k] if np.isinf(fa.flex_energy[k]) else fa.flex_energy[k] - flex_used[k]
        flexible[k] = max(min(headroom / fa.r, fa.flex_power[k]), 0.0)


@njit(cache=True)
def _retreat(fa, phi_s, phi_f, soc_after, flex_after, soc, flex_used):
    for i in range(len(phi_s)):
        p = phi_s[i]
        soc[i] = soc_after[i] + fa.r * (max(p, 0.0) / fa.eta_discharge[i] + fa.eta_charge[i] * min(p, 0.0))
    for k in range(len(phi_f)):
        flex_used[k] = flex_after[k] + fa.r * phi_f[k]


@njit(cache=True)
def reverse_scan(fa, ra, tol, t_end, t_floor, soc_reverse, flex_reverse, residual,
                 storage, flexible, line_flow, imports, exports, net_load, unserved, spillage):
    """Reverse-dispatch back from ``t_end`` while the forward run was in deficit; returns the first interval."""
    discharge = np.zeros(len(fa.storage_power))
    charge = np.zeros(len(fa.storage_power))
    flex_limit = np.zeros(len(fa.flex_power))
    t = t_end - 1
    while True:
        forward_deficit_before = t > t_floor and unserved[t - 1].sum() > tol
        _reverse_limits(fa, soc_reverse[t + 1], flex_reverse[t + 1], discharge, charge, flex_limit)
        balance_arrays(fa, ra, tol, residual[t], discharge, charge, flex_limit, storage[t], flexible[t],
                       line_flow[t], imports[t], exports[t], net_load[t], unserved[t], spillage[t])
        _retreat(fa, storage[t], flexible[t], soc_reverse[t + 1], flex_reverse[t + 1], soc_reverse[t], flex_reverse[t])
        if not forward_deficit_before:
            return t
        t -= 1


def interval_limits(state: DispatchState, t: int, direction: Direction = Direction.FORWARD) -> IntervalLimits:
    fleet = state.fleet
    discharge = np.zeros(fleet.n_storages)
    charge = np.zeros(fleet.n_storages)
    flexible = np.zeros(fleet.n_flexibles)
    if direction is Direction.FORWARD:
        _forward_limits(fleet.arrays, state.soc_start(t), state.flex_start(t), discharge, charge, flexible)
    else:
        _reverse_limits(fleet.arrays, state.soc_reverse[t + 1], state.flex_reverse[t + 1], discharge, charge, flexible)
    return IntervalLimits(
        discharge=discharge,
        charge=charge,
        flexible=flexible,
        discharge_node=fleet.storage_by_node(discharge),
        charge_node=fleet.storage_by_node(charge),
        flexible_node=fleet.flex_by_node(flexible),
        direction=direction,
    )


def update_energies(state: DispatchState, t: int, direction: Direction = Direction.FORWARD) -> None:
    fa = state.fleet.arrays
    if direction is Direction.FORWARD:
        _advance_forward(
            fa, state.storage[t], state.flexible[t],
            state.soc_start(t), state.flex_start(t), state.soc[t], state.flex_remaining[t],
        )
    else:
        _retreat(
            fa, state.storage[t], state.flexible[t],
            state.soc_reverse[t + 1], state.flex_reverse[t + 1], state.soc_reverse[t], state.flex_reverse[t],
        )


def balance_interval(
    state: DispatchState,
    t: int,
    rt: RouteTable,
    direction: Direction = Direction.FORWARD,
    track_deficits: bool = True,
) -> DispatchState:
    tol = settings.FIRM_DEFICIT_TOLERANCE
    limits = interval_limits(state, t, direction)
    balance_arrays(
        state.fleet.arrays, rt.arrays, tol, state.residual[t],
        limits.discharge, limits.charge, limits.flexible,
        state.storage[t], state.flexible[t], state.line_flow[t], state.imports[t], state.exports[t],
        state.net_load[t], state.unserved[t], state.spillage[t],
    )
    update_energies(state, t, direction)

    if direction is Direction.FORWARD and track_deficits and not state.rho and state.unserved[t].sum() > tol:
        state.rho = True
        state.block_start = t
    return state


def _run_forward(state: DispatchState, rt: RouteTable, t_start: int, t_stop: int) -> int:
    t, rho, block_start = _forward_span(
        state.fleet.arrays, rt.arrays, settings.FIRM_DEFICIT_TOLERANCE, t_start, t_stop,
        state.rho, state.block_start, state.year_start_mask, state.soc_initial, state.residual,
        state.storage, state.soc, state.flexible, state.flex_remaining, state.line_flow,
        state.imports, state.exports, state.net_load, state.unserved, state.spillage,
    )
    state.rho = bool(rho)
    state.block_start = int(block_start)
    return int(t)


def unit_commit(
    s: Scenario,
    c: CandidateSolution,
    rt: RouteTable,
    early_exit: bool = False,
    precharge: bool = True,
) -> tuple[DispatchState, np.ndarray]:
    """Balance the whole horizon; returns the state and unserved energy per year (GWh)."""
    from app.services import precharge_service

    state = new_state(s, c)
    ue_by_year = np.zeros(s.n_years)
    for y in range(s.n_years):
        span = s.year_slice(y)
        state.rho = False
        t = span.start
        while t < span.stop:
            t = _run_forward(state, rt, t, span.stop)
            if t == span.stop:
                break
            # interval t closed a deficit block
            state.rho = False
            if precharge and precharge_service.run_precharge(state, t, rt):
                balance_interval(state, t, rt)
            t += 1
        if state.rho:
            state.rho = False
            if precharge:
                precharge_service.run_precharge(state, span.stop, rt)

        ue_by_year[y] = s.r * state.unserved[span].sum()
        state.completed_years = y + 1
        if early_exit:
            penalty = penalty_unserved(
                state.unserved[span], s.traces.demand[span], s.reliability_standard, s.r, s.penalty_scale,
            )
            if penalty > 0.0:
                logger.debug("Early exit in year %d with unserved energy %.4f GWh", y, ue_by_year[y])
                break
    # pre-charging may reach back into earlier years
    for y in range(state.completed_years):
        ue_by_year[y] = s.r * state.unserved[s.year_slice(y)].sum()
    return state, ue_by_year
