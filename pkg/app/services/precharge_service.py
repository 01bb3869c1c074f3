"""Storage pre-charging ahead of deficit blocks.

A deficit block is walked backward to find how much energy each storage
should hold when the block opens. Earlier intervals are then adjusted to
charge the shortfall from spillage, from long-duration storage (trickle
charging) and from flexible generation, and the trajectory is reconciled
forward.
"""

import logging

import numpy as np

from app.core.config import settings
from app.models.dispatch import DispatchState, Direction, IntervalLimits, PrechargePlan
from app.models.network import RouteTable
from app.services import dispatch_service
from app.services.network_service import transmit

logger = logging.getLogger(__name__)


def _scan_start(state: DispatchState, t_end: int, rt: RouteTable, t_floor: int) -> int:
    state.soc_reverse[t_end] = state.soc[t_end - 1]
    state.flex_reverse[t_end] = state.flex_remaining[t_end - 1]
    return int(dispatch_service.reverse_scan(
        state.fleet.arrays, rt.arrays, settings.FIRM_DEFICIT_TOLERANCE, t_end, t_floor,
        state.soc_reverse, state.flex_reverse, state.residual, state.storage, state.flexible,
        state.line_flow, state.imports, state.exports, state.net_load, state.unserved, state.spillage,
    ))


def scan_deficit_block(state: DispatchState, t_end: int, rt: RouteTable, t_floor: int | None = None) -> PrechargePlan:
    """Reverse-dispatch the deficit block ending before ``t_end`` and size the pre-charge."""
    fleet = state.fleet
    if t_floor is None:
        t_floor = state.year_start_of(t_end - 1)
    start = _scan_start(state, t_end, rt, t_floor)

    trace = state.soc_reverse[start:t_end + 1]
    gamma_max = trace.max(axis=0)
    gamma_min = trace.min(axis=0)
    at_start = state.soc_reverse[start]
    gamma_plus = state.soc_start(start)

    need = at_start - gamma_min
    headroom = fleet.storage_energy - (gamma_max - at_start) - gamma_plus
    pe = np.where(gamma_plus < need, np.clip(np.minimum(need - gamma_plus, headroom), 0.0, None), 0.0)
    te = np.where(pe > 0.0, 0.0, np.clip(gamma_plus - need, 0.0, None))

    in_merit = np.zeros(fleet.n_storages, dtype=bool)
    for order in fleet.merit.storages:
        in_merit[list(order)] = True
    pe = np.where(in_merit, pe, 0.0)
    te = np.where(in_merit, te, 0.0)

    flex_used = fleet.r * state.flexible[start:t_end].sum(axis=0)
    fe = np.clip(state.flex_start(start) - flex_used, 0.0, None)
    return PrechargePlan(
        block_start=start, block_end=t_end, pe=pe, te=te, fe=fe,
        gamma_max=gamma_max, gamma_min=gamma_min,
    )


def _apportion(amount: float, units: list[int], rooms: np.ndarray) -> np.ndarray:
    """Split ``amount`` across ``units`` in order, each up to its room."""
    out = np.zeros(len(rooms))
    for u in units:
        if amount <= 0.0:
            break
        a = min(amount, rooms[u])
        out[u] = a
        amount -= a
    return out


class _IntervalAdjuster:
    """Moves energy into pre-chargers during one earlier interval."""

    def __init__(self, state: DispatchState, plan: PrechargePlan, t: int, rt: RouteTable):
        self.state = state
        self.plan = plan
        self.t = t
        self.rt = rt
        self.fleet = state.fleet
        self.changed = False

    def charge_rooms(self) -> np.ndarray:
        fleet, plan = self.fleet, self.plan
        phi = self.state.storage[self.t]
        room = np.minimum(np.clip(phi + fleet.storage_power, 0.0, None), plan.pe / (fleet.r * fleet.eta_charge))
        return np.where(plan.pe > 0.0, room, 0.0)

    def trickle_rooms(self) -> np.ndarray:
        fleet, plan = self.fleet, self.plan
        phi = self.state.storage[self.t]
        room = np.minimum(np.clip(fleet.storage_power - phi, 0.0, None), plan.te * fleet.eta_discharge / fleet.r)
        return np.where(plan.te > 0.0, room, 0.0)

    def flex_rooms(self) -> np.ndarray:
        fleet, plan = self.fleet, self.plan
        room = np.minimum(np.clip(fleet.flex_power - self.state.flexible[self.t], 0.0, None), plan.fe / fleet.r)
        return np.clip(room, 0.0, None)

    def charge(self, by_node: np.ndarray) -> None:
        fleet = self.fleet
        rooms = self.charge_rooms()
        for n, order in enumerate(fleet.merit.storages):
            if by_node[n] <= 0.0:
                continue
            a = _apportion(by_node[n], list(order), rooms)
            self.state.storage[self.t] -= a
            self.plan.pe -= fleet.r * fleet.eta_charge * a
        self.plan.pe = np.clip(self.plan.pe, 0.0, None)
        self.changed = True

    def draw(self, source: str, by_node: np.ndarray) -> None:
        fleet = self.fleet
        if source == "spillage":
            return
        if source == "trickle":
            rooms = self.trickle_rooms()
            for n, order in enumerate(fleet.merit.storages):
                if by_node[n] > 0.0:
                    a = _apportion(by_node[n], list(order), rooms)
                    self.state.storage[self.t] += a
                    self.plan.te = np.clip(self.plan.te - fleet.r * a / fleet.eta_discharge, 0.0, None)
        else:
            rooms = self.flex_rooms()
            for n, order in enumerate(fleet.merit.flexibles):
                if by_node[n] > 0.0:
                    a = _apportion(by_node[n], list(order), rooms)
                    self.state.flexible[self.t] += a
                    self.plan.fe = np.clip(self.plan.fe - fleet.r * a, 0.0, None)

    def available(self, source: str) -> np.ndarray:
        if source == "spillage":
            return self.state.spillage[self.t].copy()
        if source == "trickle":
            return self.fleet.storage_by_node(self.trickle_rooms())
        return self.fleet.flex_by_node(self.flex_rooms())

    def run(self, source: str) -> None:
        tol = settings.FIRM_DEFICIT_TOLERANCE
        want = self.fleet.storage_by_node(self.charge_rooms())
        have = self.available(source)
        if want.sum() <= tol or have.sum() <= tol:
            return

        local = np.minimum(want, have)
        if local.sum() > tol:
            self.charge(local)
            self.draw(source, local)
            self.state.finalize_interval(self.t)
            want = self.fleet.storage_by_node(self.charge_rooms())
            have = self.available(source)
            if want.sum() <= tol or have.sum() <= tol:
                return

        fs = self.state.flows(self.t)
        imports_before = fs.imports.copy()
        exports_before = fs.exports.copy()
        fs.fill[:] = want
        fs.surplus[:] = have
        transmit(fs, self.rt)
        received = np.clip(fs.imports - imports_before, 0.0, None)
        sent = np.clip(exports_before - fs.exports, 0.0, None)
        if received.sum() > tol:
            self.charge(received)
            self.draw(source, sent)
        self.state.finalize_interval(self.t)


def adjust_precharge(
    state: DispatchState,
    plan: PrechargePlan,
    t_block_start: int,
    rt: RouteTable,
    journal: dict[int, dict[str, np.ndarray]] | None = None,
) -> int:
    """Charge pre-chargers in the intervals before the block; returns the earliest changed interval."""
    if plan.is_empty:
        return t_block_start
    tol = settings.FIRM_DEFICIT_TOLERANCE
    t_pre = t_block_start
    t = t_block_start - 1
    while t >= 0 and np.any(plan.pe > tol):
        if journal is not None:
            journal[t] = state.snapshot(t, t + 1)
        adjuster = _IntervalAdjuster(state, plan, t, rt)
        for source in ("spillage", "trickle", "flexible"):
            if not np.any(plan.pe > tol):
                break
            adjuster.run(source)
        if adjuster.changed:
            t_pre = t
        t -= 1
    return t_pre


def _feasible(state: DispatchState, t: int, limits: IntervalLimits) -> bool:
    tol = settings.FIRM_DEFICIT_TOLERANCE
    phi = state.storage[t]
    flex = state.flexible[t]
    return bool(
        np.all(phi <= limits.discharge + tol)
        and np.all(-phi <= limits.charge + tol)
        and np.all(flex <= limits.flexible + tol)
    )


def reconcile_forward(state: DispatchState, t_pre: int, t_after: int, rt: RouteTable) -> None:
    """Replay [t_pre, t_after) forward, keeping dispatch where the energies allow it."""
    for t in range(t_pre, t_after):
        limits = dispatch_service.interval_limits(state, t, Direction.FORWARD)
        if _feasible(state, t, limits):
            state.finalize_interval(t)
            dispatch_service.update_energies(state, t, Direction.FORWARD)
        else:
            dispatch_service.balance_interval(state, t, rt, Direction.FORWARD, track_deficits=False)


def run_precharge(state: DispatchState, t_end: int, rt: RouteTable) -> bool:
    """One pre-charge episode for the block [state.block_start, t_end); returns True when kept."""
    block_start = state.block_start
    snap = state.snapshot(block_start, t_end)
    t_floor = max(state.year_start_of(t_end - 1), block_start)
    plan = scan_deficit_block(state, t_end, rt, t_floor)
    if plan.is_empty:
        state.restore(block_start, snap)
        return False

    journal: dict[int, dict[str, np.ndarray]] = {}
    t_pre = adjust_precharge(state, plan, plan.block_start, rt, journal)
    reconcile_forward(state, t_pre, t_end, rt)

    ue_before = snap["unserved"].sum() + sum(row["unserved"].sum() for t, row in journal.items() if t >= t_pre)
    ue_after = state.unserved[t_pre:t_end].sum()
    state.precharge_episodes += 1
    if ue_after > ue_before + settings.FIRM_DEFICIT_TOLERANCE:
        state.restore(block_start, snap)
        for t, row in journal.items():
            state.restore(t, row)
        logger.debug("Pre-charge for block [%d, %d) rolled back", block_start, t_end)
        return False
    logger.debug("Pre-charged block [%d, %d) from interval %d", block_start, t_end, t_pre)
    return True
