import logging

import numpy as np
from numba import njit

from app.models.network import FlowState, Route, RouteArrays, RouteTable
from app.models.scenario import Scenario

logger = logging.getLogger(__name__)

FLOW_TOLERANCE = 1e-9


def enumerate_routes(s: Scenario, max_legs: int) -> RouteTable:
    n = len(s.nodes)
    ends = [(s.node_index(ln.from_node), s.node_index(ln.to_node)) for ln in s.lines]
    adjacency: dict[int, list[tuple[int, int]]] = {i: [] for i in range(n)}
    for l, (a, b) in enumerate(ends):
        adjacency[a].append((l, b))
        adjacency[b].append((l, a))

    ids = s.nodes
    line_ids = [ln.id for ln in s.lines]
    groups: dict[tuple[int, int], list[tuple[tuple, Route]]] = {}

    def walk(fill: int, path_nodes: list[int], path_lines: list[int]) -> None:
        here = path_nodes[-1]
        for l, nxt in adjacency[here]:
            if nxt in path_nodes:
                continue
            nodes = path_nodes + [nxt]
            lines = path_lines + [l]
            # power moves nxt -> here; +1 when that matches the line's from->to
            signs = tuple(
                1 if ends[ln][0] == nodes[k + 1] else -1 for k, ln in enumerate(lines)
            )
            legs = len(lines)
            key = (tuple(ids[i] for i in nodes), tuple(line_ids[i] for i in lines))
            route = Route(fill=fill, legs=legs, index=0, lines=tuple(lines), signs=signs, nodes=tuple(nodes))
            groups.setdefault((fill, legs), []).append((key, route))
            if legs < max_legs:
                walk(fill, nodes, lines)

    for fill in range(n):
        walk(fill, [fill], [])

    ordered: dict[tuple[int, int], tuple[Route, ...]] = {}
    for group_key, entries in groups.items():
        entries.sort(key=lambda e: e[0])
        ordered[group_key] = tuple(
            Route(fill=r.fill, legs=r.legs, index=c, lines=r.lines, signs=r.signs, nodes=r.nodes)
            for c, (_, r) in enumerate(entries)
        )
    fill_order = tuple(sorted(range(n), key=lambda i: ids[i]))
    table = RouteTable(n_nodes=n, max_legs=max_legs, groups=ordered, fill_order=fill_order)
    logger.debug("Enumerated %d routes up to %d legs", len(table), max_legs)
    return table


@njit(cache=True)
def _route_room(r, ra, surplus, assigned, line_flow, committed, caps):
    s = ra.surplus_node[r]
    room = surplus[s] - assigned[s]
    for k in range(ra.n_legs[r]):
        l = ra.lines[r, k]
        directed = ra.signs[r, k] * (line_flow[l] + committed[l])
        room = min(room, caps[l] - directed)
    return max(room, 0.0)


@njit(cache=True)
def _fill_from_leg(f, start, stop, ra, fill, surplus, line_flow, imports, exports, caps, committed, assigned):
    committed[:] = 0.0
    assigned[:] = 0.0
    flows = np.zeros(stop - start)
    for c in range(stop - start):
        r = start + c
        mf = _route_room(r, ra, surplus, assigned, line_flow, committed, caps)
        flows[c] = mf
        if mf > 0.0:
            for k in range(ra.n_legs[r]):
                committed[ra.lines[r, k]] += ra.signs[r, k] * mf
            assigned[ra.surplus_node[r]] += mf

    available = flows.sum()
    if available <= FLOW_TOLERANCE:
        return
    scale = min(1.0, fill[f] / available)
    total = 0.0
    for c in range(stop - start):
        amount = flows[c] * scale
        if amount <= 0.0:
            continue
        r = start + c
        for k in range(ra.n_legs[r]):
            line_flow[ra.lines[r, k]] += ra.signs[r, k] * amount
        s = ra.surplus_node[r]
        exports[s] -= amount
        surplus[s] = max(surplus[s] - amount, 0.0)
        total += amount
    imports[f] += total
    fill[f] = max(fill[f] - total, 0.0)


@njit(cache=True)
def transmit_arrays(ra, fill, surplus, line_flow, imports, exports, caps):
    """Fill deficits leg by leg from surplus; arrays are updated in place."""
    if fill.sum() <= FLOW_TOLERANCE or surplus.sum() <= FLOW_TOLERANCE:
        return
    committed = np.zeros(len(line_flow))
    assigned = np.zeros(len(imports))
    for g in range(ra.group_start.shape[0]):
        for f in ra.fill_order:
            if fill[f] <= FLOW_TOLERANCE:
                continue
            start, stop = ra.group_start[g, f], ra.group_stop[g, f]
            reachable = False
            for r in range(start, stop):
                if surplus[ra.surplus_node[r]] > FLOW_TOLERANCE:
                    reachable = True
                    break
            if not reachable:
                continue
            _fill_from_leg(f, start, stop, ra, fill, surplus, line_flow, imports, exports, caps, committed, assigned)
        if fill.sum() <= FLOW_TOLERANCE or surplus.sum() <= FLOW_TOLERANCE:
            break


def max_route_flow(route: Route, fs: FlowState, line_caps: np.ndarray) -> float:
    """Flow a single route could still carry given current line flows."""
    ra = RouteArrays(
        fill_order=np.zeros(0, dtype=np.int64),
        group_start=np.zeros((0, 0), dtype=np.int64),
        group_stop=np.zeros((0, 0), dtype=np.int64),
        lines=np.array([route.lines], dtype=np.int64),
        signs=np.array([route.signs], dtype=float),
        n_legs=np.array([route.legs], dtype=np.int64),
        surplus_node=np.array([route.surplus], dtype=np.int64),
    )
    idle = np.zeros_like(fs.line_flow)
    return float(_route_room(0, ra, fs.surplus, np.zeros_like(fs.surplus), fs.line_flow, idle, line_caps))


def transmit(fs: FlowState, rt: RouteTable) -> FlowState:
    transmit_arrays(rt.arrays, fs.fill, fs.surplus, fs.line_flow, fs.imports, fs.exports, fs.caps)
    return fs
