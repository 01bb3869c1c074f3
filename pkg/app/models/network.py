from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class Route:
    """A simple path of lines from a fill node to a surplus node.

    ``signs[k]`` is +1 when power travelling toward the fill node flows in the
    from->to orientation of ``lines[k]``, -1 otherwise.
    """

    fill: int
    legs: int
    index: int
    lines: tuple[int, ...]
    signs: tuple[int, ...]
    nodes: tuple[int, ...]

    @property
    def surplus(self) -> int:
        return self.nodes[-1]


class RouteArrays(NamedTuple):
    """Route table flattened for the compiled transmission kernel.

    Routes of group (legs, fill) occupy rows ``group_start[legs - 1, fill]``
    to ``group_stop[legs - 1, fill]``; unused line slots hold -1.
    """

    fill_order: np.ndarray
    group_start: np.ndarray
    group_stop: np.ndarray
    lines: np.ndarray
    signs: np.ndarray
    n_legs: np.ndarray
    surplus_node: np.ndarray


@dataclass(frozen=True)
class RouteTable:
    n_nodes: int
    max_legs: int
    groups: dict[tuple[int, int], tuple[Route, ...]]
    fill_order: tuple[int, ...]

    def routes(self, fill: int, legs: int) -> tuple[Route, ...]:
        return self.groups.get((fill, legs), ())

    def surplus_nodes(self, fill: int, legs: int) -> tuple[int, ...]:
        return tuple(r.surplus for r in self.routes(fill, legs))

    def __len__(self) -> int:
        return sum(len(g) for g in self.groups.values())

    @cached_property
    def arrays(self) -> RouteArrays:
        width = max(self.max_legs, 1)
        group_start = np.zeros((self.max_legs, self.n_nodes), dtype=np.int64)
        group_stop = np.zeros((self.max_legs, self.n_nodes), dtype=np.int64)
        lines = np.full((len(self), width), -1, dtype=np.int64)
        signs = np.zeros((len(self), width))
        n_legs = np.zeros(len(self), dtype=np.int64)
        surplus_node = np.zeros(len(self), dtype=np.int64)
        row = 0
        for legs in range(1, self.max_legs + 1):
            for fill in range(self.n_nodes):
                group_start[legs - 1, fill] = row
                for route in self.routes(fill, legs):
                    lines[row, :legs] = route.lines
                    signs[row, :legs] = route.signs
                    n_legs[row] = legs
                    surplus_node[row] = route.surplus
                    row += 1
                group_stop[legs - 1, fill] = row
        return RouteArrays(
            fill_order=np.array(self.fill_order, dtype=np.int64),
            group_start=group_start,
            group_stop=group_stop,
            lines=lines,
            signs=signs,
            n_legs=n_legs,
            surplus_node=surplus_node,
        )


@dataclass
class FlowState:
    line_flow: np.ndarray
    imports: np.ndarray
    exports: np.ndarray
    caps: np.ndarray
    fill: np.ndarray
    surplus: np.ndarray

    @classmethod
    def empty(cls, n_nodes: int, caps: np.ndarray) -> "FlowState":
        return cls(
            line_flow=np.zeros(len(caps)),
            imports=np.zeros(n_nodes),
            exports=np.zeros(n_nodes),
            caps=np.asarray(caps, dtype=float),
            fill=np.zeros(n_nodes),
            surplus=np.zeros(n_nodes),
        )
