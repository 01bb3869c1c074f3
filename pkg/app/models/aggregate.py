from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Block:
    start: int
    length: int
    level: float  # MW


@dataclass(frozen=True, eq=False)
class BlockSeries:
    """Step function tiling ``span`` intervals, chronological or by duration rank."""

    blocks: tuple[Block, ...]
    span: int
    error: float
    permutation: np.ndarray | None = None  # source interval of each duration rank

    def __post_init__(self):
        position = 0
        for b in self.blocks:
            if b.start != position or b.length < 1:
                raise ValueError(f"blocks do not tile the span at interval {position}")
            position += b.length
        if position != self.span:
            raise ValueError(f"blocks cover {position} of {self.span} intervals")

    @property
    def levels(self) -> np.ndarray:
        return np.array([b.level for b in self.blocks])

    def values(self) -> np.ndarray:
        return np.repeat(self.levels, [b.length for b in self.blocks])

    @property
    def energy(self) -> float:
        return float(sum(b.level * b.length for b in self.blocks))


@dataclass(frozen=True, eq=False)
class TypicalPeriods:
    period_length: int  # intervals
    representatives: tuple[int, ...]  # period index of each representative
    weights: tuple[int, ...]
    assignment: np.ndarray  # per period: index into ``representatives``
    profiles: np.ndarray  # (len(representatives), period_length)

    def expand(self) -> np.ndarray:
        """Chronological trace rebuilt from the representatives."""
        return self.profiles[self.assignment].ravel()
