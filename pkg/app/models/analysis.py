from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class SolutionVector:
    """Outcome vector z and cost rates a over the same labels; a·z is the horizon cost."""

    labels: tuple[str, ...]
    z: np.ndarray
    a: np.ndarray
    sc_ref: float


@dataclass(frozen=True, eq=False)
class BuildCostVector:
    labels: tuple[str, ...]
    values: np.ndarray  # $/yr

    @property
    def total(self) -> float:
        return float(self.values.sum())


@dataclass(frozen=True, eq=False)
class L1Result:
    distance: float
    contributions: np.ndarray  # $ per label, sums to distance × sc_ref
    labels: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    frequency: np.ndarray  # 1/h
    magnitude: np.ndarray


@dataclass(frozen=True, eq=False)
class ClusterResult:
    labels: np.ndarray  # cluster id per input vector, 0..k_found-1
    medoids: tuple[int, ...]  # input index of each cluster's medoid
    centers: np.ndarray

    @property
    def n_clusters(self) -> int:
        return len(self.medoids)


@dataclass(frozen=True)
class SweepPoint:
    axis: str
    value: float
    lcoe: float
    redispatched: bool
