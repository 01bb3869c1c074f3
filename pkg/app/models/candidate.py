from dataclasses import dataclass

import numpy as np

from app.core.exceptions import CandidateBoundsError, InvalidBoundsOverrideError, UnknownVariableError
from app.models.scenario import Scenario
from app.schemas.scenario import CandidateDocument, StoragePoint

BOUND_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class CandidateSolution:
    """New-build capacities: GW per generator/storage/line, GWh per storage."""

    generators: np.ndarray
    storage_power: np.ndarray
    storage_energy: np.ndarray
    lines: np.ndarray

    @classmethod
    def zeros(cls, s: Scenario) -> "CandidateSolution":
        return cls(
            generators=np.zeros(len(s.generators)),
            storage_power=np.zeros(len(s.storages)),
            storage_energy=np.zeros(len(s.storages)),
            lines=np.zeros(len(s.lines)),
        )

    def generator_total(self, s: Scenario) -> np.ndarray:
        existing = np.array([g.existing_power for g in s.generators], dtype=float)
        return existing + self.generators

    def storage_total_power(self, s: Scenario) -> np.ndarray:
        existing = np.array([st.existing_power for st in s.storages], dtype=float)
        return existing + self.storage_power

    def storage_total_energy(self, s: Scenario) -> np.ndarray:
        existing = np.array([st.existing_energy for st in s.storages], dtype=float)
        return existing + self.storage_energy

    def line_total(self, s: Scenario) -> np.ndarray:
        existing = np.array([ln.existing_power for ln in s.lines], dtype=float)
        return existing + self.lines

    def to_document(self, s: Scenario) -> CandidateDocument:
        return CandidateDocument(
            generators={g.id: float(v) for g, v in zip(s.generators, self.generators)},
            storages={
                st.id: StoragePoint(power=float(p), energy=float(e))
                for st, p, e in zip(s.storages, self.storage_power, self.storage_energy)
            },
            lines={ln.id: float(v) for ln, v in zip(s.lines, self.lines)},
        )

    @classmethod
    def from_document(cls, s: Scenario, doc: CandidateDocument) -> "CandidateSolution":
        known = {g.id for g in s.generators} | {st.id for st in s.storages} | {ln.id for ln in s.lines}
        for key in list(doc.generators) + list(doc.storages) + list(doc.lines):
            if key not in known:
                raise UnknownVariableError(key)
        storage_power = np.array([doc.storages.get(st.id, StoragePoint()).power for st in s.storages], dtype=float)
        storage_energy = np.array([doc.storages.get(st.id, StoragePoint()).energy for st in s.storages], dtype=float)
        for i, st in enumerate(s.storages):
            if st.duration is not None:
                storage_energy[i] = storage_power[i] * st.duration
        candidate = cls(
            generators=np.array([doc.generators.get(g.id, 0.0) for g in s.generators], dtype=float),
            storage_power=storage_power,
            storage_energy=storage_energy,
            lines=np.array([doc.lines.get(ln.id, 0.0) for ln in s.lines], dtype=float),
        )
        DecisionSpace.from_scenario(s).check(candidate.to_vector(s))
        return candidate

    def to_vector(self, s: Scenario) -> np.ndarray:
        parts = [self.generators, self.storage_power]
        free_energy = [i for i, st in enumerate(s.storages) if st.duration is None]
        parts.append(self.storage_energy[free_energy])
        parts.append(self.lines)
        return np.concatenate(parts).astype(float)

    @classmethod
    def from_vector(cls, s: Scenario, x: np.ndarray) -> "CandidateSolution":
        n_g, n_s, n_l = len(s.generators), len(s.storages), len(s.lines)
        x = np.asarray(x, dtype=float)
        generators = x[:n_g].copy()
        storage_power = x[n_g:n_g + n_s].copy()
        storage_energy = np.zeros(n_s)
        pos = n_g + n_s
        for i, st in enumerate(s.storages):
            if st.duration is None:
                storage_energy[i] = x[pos]
                pos += 1
            else:
                storage_energy[i] = storage_power[i] * st.duration
        lines = x[pos:pos + n_l].copy()
        return cls(generators, storage_power, storage_energy, lines)


@dataclass(frozen=True, eq=False)
class DecisionSpace:
    """Ordered decision variables with their build bounds."""

    names: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def from_scenario(cls, s: Scenario) -> "DecisionSpace":
        names, lower, upper = [], [], []
        for g in s.generators:
            names.append(f"generator:{g.id}")
            lower.append(g.min_build)
            upper.append(g.max_build)
        for st in s.storages:
            names.append(f"storage_power:{st.id}")
            lower.append(st.min_build_power)
            upper.append(st.max_build_power)
        for st in s.storages:
            if st.duration is None:
                names.append(f"storage_energy:{st.id}")
                lower.append(st.min_build_energy)
                upper.append(st.max_build_energy)
        for ln in s.lines:
            names.append(f"line:{ln.id}")
            lower.append(ln.min_build)
            upper.append(ln.max_build)
        return cls(tuple(names), np.array(lower, dtype=float), np.array(upper, dtype=float))

    @property
    def dimension(self) -> int:
        return len(self.names)

    def check(self, x: np.ndarray) -> None:
        for name, value, lo, hi in zip(self.names, x, self.lower, self.upper):
            if value < lo - BOUND_TOLERANCE or value > hi + BOUND_TOLERANCE:
                raise CandidateBoundsError(name, float(value), float(lo), float(hi))

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower - BOUND_TOLERANCE) and np.all(x <= self.upper + BOUND_TOLERANCE))

    def tightened(self, overrides: dict[str, tuple[float | None, float | None]]) -> "DecisionSpace":
        lower, upper = self.lower.copy(), self.upper.copy()
        for name, (lo, hi) in overrides.items():
            if name not in self.names:
                raise UnknownVariableError(name)
            if lo is not None and hi is not None and lo > hi:
                raise InvalidBoundsOverrideError(name, lo, hi)
            i = self.names.index(name)
            if lo is not None:
                lower[i] = max(lower[i], lo)
            if hi is not None:
                upper[i] = min(upper[i], hi)
            if lower[i] > upper[i]:
                raise InvalidBoundsOverrideError(name, float(lower[i]), float(upper[i]))
        return DecisionSpace(self.names, lower, upper)
