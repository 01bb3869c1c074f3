from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from app.core.exceptions import ArchiveFormatError

TECHNOLOGY_PREFIX = "tech:"
_FIXED_COLUMNS = ("generation", "fc", "sc", "build_cost", "feasible")


@dataclass(frozen=True)
class ArchiveEntry:
    generation: int
    vector: tuple[float, ...]
    sc: float
    fc: float
    build_cost: float  # annualized, $/yr
    feasible: bool
    technologies: tuple[tuple[str, float], ...] = ()  # new-build GW per technology


@dataclass
class Archive:
    """Every evaluated candidate, in evaluation order."""

    names: tuple[str, ...]
    entries: list[ArchiveEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i: int) -> ArchiveEntry:
        return self.entries[i]

    def append(self, entry: ArchiveEntry) -> None:
        if len(entry.vector) != len(self.names):
            raise ArchiveFormatError(f"entry has {len(entry.vector)} variables, expected {len(self.names)}")
        self.entries.append(entry)

    def best(self) -> int:
        """Index of the lowest-SC feasible entry, else the least-penalized one."""
        if not self.entries:
            raise ArchiveFormatError("archive is empty")
        feasible = [i for i, e in enumerate(self.entries) if e.feasible]
        pool = feasible or range(len(self.entries))
        return min(pool, key=lambda i: (self.entries[i].sc, i))

    def subset(self, indices: list[int]) -> "Archive":
        return Archive(self.names, [self.entries[i] for i in indices])

    @property
    def vectors(self) -> np.ndarray:
        return np.array([e.vector for e in self.entries], dtype=float).reshape(len(self.entries), len(self.names))

    def to_frame(self) -> pd.DataFrame:
        technologies = sorted({name for e in self.entries for name, _ in e.technologies})
        rows = []
        for e in self.entries:
            row = {"generation": e.generation}
            row.update(zip(self.names, e.vector))
            row.update({"fc": e.fc, "sc": e.sc, "build_cost": e.build_cost, "feasible": e.feasible})
            totals = dict(e.technologies)
            row.update({f"{TECHNOLOGY_PREFIX}{t}": totals.get(t, 0.0) for t in technologies})
            rows.append(row)
        columns = ["generation", *self.names, "fc", "sc", "build_cost", "feasible"]
        columns += [f"{TECHNOLOGY_PREFIX}{t}" for t in technologies]
        return pd.DataFrame(rows, columns=columns)

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        return path

    @classmethod
    def from_csv(cls, path: str | Path) -> "Archive":
        path = Path(path)
        if not path.is_file():
            raise ArchiveFormatError(f"{path} does not exist")
        try:
            frame = pd.read_csv(path)
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise ArchiveFormatError(str(e)) from e
        missing = [c for c in _FIXED_COLUMNS if c not in frame.columns]
        if missing:
            raise ArchiveFormatError(f"missing columns {missing}")
        names = tuple(c for c in frame.columns if c not in _FIXED_COLUMNS and not c.startswith(TECHNOLOGY_PREFIX))
        tech_columns = [c for c in frame.columns if c.startswith(TECHNOLOGY_PREFIX)]
        archive = cls(names)
        for rec in frame.to_dict("records"):
            archive.append(ArchiveEntry(
                generation=int(rec["generation"]),
                vector=tuple(float(rec[n]) for n in names),
                sc=float(rec["sc"]),
                fc=float(rec["fc"]),
                build_cost=float(rec["build_cost"]),
                feasible=bool(rec["feasible"]),
                technologies=tuple((c[len(TECHNOLOGY_PREFIX):], float(rec[c])) for c in tech_columns),
            ))
        return archive
