"""Fleet data model and CSV ingestion.

A fleet CSV has one row per observation with columns ``entity_id``,
``x1``..``xp`` and ``y`` (any column order). Rows of one entity need not be
contiguous; entities are ordered by first appearance and rows keep file order.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from fleetgroup.errors import (
    DataError,
    EmptyFile,
    MissingColumn,
    NoSuchFile,
    NonNumericCell,
    SingleEntity,
)
from fleetgroup.regression import BasisSpec, design_matrix, numerical_rank

_XCOL = re.compile(r"^x([1-9][0-9]*)$")


class Observation(NamedTuple):
    x: np.ndarray
    y: float


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class EntityDataset:
    """Observations of one unit: inputs ``x`` with shape (T, p), outputs ``y`` with shape (T,)."""

    entity_id: str
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise DataError(f"entity {self.entity_id!r}: x must be (T, p) and y (T,), got {x.shape} and {y.shape}")
        if x.shape[0] < 1:
            raise DataError(f"entity {self.entity_id!r} has no observations")
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "y", _frozen(y))

    @property
    def n_obs(self) -> int:
        return self.y.shape[0]

    @property
    def input_dim(self) -> int:
        return self.x.shape[1]

    @property
    def observations(self) -> list[Observation]:
        return [Observation(self.x[t], float(self.y[t])) for t in range(self.n_obs)]

    def __len__(self) -> int:
        return self.n_obs

    def __eq__(self, other) -> bool:
        if not isinstance(other, EntityDataset):
            return NotImplemented
        return (
            self.entity_id == other.entity_id
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class FleetDataset:
    entities: tuple[EntityDataset, ...]

    def __post_init__(self):
        ents = tuple(self.entities)
        object.__setattr__(self, "entities", ents)
        if len(ents) < 2:
            raise SingleEntity(f"a fleet needs at least 2 entities, got {len(ents)}")
        ids = [e.entity_id for e in ents]
        if len(set(ids)) != len(ids):
            raise DataError("entity ids must be unique")
        dims = {e.input_dim for e in ents}
        if len(dims) != 1:
            raise DataError(f"entities disagree on input dimension: {sorted(dims)}")

    @property
    def input_dim(self) -> int:
        return self.entities[0].input_dim

    @property
    def entity_ids(self) -> list[str]:
        return [e.entity_id for e in self.entities]

    @property
    def n_obs(self) -> int:
        return sum(e.n_obs for e in self.entities)

    def __len__(self) -> int:
        return len(self.entities)

    def __iter__(self) -> Iterator[EntityDataset]:
        return iter(self.entities)

    def __getitem__(self, i: int) -> EntityDataset:
        return self.entities[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FleetDataset):
            return NotImplemented
        return len(self) == len(other) and all(a == b for a, b in zip(self, other))

    __hash__ = None


def _parse_float(text: str, row: int, column: str) -> float:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise NonNumericCell(row, column, text) from None
    if not math.isfinite(v):
        raise NonNumericCell(row, column, text)
    return v


def _x_columns(header: Sequence[str]) -> list[str]:
    found = {int(m.group(1)): name for name in header if (m := _XCOL.match(name))}
    if not found:
        raise MissingColumn("no input columns (x1..xp) in header")
    p = max(found)
    for j in range(1, p + 1):
        if j not in found:
            raise MissingColumn(f"x{j}")
    return [found[j] for j in range(1, p + 1)]


def load_fleet_csv(path) -> FleetDataset:
    """Read a fleet CSV. Any malformed or non-finite cell is a hard error."""
    path = Path(path)
    if not path.is_file():
        raise NoSuchFile(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise EmptyFile(f"{path} is empty")
        header = [h.strip() for h in header]
        for required in ("entity_id", "y"):
            if required not in header:
                raise MissingColumn(required)
        xcols = _x_columns(header)
        id_pos = header.index("entity_id")
        y_pos = header.index("y")
        x_pos = [header.index(c) for c in xcols]

        rows: dict[str, tuple[list, list]] = {}
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise DataError(f"row {lineno}: expected {len(header)} cells, got {len(rec)}")
            eid = rec[id_pos]
            xs = [_parse_float(rec[j], lineno, c) for j, c in zip(x_pos, xcols)]
            y = _parse_float(rec[y_pos], lineno, "y")
            bucket = rows.setdefault(eid, ([], []))
            bucket[0].append(xs)
            bucket[1].append(y)

    if not rows:
        raise EmptyFile(f"{path} has a header but no data rows")
    if len(rows) < 2:
        raise SingleEntity(f"{path} contains a single entity ({next(iter(rows))!r}); need at least 2")
    return FleetDataset(tuple(EntityDataset(eid, np.array(xs), np.array(ys)) for eid, (xs, ys) in rows.items()))


def write_fleet_csv(fleet: FleetDataset, path) -> None:
    # repr() of a float is the shortest string that parses back to the same value
    p = fleet.input_dim
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["entity_id", *[f"x{j}" for j in range(1, p + 1)], "y"])
        for e in fleet:
            for t in range(e.n_obs):
                w.writerow([e.entity_id, *[repr(float(v)) for v in e.x[t]], repr(float(e.y[t]))])


@dataclass(frozen=True)
class Issue:
    entity_id: str
    kind: str  # "unfittable" | "rank_deficient" | "non_finite"
    message: str


def validate_fleet(fleet: FleetDataset, basis: BasisSpec) -> list[Issue]:
    """Report entities that cannot be fitted with ``basis``. Returns an empty list for a clean fleet."""
    issues = []
    for e in fleet:
        m = basis.n_coefficients(e.input_dim)
        if not (np.all(np.isfinite(e.x)) and np.all(np.isfinite(e.y))):
            issues.append(Issue(e.entity_id, "non_finite", "contains NaN or infinite values"))
            continue
        if e.n_obs < m:
            issues.append(Issue(e.entity_id, "unfittable", f"{e.n_obs} observations < {m} coefficients"))
            continue
        rank = numerical_rank(design_matrix(e.x, basis))
        if rank < m:
            issues.append(Issue(
                e.entity_id, "rank_deficient",
                f"design matrix rank {rank} < {m} (repeated or collinear inputs)",
            ))
    return issues
