"""Cross-RSE matrix, its symmetrized dissimilarity form, and the threshold graph."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from fleetgroup.errors import DataError, LengthMismatch
from fleetgroup.fleet_data import FleetDataset
from fleetgroup.regression import BasisSpec, RegressionModel, fit_entity_model, rse


def _readonly(a) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class RawCrossMatrix:
    """``values[i, j]`` is the RSE of entity i's model on entity j's data."""

    values: np.ndarray
    entity_ids: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(np.asarray(self.values, dtype=float)))
        object.__setattr__(self, "entity_ids", tuple(self.entity_ids))
        n = len(self.entity_ids)
        if self.values.shape != (n, n):
            raise LengthMismatch(f"matrix shape {self.values.shape} does not match {n} entity ids")


@dataclass(frozen=True, eq=False)
class DissimilarityMatrix(RawCrossMatrix):
    pass


@dataclass(frozen=True, eq=False)
class AdjacencyGraph:
    adjacency: np.ndarray
    lam: float = float("nan")
    entity_ids: tuple[str, ...] = ()

    def __post_init__(self):
        a = np.asarray(self.adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {a.shape}")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0) or not np.all((a == 0) | (a == 1)):
            raise ValueError("adjacency must be binary with a zero diagonal")
        object.__setattr__(self, "adjacency", _readonly(a.astype(np.int8)))
        if not self.entity_ids:
            object.__setattr__(self, "entity_ids", tuple(str(i) for i in range(a.shape[0])))
        else:
            object.__setattr__(self, "entity_ids", tuple(self.entity_ids))

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1).astype(float)

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))

    @classmethod
    def from_edges(cls, n: int, edges, lam: float = float("nan")) -> "AdjacencyGraph":
        a = np.zeros((n, n), dtype=np.int8)
        for i, j in edges:
            if i != j:
                a[i, j] = a[j, i] = 1
        return cls(a, lam)


def fit_fleet(fleet: FleetDataset, basis: BasisSpec = BasisSpec()) -> list[RegressionModel]:
    return [fit_entity_model(e, basis) for e in fleet]


def cross_rse_matrix(models: Sequence[RegressionModel], fleet: FleetDataset) -> RawCrossMatrix:
    if len(models) != len(fleet):
        raise LengthMismatch(f"{len(models)} models for {len(fleet)} entities")
    n = len(fleet)
    r = np.empty((n, n))
    for i, model in enumerate(models):
        for j, data in enumerate(fleet):
            r[i, j] = rse(model, data)
    return RawCrossMatrix(r, fleet.entity_ids)


def symmetrize(raw: RawCrossMatrix) -> DissimilarityMatrix:
    """(R + R^T) / 2. Float addition commutes, so the result is exactly symmetric."""
    r = raw.values
    return DissimilarityMatrix((r + r.T) / 2.0, raw.entity_ids)


def threshold_graph(dis: RawCrossMatrix, lam: float) -> AdjacencyGraph:
    """Edge between i != j iff ``dis[i, j] <= lam``; a tie at the threshold keeps the edge."""
    lam = float(lam)
    if not np.isfinite(lam):
        raise ValueError(f"lambda must be finite, got {lam}")
    a = (lam - dis.values >= 0).astype(np.int8)
    np.fill_diagonal(a, 0)
    return AdjacencyGraph(a, lam, dis.entity_ids)


def off_diagonal(values: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(values.shape[0], 1)
    return values[iu]


def write_matrix_csv(m: RawCrossMatrix, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["entity_id", *m.entity_ids])
        for eid, row in zip(m.entity_ids, m.values):
            w.writerow([eid, *[repr(float(v)) for v in row]])


def read_matrix_csv(path) -> DissimilarityMatrix:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path} is empty")
    ids = rows[0][1:]
    body = rows[1:]
    if [r[0] for r in body] != ids:
        raise DataError(f"{path}: row labels do not match column labels")
    return DissimilarityMatrix(np.array([[float(v) for v in r[1:]] for r in body]), ids)
