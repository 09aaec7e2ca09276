"""Scoring a grouping: meta-datasets, meta-models, average meta-validation accuracy,
the lambda sweep behind the accuracy plot, and elbow detection on that plot."""

from __future__ import annotations

import logging
import math
import warnings
import zlib
from dataclasses import dataclass, field

import numpy as np

from fleetgroup.community import CommunityPartition, detect_communities
from fleetgroup.errors import EmptyValidation, FleetGroupError, LengthMismatch, TooFewObservations, TooFewPoints
from fleetgroup.fleet_data import EntityDataset, FleetDataset
from fleetgroup.graph import DissimilarityMatrix, off_diagonal, threshold_graph
from fleetgroup.regression import BasisSpec, fit_entity_model, rse

log = logging.getLogger(__name__)

LAMBDA_NUDGE = 1e-12


@dataclass(frozen=True, eq=False)
class MetaDataset:
    group_index: int
    members: tuple[EntityDataset, ...]

    @property
    def member_entity_ids(self) -> list[str]:
        return [e.entity_id for e in self.members]

    @property
    def unit_count(self) -> int:
        return len(self.members)

    @property
    def n_obs(self) -> int:
        return sum(e.n_obs for e in self.members)

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([e.x for e in self.members])

    @property
    def y(self) -> np.ndarray:
        return np.concatenate([e.y for e in self.members])

    def as_entity(self) -> EntityDataset:
        return EntityDataset(f"G{self.group_index}", self.x, self.y)


def merge_groups(fleet: FleetDataset, partition) -> list[MetaDataset]:
    assignment = np.asarray(getattr(partition, "assignment", partition))
    if assignment.shape != (len(fleet),):
        raise LengthMismatch(f"partition covers {assignment.size} entities, fleet has {len(fleet)}")
    return [
        MetaDataset(c, tuple(fleet[i] for i in np.flatnonzero(assignment == c)))
        for c in np.unique(assignment).tolist()
    ]


def _n_train(n_obs: int, fraction: float) -> int:
    if n_obs == 1:
        return 1
    return min(max(math.floor(fraction * n_obs + 1e-9), 1), n_obs - 1)


def _entity_rng(seed: int, entity_id: str) -> np.random.Generator:
    # keyed by entity so a unit's holdout rows do not depend on which group it lands in
    return np.random.default_rng([seed, zlib.crc32(entity_id.encode("utf-8"))])


def split_train_validation(meta: MetaDataset, fraction: float = 0.7, seed: int = 0) -> tuple[EntityDataset, EntityDataset]:
    """Stratified holdout: each member contributes floor(fraction * T_i) rows to training,
    with at least one row on each side when T_i >= 2. A single-row member goes to training."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    tx, ty, vx, vy = [], [], [], []
    for e in meta.members:
        perm = _entity_rng(seed, e.entity_id).permutation(e.n_obs)
        k = _n_train(e.n_obs, fraction)
        tr, va = np.sort(perm[:k]), np.sort(perm[k:])
        tx.append(e.x[tr]), ty.append(e.y[tr])
        vx.append(e.x[va]), vy.append(e.y[va])
    n_val = sum(len(v) for v in vy)
    if n_val == 0:
        raise EmptyValidation(f"group {meta.group_index} has no validation rows (every member has a single observation)")
    name = f"G{meta.group_index}"
    return (
        EntityDataset(f"{name}/train", np.concatenate(tx), np.concatenate(ty)),
        EntityDataset(f"{name}/validation", np.concatenate(vx), np.concatenate(vy)),
    )


def eta_from_errors(errors, unit_counts, n_entities: int) -> float:
    """100 minus the unit-weighted mean of the group validation errors."""
    return 100.0 - float(np.dot(unit_counts, errors)) / n_entities


def meta_accuracy(
    fleet: FleetDataset,
    partition,
    basis: BasisSpec = BasisSpec(),
    fraction: float = 0.7,
    seed: int = 0,
) -> tuple[float, list[float]]:
    """Average meta-validation accuracy of ``partition`` and the per-group validation errors."""
    metas = merge_groups(fleet, partition)
    errors, counts = [], []
    for meta in metas:
        train, val = split_train_validation(meta, fraction, seed)
        if train.n_obs < basis.n_coefficients(fleet.input_dim):
            raise TooFewObservations(f"group {meta.group_index}: {train.n_obs} training rows are too few for the meta-model")
        errors.append(rse(fit_entity_model(train, basis), val))
        counts.append(meta.unit_count)
    penalty = float(np.dot(counts, errors)) / len(fleet)
    if penalty > 100.0:
        warnings.warn(
            f"weighted mean validation error {penalty:.4g} exceeds 100, accuracy is negative; "
            "consider rescaling the output variable",
            RuntimeWarning,
            stacklevel=2,
        )
    return eta_from_errors(errors, counts, len(fleet)), errors


def lambda_grid(dis: DissimilarityMatrix, quantiles: int = 40) -> np.ndarray:
    """Quantiles 0/q, 1/q, ..., q/q of the off-diagonal dissimilarities, deduplicated and
    nudged up so the entries they came from stay inside the edge set."""
    if quantiles < 1:
        raise ValueError("quantiles must be >= 1")
    vals = off_diagonal(dis.values)
    qs = np.unique(np.quantile(vals, np.linspace(0.0, 1.0, quantiles + 1)))
    return np.unique(qs + LAMBDA_NUDGE * np.maximum(1.0, np.abs(qs)))


@dataclass(frozen=True)
class SweepConfig:
    quantiles: int = 40
    fraction: float = 0.7
    seed: int = 0
    meta_basis: BasisSpec | None = None
    lambdas: tuple[float, ...] | None = None


@dataclass(frozen=True, eq=False)
class SweepRecord:
    lam: float
    k: int
    partition: CommunityPartition | None
    eta: float
    group_errors: tuple[float, ...] = ()
    unit_counts: tuple[int, ...] = ()
    failed: bool = False
    error: str = ""


@dataclass(frozen=True, eq=False)
class SweepResult:
    records: tuple[SweepRecord, ...]
    best_per_k: dict[int, SweepRecord] = field(default_factory=dict)

    def curve(self) -> tuple[np.ndarray, np.ndarray]:
        ks = sorted(self.best_per_k)
        return np.array(ks, dtype=float), np.array([self.best_per_k[k].eta for k in ks])

    @property
    def n_failed(self) -> int:
        return sum(r.failed for r in self.records)


def best_records_per_k(records) -> dict[int, SweepRecord]:
    best: dict[int, SweepRecord] = {}
    for rec in records:
        if rec.failed:
            continue
        cur = best.get(rec.k)
        if cur is None or rec.eta > cur.eta:
            best[rec.k] = rec
    return dict(sorted(best.items()))


def lambda_sweep(
    fleet: FleetDataset,
    dis: DissimilarityMatrix,
    basis: BasisSpec = BasisSpec(),
    config: SweepConfig = SweepConfig(),
) -> SweepResult:
    """Community detection and meta-validation accuracy at every lambda of the grid."""
    meta_basis = config.meta_basis or basis
    grid = np.asarray(config.lambdas, dtype=float) if config.lambdas is not None else lambda_grid(dis, config.quantiles)
    records = []
    for lam in np.sort(grid):
        lam = float(lam)
        graph = threshold_graph(dis, lam)
        try:
            part = detect_communities(graph)
        except FleetGroupError as exc:
            log.warning("lambda=%g: community detection failed: %s", lam, exc)
            records.append(SweepRecord(lam, 0, None, float("nan"), failed=True, error=str(exc)))
            continue
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                eta, errors = meta_accuracy(fleet, part, meta_basis, config.fraction, config.seed)
        except FleetGroupError as exc:
            log.warning("lambda=%g: meta validation failed: %s", lam, exc)
            records.append(SweepRecord(lam, part.k, part, float("nan"), failed=True, error=str(exc)))
            continue
        counts = tuple(int(np.sum(part.assignment == c)) for c in range(part.k))
        records.append(SweepRecord(lam, part.k, part, eta, tuple(errors), counts))
    records = tuple(records)
    return SweepResult(records, best_records_per_k(records))


# -- elbow -----------------------------------------------------------------------


@dataclass(frozen=True)
class ElbowReport:
    verdict: str  # "clear_grouping" | "fuzzy_grouping" | "no_grouping"
    k_star: int | None
    curvature_score: float
    candidate_k: int | None = None


def _unit_range(v: np.ndarray) -> np.ndarray | None:
    span = v[0] - v[-1]
    if not span > 0:
        return None
    return (v - v[-1]) / span


def elbow_scores(ks, etas) -> np.ndarray:
    """Corner strength at every interior point of a (k, eta) curve; endpoints score 0.

    The validation error d = 100 - eta is modelled as a floor f (the smallest d
    on the curve) plus a part that shrinks as groups get finer, combined in
    quadrature: nu = sqrt(d^2 - f^2). Without real groups nu falls roughly like
    1/k, so after mapping u = 1/k and nu onto [0, 1] the points sit near the
    diagonal. A real grouping drives nu to the floor early, leaving the point
    far below it. The score at point j is the gap u_j - nu_j, scaled by k_j / k_0
    so a corner at large k is not penalised for 1/k being small there, and
    weighted by 1 - nu_j / u_j, the share of the remaining 1/k trend already gone.
    """
    ks = np.asarray(ks, dtype=float)
    d = 100.0 - np.asarray(etas, dtype=float)
    nu = np.sqrt(np.maximum(d**2 - d.min() ** 2, 0.0))
    scores = np.zeros(ks.size)
    u_hat, nu_hat = _unit_range(1.0 / ks), _unit_range(nu)
    if u_hat is None or nu_hat is None:
        return scores
    for j in range(1, ks.size - 1):
        if u_hat[j] <= 0.0:
            continue
        gap = (u_hat[j] - nu_hat[j]) * ks[j] / ks[0]
        scores[j] = max(gap, 0.0) * max(1.0 - nu_hat[j] / u_hat[j], 0.0)
    return np.clip(scores, 0.0, 1.0)


def elbow_from_curve(ks, etas, clear_threshold: float = 0.5, fuzzy_threshold: float = 0.15) -> ElbowReport:
    ks = np.asarray(ks, dtype=float)
    etas = np.asarray(etas, dtype=float)
    if ks.shape != etas.shape:
        raise LengthMismatch(f"{ks.size} k values for {etas.size} accuracies")
    if np.unique(ks).size < 3:
        raise TooFewPoints(f"the accuracy curve needs at least 3 distinct k, got {np.unique(ks).size}")
    if not 0.0 <= fuzzy_threshold <= clear_threshold:
        raise ValueError("thresholds must satisfy 0 <= fuzzy <= clear")
    order = np.argsort(ks, kind="stable")
    ks, etas = ks[order], etas[order]
    scores = elbow_scores(ks, etas)
    j = int(np.argmax(scores))
    score = float(scores[j])
    candidate = int(ks[j]) if score > 0.0 else None
    if score >= clear_threshold:
        return ElbowReport("clear_grouping", candidate, score, candidate)
    verdict = "fuzzy_grouping" if score >= fuzzy_threshold else "no_grouping"
    return ElbowReport(verdict, None, score, candidate)


def find_elbow(sweep: SweepResult, clear_threshold: float = 0.5, fuzzy_threshold: float = 0.15) -> ElbowReport:
    """Locate the elbow of the best-accuracy-per-k curve and grade how sharp it is.

    ``k_star`` is set only for a clear grouping; ``candidate_k`` always names
    the best-scoring k (None when no interior point scores above zero).
    """
    ks, etas = sweep.curve()
    return elbow_from_curve(ks, etas, clear_threshold, fuzzy_threshold)
