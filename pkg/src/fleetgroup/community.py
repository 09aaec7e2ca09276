"""Leading-eigenvector community detection (Newman's spectral modularity method).

The graph is first cut into connected components; each component with edges
is then bisected recursively by the sign pattern of the leading eigenvector of
its generalized modularity matrix, as long as a bisection raises modularity.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from fleetgroup.errors import ConvergenceFailure, EmptyGraph
from fleetgroup.graph import AdjacencyGraph

log = logging.getLogger(__name__)

CONVERGENCE_TOL = 1e-10
# eigenvector entries this close to zero are structurally zero up to solver error
ZERO_ENTRY_TOL = 1e-8
EIGENVALUE_RTOL = 1e-9
DELTA_Q_TOL = 1e-12
START_PERTURBATION = 1e-3
MAX_SQUARINGS = 64
LOST_START_RTOL = 1e-9
# above this size a dense matrix product per round costs more than plain iteration
SQUARING_MAX_N = 400


def _adjacency(graph) -> np.ndarray:
    if isinstance(graph, AdjacencyGraph):
        return graph.adjacency.astype(float)
    return np.asarray(graph, dtype=float)


def modularity_matrix(graph) -> np.ndarray:
    """B = A - k k^T / 2m for the configuration null model."""
    a = _adjacency(graph)
    k = a.sum(axis=1)
    two_m = k.sum()
    if two_m == 0:
        raise EmptyGraph("modularity is undefined on a graph without edges")
    return a - np.outer(k, k) / two_m


def modularity(graph, assignment) -> float:
    """Q = (1/2m) * sum_ij B_ij [c_i == c_j]."""
    a = _adjacency(graph)
    b = modularity_matrix(a)
    c = np.asarray(assignment)
    if c.shape != (a.shape[0],):
        raise ValueError(f"assignment has shape {c.shape}, expected ({a.shape[0]},)")
    same = c[:, None] == c[None, :]
    return float(b[same].sum() / a.sum())


def generalized_modularity_matrix(b: np.ndarray, group) -> np.ndarray:
    """B(g)_ij = B_ij - delta_ij * sum_{l in g} B_il, for i, j in ``group``."""
    g = np.asarray(group)
    bg = b[np.ix_(g, g)].copy()
    bg[np.diag_indices_from(bg)] -= bg.sum(axis=1)
    return bg


def _power_iterate(shifted: np.ndarray, x: np.ndarray, max_iter: int) -> np.ndarray:
    """Plain power iteration: x <- Mx / |Mx| until successive iterates agree to 1e-10."""
    for _ in range(max_iter):
        y = shifted @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            # x lies in the null space; nudge it out deterministically
            x = x.copy()
            x[0] += START_PERTURBATION
            x /= np.linalg.norm(x)
            continue
        y /= norm
        if np.max(np.abs(y - x)) < CONVERGENCE_TOL:
            return y
        x = y
    raise ConvergenceFailure(f"power iteration did not converge in {max_iter} iterations")


def _squared_power_iterate(shifted: np.ndarray, x: np.ndarray, max_squarings: int = MAX_SQUARINGS) -> np.ndarray | None:
    """Power iteration sampled at steps 1, 2, 4, 8, ...: iterate j is M^(2^j) x / |M^(2^j) x|.

    Squaring the (scaled) matrix squares the convergence ratio each round, so
    nearly degenerate leading eigenvalues still resolve in a few dozen
    products, and a 1e-10 change between rounds means the error itself is
    that small. Returns None when ``x`` has no component along the dominant
    eigenspace (its iterate shrinks to rounding noise).
    """
    power = shifted / np.max(np.abs(shifted))
    floor = LOST_START_RTOL * np.sqrt(shifted.shape[0])
    prev = None
    for _ in range(max_squarings):
        y = power @ x
        norm = np.linalg.norm(y)
        if norm < floor * np.max(np.abs(power)):
            return None
        y /= norm
        if prev is not None and np.max(np.abs(y - prev)) < CONVERGENCE_TOL:
            return y
        prev = y
        power = power @ power
        power /= np.max(np.abs(power))
    raise ConvergenceFailure(f"power iteration did not converge in 2^{max_squarings} steps")


def start_vector(n: int) -> np.ndarray:
    x = 1.0 + (np.arange(n) % 3) / 10.0
    return x / np.linalg.norm(x)


def _starts(n: int):
    """The fixed start, then deterministic perturbations of it for when it is
    orthogonal to the leading eigenvector (common on graphs with symmetries)."""
    x0 = start_vector(n)
    yield x0
    x1 = x0.copy()
    x1[0] += START_PERTURBATION
    yield x1 / np.linalg.norm(x1)
    x2 = x0 + START_PERTURBATION * np.random.default_rng(n).standard_normal(n)
    yield x2 / np.linalg.norm(x2)


def leading_eigenpair(b: np.ndarray) -> tuple[float, np.ndarray, float]:
    """Most positive eigenvalue of symmetric ``b`` and its unit eigenvector.

    Power iteration runs on ``b + sigma*I`` with sigma the largest absolute
    row sum, which bounds the spectral radius: the shifted matrix is positive
    semidefinite and the wanted eigenvalue becomes dominant.
    Returns (eigenvalue, vector, sigma).
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    sigma = float(np.max(np.abs(b).sum(axis=1))) if n else 0.0
    if sigma == 0.0:
        return 0.0, start_vector(n), 0.0
    shifted = b + sigma * np.eye(n)

    # A start orthogonal to the top eigenvector (symmetric graphs make this
    # common) converges to a lesser one, so every start runs and the largest
    # Rayleigh quotient wins; ties keep the earlier start.
    if n <= SQUARING_MAX_N:
        vectors = [_squared_power_iterate(shifted, x) for x in _starts(n)]
    else:
        max_iter = 100 * n + 10000
        vectors = [_power_iterate(shifted, x, max_iter) for x, _ in zip(_starts(n), range(2))]
    best_val, best_vec = -np.inf, None
    for v in vectors:
        if v is None:
            continue
        val = float(v @ b @ v)
        if val > best_val + EIGENVALUE_RTOL * sigma:
            best_val, best_vec = val, v
    if best_vec is None:
        raise ConvergenceFailure("every start vector is orthogonal to the leading eigenspace")
    return best_val, best_vec, sigma


def leading_eigenvector_split(b: np.ndarray) -> np.ndarray | None:
    """Sign vector (+1/-1) from the leading eigenvector of ``b``, or None for no split.

    ``b`` is a full or generalized modularity matrix. No split is returned when
    the leading eigenvalue is not positive (relative to the shift) or when all
    entries share a sign. Entries with magnitude below 1e-8 join the side that
    gives the larger modularity gain.
    """
    b = np.asarray(b, dtype=float)
    if b.shape[0] < 2:
        return None
    val, vec, sigma = leading_eigenpair(b)
    if val <= EIGENVALUE_RTOL * sigma:
        return None
    s = np.where(vec > -ZERO_ENTRY_TOL, 1, -1)
    zero = np.abs(vec) <= ZERO_ENTRY_TOL
    if zero.any():
        # which side "+" is depends on the vector's arbitrary global sign, so
        # zero entries join whichever side gives the larger s^T B s
        alt = np.where(zero, -1, s)
        if float(alt @ b @ alt) > float(s @ b @ s) + EIGENVALUE_RTOL * sigma:
            s = alt
    if np.all(s == s[0]):
        return None
    return s


@dataclass(frozen=True)
class Bisection:
    """An accepted split of ``group`` into ``side`` and the rest."""

    group: tuple[int, ...]
    side: tuple[int, ...]
    delta_q: float


@dataclass(frozen=True, eq=False)
class CommunityPartition:
    assignment: np.ndarray
    modularity_q: float
    bisections: tuple[Bisection, ...] = field(default=())

    def __post_init__(self):
        a = np.array(self.assignment, dtype=int, copy=True)
        a.flags.writeable = False
        object.__setattr__(self, "assignment", a)

    @property
    def k(self) -> int:
        return int(self.assignment.max()) + 1 if self.assignment.size else 0

    def groups(self) -> list[list[int]]:
        return [np.flatnonzero(self.assignment == c).tolist() for c in range(self.k)]


def relabel(groups) -> np.ndarray:
    """Contiguous community indices ordered by each group's smallest member."""
    groups = sorted((sorted(g) for g in groups), key=lambda g: g[0])
    n = sum(len(g) for g in groups)
    out = np.empty(n, dtype=int)
    for c, g in enumerate(groups):
        out[g] = c
    return out


def detect_communities(graph: AdjacencyGraph) -> CommunityPartition:
    a = _adjacency(graph)
    n = a.shape[0]
    if a.sum() == 0:
        # modularity is undefined without edges; report 0 for the all-singleton partition
        return CommunityPartition(np.arange(n), 0.0)

    b = modularity_matrix(a)
    two_m = a.sum()
    _, comp = connected_components(a, directed=False)
    pending = deque()
    final: list[list[int]] = []
    for c in range(comp.max() + 1):
        members = np.flatnonzero(comp == c).tolist()
        (pending if len(members) > 1 else final).append(members)

    accepted = []
    while pending:
        g = pending.popleft()
        bg = generalized_modularity_matrix(b, g)
        s = leading_eigenvector_split(bg)
        if s is None:
            final.append(g)
            continue
        delta_q = float(s @ bg @ s) / (2.0 * two_m)
        if delta_q <= DELTA_Q_TOL:
            final.append(g)
            continue
        garr = np.asarray(g)
        plus, minus = garr[s > 0].tolist(), garr[s < 0].tolist()
        log.debug("bisect group of %d into %d + %d: dQ=%.6g", len(g), len(plus), len(minus), delta_q)
        accepted.append(Bisection(tuple(g), tuple(plus), delta_q))
        pending.append(plus)
        pending.append(minus)

    assignment = relabel(final)
    return CommunityPartition(assignment, modularity(a, assignment), tuple(accepted))
