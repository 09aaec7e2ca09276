"""Per-entity least-squares models on a polynomial basis, and the RSE used to compare them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from fleetgroup.errors import DimensionMismatch, RankDeficient, Underdetermined

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class BasisSpec:
    """Polynomial basis of a given degree with an intercept.

    For p inputs the columns are ``1, x1..xp, x1^2..xp^2, ..., x1^d..xp^d``
    (no cross terms), so there are ``p*d + 1`` coefficients.
    """

    degree: int = 1

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 0:
            raise ValueError(f"degree must be a non-negative integer, got {self.degree!r}")

    def n_coefficients(self, input_dim: int) -> int:
        return input_dim * self.degree + 1


def design_matrix(x: np.ndarray, basis: BasisSpec) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    cols = [np.ones(x.shape[0])]
    for power in range(1, basis.degree + 1):
        cols.extend(x[:, j] ** power for j in range(x.shape[1]))
    return np.column_stack(cols)


def numerical_rank(X: np.ndarray) -> int:
    """Rank from column-pivoted QR, counting |R_jj| above 1e-10 * largest column norm."""
    if X.size == 0:
        return 0
    _, R, _ = scipy.linalg.qr(X, mode="economic", pivoting=True)
    scale = np.max(np.linalg.norm(X, axis=0))
    if scale == 0.0:
        return 0
    return int(np.sum(np.abs(np.diag(R)) > RANK_RTOL * scale))


@dataclass(frozen=True, eq=False)
class RegressionModel:
    basis: BasisSpec
    coefficients: np.ndarray
    input_dim: int
    training_rse: float = float("nan")

    def __call__(self, x) -> np.ndarray:
        X = np.asarray(x, dtype=float)
        if X.ndim == 1 and self.input_dim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise DimensionMismatch(f"model expects {self.input_dim} inputs, got array of shape {np.shape(x)}")
        return design_matrix(X, self.basis) @ self.coefficients


def fit_arrays(x: np.ndarray, y: np.ndarray, basis: BasisSpec) -> RegressionModel:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    y = np.asarray(y, dtype=float)
    X = design_matrix(x, basis)
    T, m = X.shape
    if T < m:
        raise Underdetermined(f"{T} observations cannot determine {m} coefficients")
    Q, R, perm = scipy.linalg.qr(X, mode="economic", pivoting=True)
    scale = np.max(np.linalg.norm(X, axis=0))
    diag = np.abs(np.diag(R))
    if scale == 0.0 or np.any(diag <= RANK_RTOL * scale):
        raise RankDeficient(f"design matrix has rank {int(np.sum(diag > RANK_RTOL * scale))} < {m}")
    z = scipy.linalg.solve_triangular(R, Q.T @ y)
    coef = np.empty(m)
    coef[perm] = z
    coef.flags.writeable = False
    resid = y - X @ coef
    return RegressionModel(basis, coef, x.shape[1], float(np.sqrt(np.mean(resid**2))))


def fit_entity_model(data, basis: BasisSpec = BasisSpec()) -> RegressionModel:
    """Least-squares fit of ``basis`` to one entity's observations.

    Raises Underdetermined when there are fewer observations than
    coefficients and RankDeficient when the design matrix is numerically
    singular.
    """
    return fit_arrays(data.x, data.y, basis)


def predict(model: RegressionModel, x) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.shape[0] != model.input_dim:
        raise DimensionMismatch(f"model expects {model.input_dim} inputs, got {x.shape[0]}")
    return float(model(x.reshape(1, -1))[0])


def rse(model: RegressionModel, data) -> float:
    """Root of the mean squared residual of ``model`` on ``data`` (divisor T, not T - m)."""
    if data.x.shape[1] != model.input_dim:
        raise DimensionMismatch(f"model expects {model.input_dim} inputs, dataset has {data.x.shape[1]}")
    resid = data.y - model(data.x)
    return float(np.sqrt(np.mean(resid**2)))
