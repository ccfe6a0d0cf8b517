"""Standardization, correlation matrices and a dense symmetric eigensolver.

The eigensolver is the classical cyclic Jacobi method (row-by-row sweeps of
plane rotations), compiled with numba. Parallel analysis and the bootstrap
push hundreds of 28x28 correlation matrices through ``jacobi_eigh_batch`` in
one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .errors import ConvergenceError, DataError
from .ingest import AttributeMatrix

JACOBI_TOL = 1e-12
MAX_SWEEPS = 60


@dataclass(frozen=True, eq=False)
class StandardizedMatrix:
    values: np.ndarray
    means: np.ndarray
    sds: np.ndarray
    names: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    values: np.ndarray
    names: tuple[str, ...]

    @property
    def p(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class EigenSystem:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0


def standardize_array(values: np.ndarray, names: Sequence[str] | None = None):
    """Column z-scores with the population sd; returns ``(z, means, sds)``."""
    values = np.asarray(values, dtype=float)
    means = values.mean(axis=0)
    centered = values - means
    sds = np.sqrt((centered * centered).mean(axis=0))
    # relative test so that e.g. a column of 70.3 repeated is still caught
    scale = np.maximum(np.abs(means), 1.0)
    bad = np.flatnonzero(sds <= 1e-12 * scale)
    if bad.size:
        label = names[bad[0]] if names is not None else f"#{bad[0]}"
        raise DataError(f"column {label!r} is constant; cannot standardize")
    return centered / sds, means, sds


def standardize(matrix: AttributeMatrix) -> StandardizedMatrix:
    z, means, sds = standardize_array(matrix.values, matrix.attribute_names)
    return StandardizedMatrix(z, means, sds, matrix.attribute_names)


def correlation_from_standardized(z: np.ndarray) -> np.ndarray:
    n = z.shape[-2]
    r = np.swapaxes(z, -1, -2) @ z / n
    r = 0.5 * (r + np.swapaxes(r, -1, -2))
    np.clip(r, -1.0, 1.0, out=r)
    idx = np.arange(r.shape[-1])
    r[..., idx, idx] = 1.0
    return r


def correlation(std: StandardizedMatrix) -> CorrelationMatrix:
    """R = Z'Z / n with the diagonal set to exactly 1."""
    return CorrelationMatrix(correlation_from_standardized(std.values), std.names)


@njit(cache=True)
def _jacobi_inplace(a, v, tol, max_sweeps):
    """Cyclic-by-row Jacobi on one symmetric matrix; returns sweeps, or -1."""
    p = a.shape[0]
    sweeps = 0
    while True:
        off = 0.0
        for i in range(p):
            for j in range(i + 1, p):
                x = abs(a[i, j])
                if x > off:
                    off = x
        if off <= tol:
            return sweeps
        if sweeps >= max_sweeps:
            return -1
        sweeps += 1
        for k in range(p - 1):
            for l in range(k + 1, p):
                akl = a[k, l]
                if akl == 0.0:
                    continue
                theta = (a[l, l] - a[k, k]) / (2.0 * akl)
                t = 1.0 / (abs(theta) + np.sqrt(1.0 + theta * theta))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # A <- J^T A J with J[k,k] = J[l,l] = c, J[k,l] = s, J[l,k] = -s
                for r in range(p):
                    ark = a[r, k]
                    arl = a[r, l]
                    a[r, k] = c * ark - s * arl
                    a[r, l] = s * ark + c * arl
                for r in range(p):
                    akr = a[k, r]
                    alr = a[l, r]
                    a[k, r] = c * akr - s * alr
                    a[l, r] = s * akr + c * alr
                # annihilated analytically; store the exact zero
                a[k, l] = 0.0
                a[l, k] = 0.0
                for r in range(p):
                    vrk = v[r, k]
                    vrl = v[r, l]
                    v[r, k] = c * vrk - s * vrl
                    v[r, l] = s * vrk + c * vrl


@njit(cache=True)
def _jacobi_batch_kernel(a, v, tol, max_sweeps, sweeps):
    for b in range(a.shape[0]):
        sweeps[b] = _jacobi_inplace(a[b], v[b], tol, max_sweeps)


def jacobi_eigh_batch(
    matrices: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = MAX_SWEEPS
) -> tuple[np.ndarray, np.ndarray, int]:
    """Diagonalize a stack of symmetric matrices, shape (b, p, p).

    Returns eigenvalues (b, p) sorted descending (ties: ascending original
    index), eigenvectors (b, p, p) with matching columns, and the largest
    sweep count used. Raises ConvergenceError if some off-diagonal entry is
    still above ``tol`` after ``max_sweeps`` sweeps. Inputs are copied.
    """
    mats = np.asarray(matrices, dtype=float)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise DataError(f"expected a stack of square matrices, got shape {mats.shape}")
    b, p, _ = mats.shape
    a = np.ascontiguousarray(0.5 * (mats + np.swapaxes(mats, 1, 2)))
    v = np.broadcast_to(np.eye(p), (b, p, p)).copy()
    sweeps = np.zeros(b, dtype=np.int64)
    _jacobi_batch_kernel(a, v, float(tol), int(max_sweeps), sweeps)
    if (sweeps < 0).any():
        raise ConvergenceError(
            f"Jacobi eigensolver did not converge after {max_sweeps} sweeps", int(max_sweeps)
        )
    values = np.diagonal(a, axis1=1, axis2=2).copy()
    order = np.argsort(-values, axis=1, kind="stable")
    values = np.take_along_axis(values, order, axis=1)
    vectors = np.take_along_axis(v, order[:, None, :], axis=2)
    return values, vectors, int(sweeps.max(initial=0))


def symmetric_eigen(r: CorrelationMatrix | np.ndarray, tol: float = JACOBI_TOL) -> EigenSystem:
    mat = r.values if isinstance(r, CorrelationMatrix) else np.asarray(r, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DataError(f"expected a square matrix, got shape {mat.shape}")
    if not np.allclose(mat, mat.T, rtol=0.0, atol=1e-10):
        raise DataError("symmetric_eigen requires a symmetric matrix")
    values, vectors, sweeps = jacobi_eigh_batch(mat[None], tol=tol)
    return EigenSystem(values[0], vectors[0], sweeps)
