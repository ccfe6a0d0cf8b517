"""PCA on the attribute correlation matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .ingest import AttributeMatrix
from .linalg import (
    CorrelationMatrix,
    EigenSystem,
    correlation,
    standardize,
    symmetric_eigen,
)


@dataclass(frozen=True, eq=False)
class PcaModel:
    eigen: EigenSystem
    variance_shares: np.ndarray
    loadings: np.ndarray
    means: np.ndarray
    sds: np.ndarray
    attribute_names: tuple[str, ...]
    correlation: CorrelationMatrix

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigen.eigenvalues

    @property
    def p(self) -> int:
        return self.loadings.shape[0]

    def to_dict(self) -> dict:
        cumulative = np.cumsum(self.variance_shares)
        return {
            "components": [
                {
                    "component": f"PC{k + 1}",
                    "eigenvalue": float(self.eigenvalues[k]),
                    "share": float(self.variance_shares[k]),
                    "cumulative_share": float(cumulative[k]),
                }
                for k in range(self.p)
            ],
            "sweeps": self.eigen.sweeps,
        }


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    values: np.ndarray
    labels: tuple[str, ...]


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive.

    Ties in magnitude resolve to the lowest row index. Works on (p, p) or a
    stack (b, p, p).
    """
    vectors = np.array(vectors, dtype=float, copy=True)
    pivot = np.argmax(np.abs(vectors), axis=-2)
    lead = np.take_along_axis(vectors, pivot[..., None, :], axis=-2)
    vectors *= np.where(lead < 0, -1.0, 1.0)
    return vectors


def pca_fit(matrix: AttributeMatrix) -> PcaModel:
    std = standardize(matrix)
    corr = correlation(std)
    eig = symmetric_eigen(corr)
    loadings = fix_signs(eig.eigenvectors)
    eig = EigenSystem(eig.eigenvalues, loadings, eig.sweeps)
    shares = eig.eigenvalues / eig.eigenvalues.sum()
    return PcaModel(
        eigen=eig,
        variance_shares=shares,
        loadings=loadings,
        means=std.means,
        sds=std.sds,
        attribute_names=matrix.attribute_names,
        correlation=corr,
    )


def project(model: PcaModel, values: np.ndarray) -> np.ndarray:
    """Scores of raw rows using the model's stored scaler (no refitting)."""
    return ((np.asarray(values, dtype=float) - model.means) / model.sds) @ model.loadings


def pca_scores(model: PcaModel, matrix: AttributeMatrix) -> ScoreMatrix:
    if tuple(matrix.attribute_names) != tuple(model.attribute_names):
        raise DataError("attribute names/order differ from those the model was fitted on")
    labels = tuple(f"PC{k + 1}" for k in range(model.p))
    return ScoreMatrix(project(model, matrix.values), labels)


def top_loadings(model: PcaModel, component: int, count: int) -> list[tuple[str, float]]:
    """``count`` attributes with the largest |loading| on a 0-based ``component``.

    Sorted by magnitude, ties broken by ascending attribute index; the signed
    loading is reported.
    """
    if not 0 <= component < model.p:
        raise DataError(f"component index {component} out of range for p={model.p}")
    col = model.loadings[:, component]
    order = np.argsort(-np.abs(col), kind="stable")[: max(count, 0)]
    return [(model.attribute_names[j], float(col[j])) for j in order]
