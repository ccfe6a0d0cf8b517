"""Bootstrap stability of the first principal component."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .ingest import AttributeMatrix
from .linalg import correlation_from_standardized, jacobi_eigh_batch, standardize_array
from .pca import PcaModel, pca_fit
from .seeding import chunks, ordered_map, sub_rng

log = logging.getLogger(__name__)

CHUNK = 50
MAX_RETRIES = 100


@dataclass(frozen=True, eq=False)
class BootstrapReport:
    iterations: int
    pc1_share_mean: float
    pc1_share_ci: tuple[float, float]
    pc1_shares: np.ndarray
    cosine_mean: float
    cosines: np.ndarray
    seed: int
    baseline_share: float
    retries: int = 0

    def histogram(self, bins: int = 30) -> tuple[np.ndarray, np.ndarray]:
        counts, edges = np.histogram(self.pc1_shares, bins=bins)
        return edges, counts

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "seed": self.seed,
            "baseline_share": self.baseline_share,
            "pc1_share_mean": self.pc1_share_mean,
            "pc1_share_ci": list(self.pc1_share_ci),
            "ci_method": "percentile 2.5/97.5",
            "cosine_mean": self.cosine_mean,
            "cosine_min": float(self.cosines.min()),
            "retries": self.retries,
        }


def cosine_similarity(a, b) -> float:
    """|a.b| / (|a||b|); absolute because eigenvector signs are arbitrary."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DataError(f"vector shapes differ: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DataError("cosine similarity undefined for a zero vector")
    return float(min(1.0, abs(a @ b) / (na * nb)))


def _resample_chunk(values: np.ndarray, seed: int, idx: range):
    n, p = values.shape
    stack = np.empty((len(idx), p, p))
    retries = 0
    for j, i in enumerate(idx):
        for attempt in range(MAX_RETRIES):
            rows = sub_rng(seed, i, attempt).integers(0, n, n)
            try:
                z, _, _ = standardize_array(values[rows])
            except DataError:
                retries += 1
                log.info("bootstrap iteration %d: degenerate resample, retry %d", i, attempt + 1)
                continue
            stack[j] = correlation_from_standardized(z)
            break
        else:
            raise DataError(f"bootstrap iteration {i}: {MAX_RETRIES} degenerate resamples in a row")
    eigvals, eigvecs, _ = jacobi_eigh_batch(stack)
    return eigvals, eigvecs[:, :, 0], retries


def bootstrap_pca(
    matrix: AttributeMatrix,
    iterations: int = 1000,
    seed: int = 0,
    workers: int = 1,
    baseline: PcaModel | None = None,
) -> BootstrapReport:
    """Resample players with replacement, refit, track PC1 share and alignment."""
    if iterations < 100:
        raise DataError(f"bootstrap needs at least 100 iterations, got {iterations}")
    baseline = pca_fit(matrix) if baseline is None else baseline
    ref = baseline.loadings[:, 0]
    parts = ordered_map(
        lambda idx: _resample_chunk(matrix.values, seed, idx), chunks(iterations, CHUNK), workers
    )
    eigvals = np.concatenate([part[0] for part in parts])
    pc1 = np.concatenate([part[1] for part in parts])
    retries = sum(part[2] for part in parts)
    if retries:
        log.warning("bootstrap: %d degenerate resamples were redrawn", retries)

    shares = eigvals[:, 0] / eigvals.sum(axis=1)
    cosines = np.minimum(np.abs(pc1 @ ref) / (np.linalg.norm(pc1, axis=1) * np.linalg.norm(ref)), 1.0)
    low, high = np.quantile(shares, [0.025, 0.975])
    return BootstrapReport(
        iterations=iterations,
        pc1_share_mean=float(shares.mean()),
        pc1_share_ci=(float(low), float(high)),
        pc1_shares=shares,
        cosine_mean=float(cosines.mean()),
        cosines=cosines,
        seed=int(seed),
        baseline_share=float(baseline.variance_shares[0]),
        retries=retries,
    )
