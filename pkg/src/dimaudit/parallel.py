"""Horn's parallel analysis against size-matched Gaussian noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .ingest import AttributeMatrix
from .linalg import correlation_from_standardized, jacobi_eigh_batch, standardize_array
from .seeding import chunks, ordered_map, sub_rng

CHUNK = 50


@dataclass(frozen=True, eq=False)
class ParallelResult:
    observed: np.ndarray
    null_p95: np.ndarray
    retained: int
    iterations: int
    seed: int
    percentile: float = 0.95
    rule: str = "prefix"

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "percentile": self.percentile,
            "seed": self.seed,
            "rule": self.rule,
            "retained": self.retained,
            "components": [
                {
                    "component": f"PC{k + 1}",
                    "observed": float(self.observed[k]),
                    "threshold": float(self.null_p95[k]),
                    "retain": bool(k < self.retained) if self.rule == "prefix"
                    else bool(self.observed[k] > self.null_p95[k]),
                }
                for k in range(len(self.observed))
            ],
        }


def nearest_rank(sorted_samples: np.ndarray, q: float) -> np.ndarray:
    """Nearest-rank percentile along axis 0 of already-sorted samples."""
    n = sorted_samples.shape[0]
    rank = max(1, math.ceil(q * n))
    return sorted_samples[rank - 1]


def _null_chunk(n: int, p: int, seed: int, idx: range) -> np.ndarray:
    stack = np.empty((len(idx), p, p))
    for j, i in enumerate(idx):
        z, _, _ = standardize_array(sub_rng(seed, i).standard_normal((n, p)))
        stack[j] = correlation_from_standardized(z)
    values, _, _ = jacobi_eigh_batch(stack)
    return values


_CACHE: dict[tuple[int, int, int, int], np.ndarray] = {}
_CACHE_SIZE = 64


def null_spectra(n: int, p: int, iterations: int, seed: int, workers: int = 1) -> np.ndarray:
    """Eigenvalue spectra (iterations x p) of standardized n x p Gaussian matrices.

    Iteration ``i`` draws from ``sub_rng(seed, i)``; chunks are merged by
    index, so the output does not depend on ``workers``. The spectra are a
    pure function of (n, p, iterations, seed) and are memoized on that key.
    """
    key = (int(n), int(p), int(iterations), int(seed))
    cached = _CACHE.get(key)
    if cached is not None:
        return cached
    parts = ordered_map(lambda idx: _null_chunk(n, p, seed, idx), chunks(iterations, CHUNK), workers)
    out = np.concatenate(parts)
    out.setflags(write=False)
    if len(_CACHE) >= _CACHE_SIZE:
        _CACHE.pop(next(iter(_CACHE)))
    _CACHE[key] = out
    return out


def count_retained(observed: np.ndarray, thresholds: np.ndarray, rule: str = "prefix") -> int:
    """Components whose observed eigenvalue strictly exceeds the threshold.

    ``prefix`` stops at the first failure; ``count`` counts every exceedance.
    """
    above = np.asarray(observed) > np.asarray(thresholds)
    if rule == "count":
        return int(above.sum())
    if rule != "prefix":
        raise DataError(f"unknown retention rule {rule!r}")
    failures = np.flatnonzero(~above)
    return int(failures[0]) if failures.size else int(above.size)


def observed_spectrum(matrix: AttributeMatrix) -> np.ndarray:
    z, _, _ = standardize_array(matrix.values, matrix.attribute_names)
    values, _, _ = jacobi_eigh_batch(correlation_from_standardized(z)[None])
    return values[0]


def parallel_analysis(
    matrix: AttributeMatrix,
    iterations: int = 500,
    percentile: float = 0.95,
    seed: int = 0,
    workers: int = 1,
    rule: str = "prefix",
    observed: np.ndarray | None = None,
) -> ParallelResult:
    if iterations < 100:
        raise DataError(f"parallel analysis needs at least 100 iterations, got {iterations}")
    if not 0.0 < percentile < 1.0:
        raise DataError(f"percentile must lie in (0, 1), got {percentile}")
    obs = observed_spectrum(matrix) if observed is None else np.asarray(observed, dtype=float)
    spectra = null_spectra(matrix.n, matrix.p, iterations, seed, workers)
    thresholds = nearest_rank(np.sort(spectra, axis=0), percentile)
    return ParallelResult(
        observed=obs,
        null_p95=thresholds,
        retained=count_retained(obs, thresholds, rule),
        iterations=iterations,
        seed=int(seed),
        percentile=percentile,
        rule=rule,
    )


def clear_null_cache() -> None:
    _CACHE.clear()
