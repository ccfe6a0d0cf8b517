"""K-means on residual component scores, with silhouette and ARI diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DataError
from .ingest import AttributeMatrix
from .pca import PcaModel, ScoreMatrix, pca_scores
from .seeding import ordered_map, sub_rng, sub_seed32

MAX_ITER = 300


@dataclass(frozen=True, eq=False)
class ClusterResult:
    k: int
    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float
    silhouette: float | None
    seed: int
    inertia_trace: tuple[float, ...] = ()
    restart_inertias: tuple[float, ...] = ()
    iterations: int = 0

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)

    def with_silhouette(self, value: float) -> "ClusterResult":
        return ClusterResult(
            self.k, self.assignments, self.centroids, self.inertia, float(value), self.seed,
            self.inertia_trace, self.restart_inertias, self.iterations,
        )


@dataclass(frozen=True, eq=False)
class AriReport:
    resamples: int
    ari_mean: float
    ari_sd: float
    values: np.ndarray

    def to_dict(self) -> dict:
        return {
            "resamples": self.resamples,
            "ari_mean": self.ari_mean,
            "ari_sd": self.ari_sd,
            "ari_min": float(self.values.min()),
            "ari_max": float(self.values.max()),
        }


@dataclass(frozen=True, eq=False)
class ClusterProfile:
    cluster: int
    size: int
    overall_mean: float
    overall_sd: float
    attribute_means: np.ndarray  # standardized units (full-sample scaler)


def _values(scores) -> np.ndarray:
    values = scores.values if isinstance(scores, ScoreMatrix) else np.asarray(scores, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    return values


def residual_scores(model: PcaModel, matrix: AttributeMatrix, start: int = 2, stop: int = 11) -> ScoreMatrix:
    """Raw scores on components ``start``..``stop`` (1-based, inclusive)."""
    if not 1 <= start <= stop <= model.p:
        raise DataError(f"invalid component range PC{start}..PC{stop} for p={model.p}")
    full = pca_scores(model, matrix)
    return ScoreMatrix(full.values[:, start - 1 : stop].copy(), full.labels[start - 1 : stop])


def _sq_dist(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d = (x * x).sum(axis=1)[:, None] - 2.0 * x @ centroids.T + (centroids * centroids).sum(axis=1)[None, :]
    return np.maximum(d, 0.0)


def _plus_plus(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Distance-weighted (k-means++) seeding."""
    n = x.shape[0]
    centers = [x[rng.integers(n)]]
    closest = _sq_dist(x, centers[0][None])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            pick = rng.integers(n)
        else:
            pick = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            pick = min(pick, n - 1)
        centers.append(x[pick])
        closest = np.minimum(closest, _sq_dist(x, x[pick][None])[:, 0])
    return np.array(centers)


def _lloyd(x: np.ndarray, centroids: np.ndarray, max_iter: int):
    n, k = x.shape[0], centroids.shape[0]
    rows = np.arange(n)
    labels = None
    trace = []
    it = 0
    for it in range(1, max_iter + 1):
        d = _sq_dist(x, centroids)
        new = np.argmin(d, axis=1)
        counts = np.bincount(new, minlength=k)
        # empty clusters take the point farthest from its current centroid
        for c in np.flatnonzero(counts == 0):
            own = d[rows, new]
            far = int(np.argmax(own))
            new[far] = c
            d[far, c] = 0.0
            counts = np.bincount(new, minlength=k)
        trace.append(float(d[rows, new].sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        onehot = (labels[:, None] == np.arange(k)).astype(float)
        centroids = (onehot.T @ x) / counts[:, None]
    d = _sq_dist(x, centroids)
    inertia = float(d[rows, labels].sum())
    trace.append(min(inertia, trace[-1]))
    return labels, centroids, inertia, trace, it


def kmeans(scores, k: int, restarts: int = 10, seed: int = 0, max_iter: int = MAX_ITER) -> ClusterResult:
    """Best-inertia result over ``restarts`` k-means++/Lloyd runs.

    Restart ``r`` draws from ``sub_rng(seed, r)``; ties in inertia keep the
    earliest restart.
    """
    x = _values(scores)
    n = x.shape[0]
    if k < 2:
        raise DataError(f"k-means needs k >= 2, got {k}")
    if n <= k:
        raise DataError(f"k-means needs more rows than clusters (n={n}, k={k})")
    best = None
    inertias = []
    for r in range(max(restarts, 1)):
        start = _plus_plus(x, k, sub_rng(seed, r))
        run = _lloyd(x, start, max_iter)
        inertias.append(run[2])
        if best is None or run[2] < best[2]:
            best = run
    labels, centroids, inertia, trace, iters = best
    return ClusterResult(
        k=k,
        assignments=labels,
        centroids=centroids,
        inertia=inertia,
        silhouette=None,
        seed=int(seed),
        inertia_trace=tuple(trace),
        restart_inertias=tuple(inertias),
        iterations=iters,
    )


def assign_nearest(scores, centroids: np.ndarray) -> np.ndarray:
    return np.argmin(_sq_dist(_values(scores), np.asarray(centroids)), axis=1)


def silhouette(scores, result, chunk: int = 1024) -> float:
    """Mean Euclidean silhouette; points in singleton clusters score 0.

    ``result`` is a ClusterResult or a label vector.
    """
    x = _values(scores)
    labels = result.assignments if isinstance(result, ClusterResult) else np.asarray(result)
    _, labels = np.unique(labels, return_inverse=True)
    k = int(labels.max()) + 1
    if k < 2:
        raise DataError("silhouette needs at least two clusters")
    sizes = np.bincount(labels, minlength=k).astype(float)
    onehot = np.zeros((x.shape[0], k))
    onehot[np.arange(x.shape[0]), labels] = 1.0
    total = 0.0
    for start in range(0, x.shape[0], chunk):
        rows = slice(start, start + chunk)
        sums = cdist(x[rows], x) @ onehot
        own = labels[rows]
        idx = np.arange(sums.shape[0])
        own_size = sizes[own]
        a = np.where(own_size > 1, sums[idx, own] / np.maximum(own_size - 1, 1), 0.0)
        others = sums / sizes
        others[idx, own] = np.inf
        b = others.min(axis=1)
        denom = np.maximum(a, b)
        s = np.where((own_size > 1) & (denom > 0), (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
        total += float(s.sum())
    return total / x.shape[0]


def adjusted_rand_index(a, b) -> float:
    """Pair-counting ARI with the expected-index correction."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DataError(f"label vectors differ in length: {a.shape} vs {b.shape}")
    n = a.size
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max(initial=-1) + 1, ib.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    index = sum(comb(int(v), 2) for v in table.ravel())
    rows = sum(comb(int(v), 2) for v in table.sum(axis=1))
    cols = sum(comb(int(v), 2) for v in table.sum(axis=0))
    pairs = comb(n, 2)
    expected = rows * cols / pairs if pairs else 0.0
    maximum = 0.5 * (rows + cols)
    if maximum == expected:
        return 1.0
    return float((index - expected) / (maximum - expected))


def bootstrap_ari(
    scores,
    k: int,
    resamples: int = 100,
    seed: int = 0,
    restarts: int = 10,
    baseline: ClusterResult | None = None,
    workers: int = 1,
) -> AriReport:
    """ARI between the baseline partition and partitions induced by resample centroids.

    Each resample is clustered; the full original sample is then assigned to
    the nearest resample centroid so both partitions cover the same points.
    """
    if resamples < 10:
        raise DataError(f"bootstrap ARI needs at least 10 resamples, got {resamples}")
    x = _values(scores)
    n = x.shape[0]
    if baseline is None:
        baseline = kmeans(x, k, restarts, seed)

    def one(r: int) -> float:
        rows = sub_rng(seed, 1, r).integers(0, n, n)
        fit = kmeans(x[rows], k, restarts, sub_seed32(seed, 2, r))
        return adjusted_rand_index(baseline.assignments, assign_nearest(x, fit.centroids))

    values = np.array(ordered_map(one, list(range(resamples)), workers))
    return AriReport(resamples, float(values.mean()), float(values.std(ddof=1)), values)


def silhouette_by_k(scores, ks=range(2, 7), restarts: int = 10, seed: int = 0) -> dict[int, float]:
    out = {}
    for k in ks:
        fit = kmeans(scores, k, restarts, sub_seed32(seed, 3, k))
        out[int(k)] = silhouette(scores, fit)
    return out


def cluster_profiles(result, matrix: AttributeMatrix) -> list[ClusterProfile]:
    """Size, overall-rating mean/sd and mean standardized attributes per cluster."""
    labels = result.assignments if isinstance(result, ClusterResult) else np.asarray(result)
    if labels.shape != (matrix.n,):
        raise DataError("label vector length does not match the matrix")
    values = matrix.values
    sds = values.std(axis=0)
    z = (values - values.mean(axis=0)) / np.where(sds > 0, sds, 1.0)
    profiles = []
    for c in np.unique(labels):
        rows = labels == c
        overall = matrix.overall[rows]
        profiles.append(
            ClusterProfile(
                cluster=int(c),
                size=int(rows.sum()),
                overall_mean=float(overall.mean()),
                overall_sd=float(overall.std(ddof=1)) if overall.size > 1 else 0.0,
                attribute_means=z[rows].mean(axis=0),
            )
        )
    return profiles
