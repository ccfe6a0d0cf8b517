"""Planted-factor data with known ground truth.

Rows are ``L f + e`` with Gaussian factors ``f`` and noise ``e ~ N(0, noise_sd^2 I)``,
then mapped affinely onto a 0-100-like rating scale. The synthetic overall
rating is ``target_weights . f`` plus a little noise, mapped the same way.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DataError
from .ingest import AttributeMatrix, Schema
from .seeding import sub_rng


@dataclass(frozen=True, eq=False)
class PlantedSpec:
    n: int
    loadings: np.ndarray  # p x m
    noise_sd: float
    target_weights: np.ndarray
    seed: int = 0
    target_noise_sd: float = 0.1
    attribute_center: float = 60.0
    attribute_scale: float = 10.0
    overall_center: float = 68.0
    overall_scale: float = 6.0
    # optional two-group mixture: group g in {0, 1} shifts its factors by (2g - 1) * shift
    group_shift: Optional[np.ndarray] = None
    attribute_names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        L = np.atleast_2d(np.asarray(self.loadings, dtype=float))
        if L.shape[0] == 1 and L.shape[1] > 1 and np.ndim(self.loadings) == 1:
            L = L.T
        object.__setattr__(self, "loadings", L)
        w = np.asarray(self.target_weights, dtype=float).reshape(-1)
        object.__setattr__(self, "target_weights", w)
        p, m = L.shape
        if m >= p:
            raise DataError(f"need fewer factors than attributes (m={m}, p={p})")
        if np.linalg.matrix_rank(L) < m:
            raise DataError("loading columns must be linearly independent")
        if self.noise_sd <= 0:
            raise DataError("noise_sd must be positive")
        if w.size != m:
            raise DataError(f"target_weights needs {m} entries, got {w.size}")
        if self.n <= p:
            raise DataError(f"need n > p (n={self.n}, p={p})")
        if self.group_shift is not None:
            shift = np.asarray(self.group_shift, dtype=float).reshape(-1)
            if shift.size != m:
                raise DataError("group_shift needs one entry per factor")
            object.__setattr__(self, "group_shift", shift)
        if self.attribute_names is not None and len(self.attribute_names) != p:
            raise DataError("attribute_names length must equal p")

    @property
    def p(self) -> int:
        return self.loadings.shape[0]

    @property
    def m(self) -> int:
        return self.loadings.shape[1]

    def names(self) -> tuple[str, ...]:
        if self.attribute_names is not None:
            return tuple(self.attribute_names)
        return tuple(f"attr_{j + 1:02d}" for j in range(self.p))

    def factor_covariance(self) -> np.ndarray:
        cov = np.eye(self.m)
        if self.group_shift is not None:
            cov += np.outer(self.group_shift, self.group_shift)
        return cov

    def population_covariance(self) -> np.ndarray:
        """Covariance of the unscaled rows: L Phi L' + noise_sd^2 I."""
        L = self.loadings
        return L @ self.factor_covariance() @ L.T + self.noise_sd**2 * np.eye(self.p)

    def population_correlation(self) -> np.ndarray:
        cov = self.population_covariance()
        d = np.sqrt(np.diag(cov))
        return cov / np.outer(d, d)


@dataclass(frozen=True, eq=False)
class PlantedData:
    matrix: AttributeMatrix
    factors: np.ndarray
    spec: PlantedSpec
    groups: Optional[np.ndarray] = None

    def unscaled(self) -> np.ndarray:
        """Attribute block before the affine rating-scale map."""
        return (self.matrix.values - self.spec.attribute_center) / self.spec.attribute_scale


def generate_planted(spec: PlantedSpec) -> tuple[AttributeMatrix, np.ndarray]:
    data = generate(spec)
    return data.matrix, data.factors


def generate(spec: PlantedSpec) -> PlantedData:
    rng = sub_rng(spec.seed, 0)
    n, p, m = spec.n, spec.p, spec.m
    factors = rng.standard_normal((n, m))
    groups = None
    if spec.group_shift is not None:
        groups = rng.integers(0, 2, n)
        factors += (2 * groups[:, None] - 1) * spec.group_shift[None, :]
    noise = spec.noise_sd * rng.standard_normal((n, p))
    raw = factors @ spec.loadings.T + noise
    target = factors @ spec.target_weights + spec.target_noise_sd * rng.standard_normal(n)
    values = spec.attribute_center + spec.attribute_scale * raw
    overall = spec.overall_center + spec.overall_scale * target
    ids = tuple(f"syn{i:06d}" for i in range(n))
    matrix = AttributeMatrix(values, spec.names(), ids, overall)
    return PlantedData(matrix, factors, spec, groups)


def block_loadings(p: int, strengths: Sequence[float]) -> np.ndarray:
    """Each attribute loads on exactly one factor; contiguous, near-equal blocks."""
    m = len(strengths)
    L = np.zeros((p, m))
    for j, block in enumerate(np.array_split(np.arange(p), m)):
        L[block, j] = strengths[j]
    return L


def four_factor_spec(n: int = 2000, p: int = 28, seed: int = 0, noise_sd: float = 0.7) -> PlantedSpec:
    """Four well-separated blocks with distinct strengths; target leans on factors 2-4."""
    return PlantedSpec(
        n=n,
        loadings=block_loadings(p, (0.8, 0.7, 0.6, 0.5)),
        noise_sd=noise_sd,
        target_weights=np.array([0.2, 1.0, 1.0, 1.0]),
        seed=seed,
    )


def one_factor_spec(n: int = 1000, p: int = 10, seed: int = 0, strength: float = 0.9,
                    noise_sd: float = 0.4) -> PlantedSpec:
    return PlantedSpec(
        n=n,
        loadings=np.full((p, 1), strength),
        noise_sd=noise_sd,
        target_weights=np.array([1.0]),
        seed=seed,
    )


def noise_spec(n: int, p: int, seed: int = 0) -> PlantedSpec:
    """Negligible loadings: effectively pure Gaussian noise."""
    L = np.zeros((p, 1))
    L[0, 0] = 1e-9
    return PlantedSpec(n=n, loadings=L, noise_sd=1.0, target_weights=np.array([1.0]), seed=seed)


def write_csv(data: PlantedData | AttributeMatrix, path, schema: Schema | None = None) -> Path:
    """Write a matrix in the CSV layout ``ingest.load_table`` reads back exactly."""
    matrix = data.matrix if isinstance(data, PlantedData) else data
    schema = schema or Schema(attributes=matrix.attribute_names)
    if tuple(schema.attributes) != tuple(matrix.attribute_names):
        raise DataError("schema attributes must match the matrix columns")
    path = Path(path)
    header = [schema.id_column]
    if schema.season_column:
        header.append(schema.season_column)
    header += [schema.rating_column, *schema.attributes]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, pid in enumerate(matrix.player_ids):
            row = [pid]
            if schema.season_column:
                row.append("synthetic")
            row.append(repr(float(matrix.overall[i])))
            row += [repr(float(v)) for v in matrix.values[i]]
            writer.writerow(row)
    return path
