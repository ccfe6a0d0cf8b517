"""Cronbach's alpha and average inter-item correlation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .ingest import AttributeMatrix


@dataclass(frozen=True, eq=False)
class AlphaReport:
    alpha: float
    k: int
    item_variances: np.ndarray
    total_variance: float
    avg_inter_item_r: float
    n: int
    standardized_alpha: float
    ddof: int = 1

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "standardized_alpha": self.standardized_alpha,
            "avg_inter_item_r": self.avg_inter_item_r,
            "k": self.k,
            "n": self.n,
            "total_variance": self.total_variance,
            "item_variances": [float(x) for x in self.item_variances],
            "variance_denominator": "n-1" if self.ddof == 1 else "n",
        }


def _items(data) -> np.ndarray:
    values = data.values if isinstance(data, AttributeMatrix) else np.asarray(data, dtype=float)
    if values.ndim != 2:
        raise DataError("expected an n x k item matrix")
    return values


def alpha_from_items(values: np.ndarray, ddof: int = 1) -> tuple[float, np.ndarray, float]:
    """k/(k-1) * (1 - sum(item variances) / variance(row sums))."""
    n, k = values.shape
    if k < 2:
        raise DataError(f"Cronbach's alpha needs at least 2 items, got {k}")
    if n < 2:
        raise DataError(f"Cronbach's alpha needs at least 2 rows, got {n}")
    item_var = values.var(axis=0, ddof=ddof)
    total_var = float(values.sum(axis=1).var(ddof=ddof))
    if total_var == 0.0:
        raise DataError("total score has zero variance")
    alpha = k / (k - 1) * (1.0 - item_var.sum() / total_var)
    return float(alpha), item_var, total_var


def average_inter_item_correlation(values: np.ndarray) -> float:
    """Mean of the k(k-1)/2 upper-triangle Pearson correlations."""
    r = np.corrcoef(values, rowvar=False)
    iu = np.triu_indices_from(r, k=1)
    return float(np.clip(r[iu].mean(), -1.0, 1.0))


def cronbach_alpha(data, ddof: int = 1) -> AlphaReport:
    """Raw-score alpha plus the standardized variant k*r/(1 + (k-1)*r).

    ``data`` is an AttributeMatrix or an n x k array. The same variance
    denominator (``ddof``) is used for item and total variances.
    """
    values = _items(data)
    alpha, item_var, total_var = alpha_from_items(values, ddof=ddof)
    k = values.shape[1]
    if np.any(item_var == 0.0):
        raise DataError("an item has zero variance; inter-item correlations undefined")
    r_bar = average_inter_item_correlation(values)
    std_alpha = k * r_bar / (1.0 + (k - 1) * r_bar)
    return AlphaReport(
        alpha=alpha,
        k=k,
        item_variances=item_var,
        total_variance=total_var,
        avg_inter_item_r=r_bar,
        n=values.shape[0],
        standardized_alpha=float(std_alpha),
        ddof=ddof,
    )
