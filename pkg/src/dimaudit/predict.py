"""Cross-validated prediction of the overall rating.

Two competing models: a simple linear regression on the first principal
component score, and ridge regression on all standardized attributes with the
penalty chosen by an inner k-fold search. Every scaler, PCA and coefficient
vector is fitted on training rows only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import DataError
from .ingest import AttributeMatrix
from .linalg import standardize_array
from .pca import pca_fit, project
from .seeding import sub_rng, sub_seed32

DEFAULT_LAMBDA_GRID: tuple[float, ...] = tuple(float(x) for x in np.logspace(-3, 4, 15))


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    fold_of_row: np.ndarray
    k: int
    seed: int

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """(train rows, test rows) for one fold, each in ascending row order."""
        test = self.fold_of_row == fold
        return np.flatnonzero(~test), np.flatnonzero(test)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.fold_of_row, minlength=self.k)


@dataclass(frozen=True, eq=False)
class RidgeModel:
    coefficients: np.ndarray
    intercept: float
    lam: float
    means: np.ndarray
    sds: np.ndarray

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        return self.intercept + ((X - self.means) / self.sds) @ self.coefficients


@dataclass(frozen=True, eq=False)
class PredictionReport:
    model_name: str
    per_fold_r2: np.ndarray
    per_fold_rmse: np.ndarray
    predictions: np.ndarray
    observed: np.ndarray
    fold_lambdas: tuple[float, ...] = ()
    inner_rmse: np.ndarray | None = None
    lambda_grid: tuple[float, ...] = ()
    fold_models: list = field(default_factory=list)
    benchmark: bool = False

    @property
    def mean_r2(self) -> float:
        return float(np.mean(self.per_fold_r2))

    @property
    def mean_rmse(self) -> float:
        return float(np.mean(self.per_fold_rmse))

    @property
    def lambda_chosen(self) -> float | None:
        """Most frequently selected penalty across outer folds (ties: smaller)."""
        if not self.fold_lambdas:
            return None
        values, counts = np.unique(self.fold_lambdas, return_counts=True)
        return float(values[np.argmax(counts)])

    def to_dict(self) -> dict:
        out = {
            "model": self.model_name,
            "benchmark": self.benchmark,
            "per_fold_r2": [float(x) for x in self.per_fold_r2],
            "per_fold_rmse": [float(x) for x in self.per_fold_rmse],
            "mean_r2": self.mean_r2,
            "mean_rmse": self.mean_rmse,
            "r2_range": [float(self.per_fold_r2.min()), float(self.per_fold_r2.max())],
        }
        if self.fold_lambdas:
            out["fold_lambdas"] = list(self.fold_lambdas)
            out["lambda_chosen"] = self.lambda_chosen
        return out


def r_squared(y, yhat, reference_mean: float | None = None) -> float:
    """1 - SSE/SST; SST is taken around the evaluation mean unless given."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.size == 0:
        raise DataError("r_squared needs equal, non-zero lengths")
    center = y.mean() if reference_mean is None else reference_mean
    sst = float(((y - center) ** 2).sum())
    if np.ptp(y) == 0.0 or sst == 0.0:
        raise DataError("r_squared undefined for a constant target")
    return 1.0 - float(((y - yhat) ** 2).sum()) / sst


def rmse(y, yhat) -> float:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.size == 0:
        raise DataError("rmse needs equal, non-zero lengths")
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


def kfold_split(n: int, k: int = 5, seed: int = 0) -> FoldAssignment:
    """Seeded shuffle then contiguous blocks; block sizes differ by at most one."""
    if k < 2:
        raise DataError(f"need k >= 2 folds, got {k}")
    if n < k:
        raise DataError(f"cannot split {n} rows into {k} folds")
    order = sub_rng(seed, 0).permutation(n)
    fold_of_row = np.empty(n, dtype=np.intp)
    for fold, block in enumerate(np.array_split(order, k)):
        fold_of_row[block] = fold
    return FoldAssignment(fold_of_row, k, int(seed))


def _solve_ridge(gram: np.ndarray, xty: np.ndarray, lam: float) -> np.ndarray:
    p = gram.shape[0]
    system = gram + lam * np.eye(p)
    if lam == 0.0 and np.linalg.cond(gram) > 1e12:
        raise DataError("singular normal equations at lambda = 0 (collinear columns)")
    try:
        return cho_solve(cho_factor(system, lower=True), xty)
    except LinAlgError as exc:
        raise DataError(f"ridge system not positive definite at lambda={lam}") from exc


def ridge_fit(X, y, lam: float, standardize: bool = True) -> RidgeModel:
    """Solve (X'X + lam I) b = X'(y - ybar) on scaled columns; intercept = ybar.

    With ``standardize`` the columns are z-scored (population sd) and the
    scaler is stored on the model; otherwise they are only centered. The
    intercept is never penalized.
    """
    if lam < 0:
        raise DataError(f"lambda must be non-negative, got {lam}")
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    if y.shape != (X.shape[0],):
        raise DataError("X and y row counts differ")
    if standardize:
        Z, means, sds = standardize_array(X)
    else:
        means = X.mean(axis=0)
        sds = np.ones(X.shape[1])
        Z = X - means
    ybar = float(y.mean())
    beta = _solve_ridge(Z.T @ Z, Z.T @ (y - ybar), float(lam))
    return RidgeModel(beta, ybar, float(lam), means, sds)


def select_lambda(X, y, lambda_grid: Sequence[float], k: int = 5, seed: int = 0):
    """Inner k-fold search; returns (best lambda, mean RMSE per grid point)."""
    grid = [float(x) for x in lambda_grid]
    if not grid:
        raise DataError("lambda grid is empty")
    folds = kfold_split(len(y), k, seed)
    scores = np.zeros((k, len(grid)))
    for f in range(k):
        tr, te = folds.split(f)
        Z, means, sds = standardize_array(X[tr])
        Zte = (X[te] - means) / sds
        ybar = y[tr].mean()
        gram, xty = Z.T @ Z, Z.T @ (y[tr] - ybar)
        for j, lam in enumerate(grid):
            beta = _solve_ridge(gram, xty, lam)
            scores[f, j] = rmse(y[te], ybar + Zte @ beta)
    curve = scores.mean(axis=0)
    return grid[int(np.argmin(curve))], curve


def cross_validate_ridge(
    matrix: AttributeMatrix,
    folds: FoldAssignment,
    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    inner_k: int = 5,
    r2_reference: str = "fold",
) -> PredictionReport:
    """Nested CV: lambda picked on each training fold, scored on its held-out fold."""
    X, y = matrix.values, matrix.overall
    _check_folds(folds, len(y))
    grid = tuple(float(x) for x in lambda_grid)
    r2s, rmses, lams, curves, models = [], [], [], [], []
    predictions = np.empty_like(y)
    for f in range(folds.k):
        tr, te = folds.split(f)
        lam, curve = select_lambda(X[tr], y[tr], grid, inner_k, sub_seed32(folds.seed, 1, f))
        model = ridge_fit(X[tr], y[tr], lam)
        yhat = model.predict(X[te])
        predictions[te] = yhat
        r2s.append(r_squared(y[te], yhat, _reference(y[tr], r2_reference)))
        rmses.append(rmse(y[te], yhat))
        lams.append(lam)
        curves.append(curve)
        models.append(model)
    return PredictionReport(
        model_name="ridge_all_attributes",
        per_fold_r2=np.array(r2s),
        per_fold_rmse=np.array(rmses),
        predictions=predictions,
        observed=y.copy(),
        fold_lambdas=tuple(lams),
        inner_rmse=np.array(curves),
        lambda_grid=grid,
        fold_models=models,
    )


@dataclass(frozen=True, eq=False)
class Pc1Regression:
    """y ~ intercept + slope * (PC1 score), PCA fitted on the training rows."""

    intercept: float
    slope: float
    loading: np.ndarray
    means: np.ndarray
    sds: np.ndarray

    def predict(self, X) -> np.ndarray:
        return self.intercept + self.slope * (((np.asarray(X) - self.means) / self.sds) @ self.loading)


def fit_pc1_regression(train: AttributeMatrix) -> Pc1Regression:
    model = pca_fit(train)
    score = project(model, train.values)[:, 0]
    y = train.overall
    sc = score - score.mean()
    slope = float(sc @ (y - y.mean()) / (sc @ sc))
    intercept = float(y.mean() - slope * score.mean())
    return Pc1Regression(intercept, slope, model.loadings[:, 0].copy(), model.means, model.sds)


def cross_validate_pc1(
    matrix: AttributeMatrix, folds: FoldAssignment, r2_reference: str = "fold"
) -> PredictionReport:
    y = matrix.overall
    _check_folds(folds, len(y))
    r2s, rmses, models = [], [], []
    predictions = np.empty_like(y)
    for f in range(folds.k):
        tr, te = folds.split(f)
        model = fit_pc1_regression(matrix.take(tr))
        yhat = model.predict(matrix.values[te])
        predictions[te] = yhat
        r2s.append(r_squared(y[te], yhat, _reference(y[tr], r2_reference)))
        rmses.append(rmse(y[te], yhat))
        models.append(model)
    return PredictionReport(
        model_name="linear_pc1_only",
        per_fold_r2=np.array(r2s),
        per_fold_rmse=np.array(rmses),
        predictions=predictions,
        observed=y.copy(),
        fold_models=models,
    )


def _reference(y_train: np.ndarray, mode: str) -> float | None:
    if mode == "fold":
        return None
    if mode == "train":
        return float(y_train.mean())
    raise DataError(f"unknown r2_reference {mode!r} (use 'fold' or 'train')")


def _check_folds(folds: FoldAssignment, n: int) -> None:
    if folds.fold_of_row.shape != (n,):
        raise DataError(f"fold assignment covers {folds.fold_of_row.size} rows, data has {n}")
