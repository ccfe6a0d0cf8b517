import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dimaudit.errors import DataError
from dimaudit.predict import (
    DEFAULT_LAMBDA_GRID,
    cross_validate_pc1,
    cross_validate_ridge,
    kfold_split,
    r_squared,
    ridge_fit,
    rmse,
    select_lambda,
)
from dimaudit.synth import four_factor_spec, generate

from conftest import as_matrix


def test_metrics_examples():
    y = np.array([0.0, 2.0])
    assert rmse(y, [1.0, 1.0]) == 1.0
    assert r_squared(y, [1.0, 1.0]) == 0.0
    assert r_squared(y, y) == 1.0 and rmse(y, y) == 0.0
    with pytest.raises(DataError):
        r_squared([3.0, 3.0], [3.0, 3.0])
    with pytest.raises(DataError):
        rmse([1.0], [1.0, 2.0])


def test_r2_training_mean_reference():
    y = np.array([1.0, 2.0, 3.0])
    # SST around 0 instead of 2: 14; SSE 3 -> 1 - 3/14
    assert r_squared(y, [2.0, 3.0, 4.0], reference_mean=0.0) == pytest.approx(1 - 3 / 14)


def test_kfold_sizes():
    assert sorted(kfold_split(10, 5, seed=1).sizes()) == [2] * 5
    assert sorted(kfold_split(11, 5, seed=1).sizes()) == [2, 2, 2, 2, 3]
    a, b = kfold_split(37, 5, seed=4), kfold_split(37, 5, seed=4)
    np.testing.assert_array_equal(a.fold_of_row, b.fold_of_row)
    with pytest.raises(DataError):
        kfold_split(3, 5)
    with pytest.raises(DataError):
        kfold_split(10, 1)


@given(st.integers(2, 200), st.integers(2, 10), st.integers(0, 2**32))
@settings(max_examples=50, deadline=None)
def test_kfold_properties(n, k, seed):
    if n < k:
        return
    folds = kfold_split(n, k, seed)
    sizes = folds.sizes()
    assert sizes.sum() == n and sizes.max() - sizes.min() <= 1
    assert set(np.unique(folds.fold_of_row)) <= set(range(k))


@pytest.fixture(scope="module")
def xy():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 5)) * [1, 2, 3, 4, 5] + 10
    y = X @ np.array([0.5, -1.0, 0.2, 0.0, 0.3]) + rng.normal(size=200)
    return X, y


def test_ridge_zero_penalty_is_ols(xy):
    X, y = xy
    model = ridge_fit(X, y, 0.0)
    # independent route: least squares with an explicit intercept column, raw units
    design = np.column_stack([np.ones(len(y)), X])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    np.testing.assert_allclose(model.predict(X), design @ coef, atol=1e-8)
    np.testing.assert_allclose(model.coefficients / model.sds, coef[1:], atol=1e-8)
    # normal equations on the scaled design
    Z = (X - model.means) / model.sds
    np.testing.assert_allclose(Z.T @ Z @ model.coefficients, Z.T @ (y - y.mean()), atol=1e-8)


def test_ridge_huge_penalty(xy):
    X, y = xy
    model = ridge_fit(X, y, 1e12)
    assert np.linalg.norm(model.coefficients) < 1e-6
    np.testing.assert_allclose(model.predict(X), y.mean(), atol=1e-5)


def test_scalar_ridge_analytic():
    x = np.random.default_rng(1).normal(size=101)
    x = (x - x.mean()) / x.std()
    n = x.size
    model = ridge_fit(x[:, None], 2 * x, float(n), standardize=False)
    # beta = sum(x*y) / (sum(x^2) + lambda) = 2n / (n + n) = 1
    assert abs(model.coefficients[0] - 1.0) < 1e-10


def test_ridge_norm_shrinks_with_lambda(xy):
    X, y = xy
    norms = [np.linalg.norm(ridge_fit(X, y, lam).coefficients) for lam in DEFAULT_LAMBDA_GRID]
    assert all(a >= b for a, b in zip(norms, norms[1:]))


def test_ridge_collinear_zero_penalty():
    x = np.random.default_rng(2).normal(size=(50, 1))
    X = np.hstack([x, 2 * x + 1])
    with pytest.raises(DataError, match="singular"):
        ridge_fit(X, x[:, 0], 0.0)
    ridge_fit(X, x[:, 0], 1.0)
    with pytest.raises(DataError):
        ridge_fit(X, x[:, 0], -1.0)


def test_exact_linear_target_r2_one():
    rng = np.random.default_rng(3)
    X = rng.normal(50, 10, size=(300, 6))
    m = as_matrix(X, overall=X @ np.arange(1.0, 7.0) + 4.0)
    rep = cross_validate_ridge(m, kfold_split(300, 5, 1), lambda_grid=[1e-8, 1e-6])
    assert rep.mean_r2 == pytest.approx(1.0, abs=1e-6)


def test_noise_target_r2_near_zero():
    for seed in range(3):
        rng = np.random.default_rng(seed)
        m = as_matrix(rng.normal(size=(400, 8)), overall=rng.normal(size=400))
        rep = cross_validate_ridge(m, kfold_split(400, 5, seed))
        assert rep.mean_r2 <= 0.02


def test_selection_beats_grid_extremes(xy):
    X, y = xy
    best, curve = select_lambda(X, y, DEFAULT_LAMBDA_GRID, seed=3)
    assert curve[DEFAULT_LAMBDA_GRID.index(best)] <= min(curve[0], curve[-1])


def test_report_fields_and_determinism(xy):
    X, y = xy
    m = as_matrix(X, overall=y)
    folds = kfold_split(m.n, 5, 11)
    a = cross_validate_ridge(m, folds)
    b = cross_validate_ridge(m, folds)
    assert a.to_dict() == b.to_dict()
    assert a.mean_r2 == pytest.approx(np.mean(a.per_fold_r2))
    assert np.all(a.per_fold_rmse >= 0) and np.all(a.per_fold_r2 <= 1)
    assert len(a.fold_lambdas) == 5 and a.lambda_chosen in a.fold_lambdas
    assert a.inner_rmse.shape == (5, len(DEFAULT_LAMBDA_GRID))


def test_leakage_guard(xy):
    X, y = xy
    folds = kfold_split(len(y), 5, 2)
    base = cross_validate_ridge(as_matrix(X, overall=y), folds)
    base_pc1 = cross_validate_pc1(as_matrix(X, overall=y), folds)
    _, test_rows = folds.split(0)
    y2 = y.copy()
    y2[test_rows[0]], y2[test_rows[1]] = y[test_rows[1]] + 5.0, y[test_rows[0]] - 3.0
    swapped = cross_validate_ridge(as_matrix(X, overall=y2), folds)
    swapped_pc1 = cross_validate_pc1(as_matrix(X, overall=y2), folds)
    np.testing.assert_array_equal(base.fold_models[0].coefficients, swapped.fold_models[0].coefficients)
    assert base.fold_models[0].intercept == swapped.fold_models[0].intercept
    assert base_pc1.fold_models[0].slope == swapped_pc1.fold_models[0].slope
    np.testing.assert_array_equal(base.predictions[test_rows], swapped.predictions[test_rows])


def test_pc1_exact_linear_target():
    # rank-one data: every training fold finds the same PC1 direction, and the
    # target is affine in that score, so held-out predictions are exact
    g = np.random.default_rng(4).normal(size=500)
    X = np.column_stack([50 + 10 * g, 40 - 5 * g, 70 + 2 * g, 3 * g])
    m = as_matrix(X, overall=60 + 4 * g)
    rep = cross_validate_pc1(m, kfold_split(500, 5, 0))
    assert rep.mean_r2 == pytest.approx(1.0, abs=1e-6)


def test_pc1_below_ridge_on_residual_target():
    data = generate(four_factor_spec(n=2000, p=28, seed=5))
    folds = kfold_split(2000, 5, 1)
    pc1 = cross_validate_pc1(data.matrix, folds)
    ridge = cross_validate_ridge(data.matrix, folds)
    assert ridge.mean_r2 - pc1.mean_r2 >= 0.2


def test_bad_r2_reference(xy):
    X, y = xy
    with pytest.raises(DataError):
        cross_validate_pc1(as_matrix(X, overall=y), kfold_split(len(y), 5, 0), r2_reference="x")
