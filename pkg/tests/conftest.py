import os
from pathlib import Path

import numpy as np
import pytest

from dimaudit.ingest import AttributeMatrix

FIXTURE_ENV = "DIMAUDIT_FIXTURE_CSV"
DEFAULT_FIXTURE = Path(__file__).parent / "data" / "player_attributes.csv"


def fixture_csv():
    path = os.environ.get(FIXTURE_ENV)
    path = Path(path) if path else DEFAULT_FIXTURE
    return path if path.is_file() else None


def exact_correlation_data(n, corr, seed=0):
    """Rows whose sample correlation matrix equals ``corr`` up to rounding."""
    corr = np.asarray(corr, dtype=float)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, corr.shape[0]))
    z -= z.mean(axis=0)
    # whiten: sample covariance of z becomes the identity
    chol = np.linalg.cholesky(z.T @ z / n)
    z = np.linalg.solve(chol, z.T).T
    return z @ np.linalg.cholesky(corr).T


def equicorrelation(p, r):
    return np.full((p, p), r) + (1 - r) * np.eye(p)


def as_matrix(values, overall=None, names=None):
    values = np.asarray(values, dtype=float)
    n, p = values.shape
    names = names or tuple(f"a{j}" for j in range(p))
    if overall is None:
        overall = values.mean(axis=1)
    return AttributeMatrix(values, names, tuple(f"r{i}" for i in range(n)), overall)


# acceptance summary: one line per criterion at the end of the run
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, text = marker.args
    state = _CRITERIA.get(number, (text, "PASS"))[1]
    if rep.skipped:
        state = "SKIP" if state == "PASS" else state
    elif rep.failed:
        state = "FAIL"
    _CRITERIA[number] = (text, state)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        text, state = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:>2}: {state:4s}  {text}")
