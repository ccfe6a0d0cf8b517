from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dimaudit.cluster import (
    adjusted_rand_index,
    bootstrap_ari,
    cluster_profiles,
    kmeans,
    residual_scores,
    silhouette,
    silhouette_by_k,
)
from dimaudit.errors import DataError
from dimaudit.pca import pca_fit, pca_scores
from dimaudit.synth import PlantedSpec, generate

from conftest import as_matrix


def ari_pairs(a, b):
    """Brute force over all pairs: a = together in both, d = apart in both."""
    same_same = same_diff = diff_same = diff_diff = 0
    for i, j in combinations(range(len(a)), 2):
        sa, sb = a[i] == a[j], b[i] == b[j]
        if sa and sb:
            same_same += 1
        elif sa:
            same_diff += 1
        elif sb:
            diff_same += 1
        else:
            diff_diff += 1
    num = 2.0 * (same_same * diff_diff - same_diff * diff_same)
    den = (same_same + same_diff) * (same_diff + diff_diff) + (same_same + diff_same) * (diff_same + diff_diff)
    return 1.0 if den == 0 else num / den


def silhouette_brute(x, labels):
    n = len(x)
    total = 0.0
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            continue
        a = np.mean([np.linalg.norm(x[i] - x[j]) for j in own])
        b = min(
            np.mean([np.linalg.norm(x[i] - x[j]) for j in range(n) if labels[j] == c])
            for c in set(labels) if c != labels[i]
        )
        total += (b - a) / max(a, b)
    return total / n


def test_ari_hand_example():
    # pairs: (0,1) same/diff, (2,3) same/diff, (0,2) diff/same, (1,3) diff/same, (0,3),(1,2) diff/diff
    assert ari_pairs([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(-0.5, abs=1e-15)
    assert abs(adjusted_rand_index([0, 0, 1, 1], [0, 1, 0, 1]) - (-0.5)) < 1e-12


def test_ari_identity_and_relabel():
    a = np.array([0, 0, 1, 1, 2, 2, 2])
    assert adjusted_rand_index(a, a) == 1.0
    assert adjusted_rand_index([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    with pytest.raises(DataError):
        adjusted_rand_index([0, 1], [0, 1, 1])


labelings = st.integers(2, 25).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 3), min_size=n, max_size=n),
                        st.lists(st.integers(0, 3), min_size=n, max_size=n))
)


@given(labelings)
@settings(max_examples=80, deadline=None)
def test_ari_matches_pair_counting_and_is_symmetric(ab):
    a, b = ab
    value = adjusted_rand_index(a, b)
    assert value == pytest.approx(ari_pairs(a, b), abs=1e-12)
    assert value == pytest.approx(adjusted_rand_index(b, a), abs=1e-12)
    assert -1.0 <= value <= 1.0 + 1e-12


def two_blobs(n=200, gap=40.0, seed=0):
    rng = np.random.default_rng(seed)
    truth = np.repeat([0, 1], n // 2)
    x = rng.normal(size=(n, 3))
    x[truth == 1, 0] += gap
    return x, truth


def test_kmeans_separates_blobs():
    x, truth = two_blobs()
    res = kmeans(x, 2, seed=3)
    assert adjusted_rand_index(res.assignments, truth) == 1.0
    assert silhouette(x, res) > 0.9
    assert set(np.unique(res.assignments)) == {0, 1}


def test_kmeans_invariants():
    x = np.random.default_rng(1).normal(size=(300, 4))
    res = kmeans(x, 3, restarts=6, seed=2)
    trace = np.array(res.inertia_trace)
    assert np.all(np.diff(trace) <= 1e-9 * trace[0])
    assert res.inertia <= min(res.restart_inertias) + 1e-9
    assert len(res.restart_inertias) == 6
    assert np.all(res.sizes() > 0) and res.assignments.max() < 3
    again = kmeans(x, 3, restarts=6, seed=2)
    np.testing.assert_array_equal(res.assignments, again.assignments)


def test_kmeans_preconditions():
    x = np.random.default_rng(1).normal(size=(3, 2))
    with pytest.raises(DataError):
        kmeans(x, 3)
    with pytest.raises(DataError):
        kmeans(x, 1)


def test_kmeans_repairs_empty_cluster():
    # many duplicate points: k-means++ can still place centroids, clusters must be non-empty
    x = np.vstack([np.zeros((20, 2)), np.ones((20, 2)), [[5.0, 5.0]]])
    res = kmeans(x, 3, restarts=3, seed=0)
    assert np.all(res.sizes() > 0)


def test_silhouette_matches_brute_force():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(40, 3))
    labels = rng.integers(0, 3, 40)
    labels[0] = 3  # singleton cluster scores 0
    assert silhouette(x, labels, chunk=7) == pytest.approx(silhouette_brute(x, labels), abs=1e-12)


def test_silhouette_split_blob_is_low():
    x = np.random.default_rng(6).normal(size=(400, 2))
    arbitrary = (np.arange(400) % 2)
    assert silhouette(x, arbitrary) <= 0.05


def test_ari_bootstrap_two_blobs():
    x, _ = two_blobs(seed=2)
    rep = bootstrap_ari(x, 2, resamples=20, seed=1, restarts=3)
    assert rep.ari_mean == 1.0
    assert rep.values.min() <= rep.ari_mean <= rep.values.max()


def test_ari_bootstrap_isotropic_noise_unstable():
    x = np.random.default_rng(7).normal(size=(500, 10))
    rep = bootstrap_ari(x, 2, resamples=20, seed=2, restarts=5)
    assert rep.ari_mean < 0.5


def test_ari_bootstrap_worker_invariant():
    x = np.random.default_rng(8).normal(size=(150, 3))
    a = bootstrap_ari(x, 2, resamples=10, seed=2, restarts=2)
    b = bootstrap_ari(x, 2, resamples=10, seed=2, restarts=2, workers=3)
    np.testing.assert_array_equal(a.values, b.values)
    with pytest.raises(DataError):
        bootstrap_ari(x, 2, resamples=5)


@pytest.fixture(scope="module")
def profiled():
    # dominant general factor plus a weaker bipolar one that carries the groups
    # (group 1 shifts toward the off_ attributes, group 0 toward def_)
    p = 12
    L = np.zeros((p, 2))
    L[:, 0] = 0.9
    L[:6, 1] = 0.3
    L[6:, 1] = -0.3
    spec = PlantedSpec(n=1500, loadings=L, noise_sd=0.4, target_weights=[1.0, 0.5], seed=4,
                       group_shift=[0.0, 2.0],
                       attribute_names=tuple([f"off_{i}" for i in range(6)] + [f"def_{i}" for i in range(6)]))
    return generate(spec)


def test_residual_scores_shape_and_orthogonality(profiled):
    m = profiled.matrix
    model = pca_fit(m)
    res = residual_scores(model, m, 2, 11)
    assert res.values.shape == (m.n, 10)
    assert res.labels[0] == "PC2" and res.labels[-1] == "PC11"
    pc = pca_scores(model, m).values
    np.testing.assert_array_equal(residual_scores(model, m, 2, 2).values[:, 0], pc[:, 1])
    corr = [np.corrcoef(res.values[:, j], pc[:, 0])[0, 1] for j in range(10)]
    assert np.max(np.abs(corr)) < 1e-8
    with pytest.raises(DataError):
        residual_scores(model, m, 2, 13)
    with pytest.raises(DataError):
        residual_scores(model, m, 3, 2)


def test_profiles_recover_planted_groups(profiled):
    m = profiled.matrix
    scores = residual_scores(pca_fit(m), m, 2, 6)
    res = kmeans(scores, 2, seed=1)
    assert adjusted_rand_index(res.assignments, profiled.groups) > 0.8
    profiles = cluster_profiles(res, m)
    assert sum(p.size for p in profiles) == m.n
    # the cluster dominated by group 0 should show elevated defensive attribute means
    dominant = [np.mean(profiled.groups[res.assignments == p.cluster]) for p in profiles]
    defensive = profiles[int(np.argmin(dominant))]
    offensive = profiles[int(np.argmax(dominant))]
    assert defensive.attribute_means[6:].mean() > offensive.attribute_means[6:].mean()
    assert offensive.attribute_means[:6].mean() > defensive.attribute_means[:6].mean()


def test_single_cluster_profile_is_global():
    x = np.random.default_rng(2).normal(60, 5, size=(50, 3))
    m = as_matrix(x)
    (prof,) = cluster_profiles(np.zeros(50, dtype=int), m)
    assert prof.size == 50
    assert prof.overall_mean == pytest.approx(m.overall.mean())
    np.testing.assert_allclose(prof.attribute_means, 0.0, atol=1e-12)


def test_silhouette_by_k_range():
    x, _ = two_blobs(seed=4)
    by_k = silhouette_by_k(x, range(2, 5), restarts=3, seed=1)
    assert list(by_k) == [2, 3, 4]
    assert max(by_k, key=by_k.get) == 2
