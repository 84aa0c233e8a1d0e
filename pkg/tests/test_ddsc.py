import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrdkit.data import gen_gaussian_clouds, make_rng
from mrdkit.ddsc import (
    DistanceMatrix,
    adaptive_gamma,
    affinity,
    ami,
    ari,
    cluster_distances,
    ddsc,
    kmeans,
    normalize_rows,
    normalized_laplacian,
    pairwise_distances,
    spectral_embed,
)
from mrdkit.errors import DegenerateInputWarning, InvalidInputError, PairwiseError
from mrdkit.metrics import MetricOptions, make_metric


def test_identical_sets_give_zero_matrix():
    X = make_rng(0).standard_normal((2, 5))
    D = pairwise_distances([X, X.copy()], make_metric("mrd"))
    np.testing.assert_allclose(D.values, 0.0, atol=1e-12)
    assert D.values.shape == (2, 2)


def test_three_sets_symmetric_and_triangle():
    r = make_rng(1)
    sets = [r.standard_normal((2, 6)) + k for k in range(3)]
    D = pairwise_distances(sets, make_metric("mrd")).values
    np.testing.assert_array_equal(D, D.T)
    assert np.all(np.diag(D) == 0)
    assert D[0, 2] <= D[0, 1] + D[1, 2] + 1e-6


def test_sinkhorn_matrix_on_clouds():
    coll = gen_gaussian_clouds(2, 2, 5, seed=0)
    D = pairwise_distances(coll, make_metric("sinkhorn", MetricOptions(epsilon=1.0))).values
    assert D.shape == (4, 4)
    np.testing.assert_array_equal(D, D.T)
    assert np.all(D[~np.eye(4, dtype=bool)] > 0)


def test_pairwise_error_names_pair():
    def metric(a, b):
        if a.shape[1] == 3 and b.shape[1] == 4:
            raise ValueError("boom")
        return 1.0

    sets = [np.zeros((1, 2)), np.zeros((1, 3)), np.zeros((1, 4))]
    with pytest.raises(PairwiseError) as info:
        pairwise_distances(sets, metric, parallel=False)
    assert info.value.pair == (1, 2)
    with pytest.raises(InvalidInputError):
        pairwise_distances(sets[:1], metric)


def test_parallel_matches_serial():
    coll = gen_gaussian_clouds(3, 3, 6, seed=2)
    metric = make_metric("mrd")
    a = pairwise_distances(coll, metric, parallel=False).values
    b = pairwise_distances(coll, metric, parallel=True, jobs=4).values
    assert a.tobytes() == b.tobytes()


def test_affinity_examples():
    A, g = affinity([[0, 1], [1, 0]], gamma=1.0)
    np.testing.assert_allclose(A, [[0, math.exp(-1)], [math.exp(-1), 0]])
    D = [[0, 2], [2, 0]]
    A, g = affinity(D)
    assert g == pytest.approx(1 / 8)
    assert A[0, 1] == pytest.approx(math.exp(-0.5))
    with pytest.warns(DegenerateInputWarning):
        assert adaptive_gamma(np.zeros((3, 3))) == 1.0


def test_two_cliques_embedding():
    A = np.zeros((6, 6))
    A[:3, :3] = 1
    A[3:, 3:] = 1
    np.fill_diagonal(A, 0)
    V, vals = spectral_embed(A, 2)
    np.testing.assert_allclose(vals, 0.0, atol=1e-10)
    E = normalize_rows(V)
    # rows in the same clique coincide, rows in different cliques are orthogonal
    np.testing.assert_allclose(E[0], E[1], atol=1e-8)
    np.testing.assert_allclose(E[3], E[5], atol=1e-8)
    assert abs(E[0] @ E[3]) < 1e-8


def test_complete_graph_spectrum():
    N = 5
    A = np.ones((N, N)) - np.eye(N)
    V, vals = spectral_embed(A, N)
    np.testing.assert_allclose(vals, [0] + [N / (N - 1)] * (N - 1), atol=1e-12)
    L, _ = normalized_laplacian(A)
    assert np.abs(L @ V - V * vals).max() < 1e-8


@given(st.integers(2, 8), st.integers(0, 2**31))
@settings(max_examples=40, deadline=None)
def test_laplacian_spectrum_in_range(N, seed):
    r = make_rng(seed)
    P = r.standard_normal((N, 2))
    D = np.linalg.norm(P[:, None] - P[None], axis=2)
    A, _ = affinity(D)
    L, _ = normalized_laplacian(A)
    ev = np.linalg.eigvalsh(L)
    assert ev.min() >= -1e-9 and ev.max() <= 2 + 1e-9


def test_isolated_node_is_reported():
    A = np.zeros((3, 3))
    A[0, 1] = A[1, 0] = 1.0
    _, isolated = normalized_laplacian(A)
    assert list(isolated) == [2]


def test_normalize_rows_keeps_zero_rows():
    E = normalize_rows(np.array([[3.0, 4.0], [0.0, 0.0]]))
    np.testing.assert_allclose(E, [[0.6, 0.8], [0, 0]])


def test_kmeans_examples():
    labels, _ = kmeans(np.array([[0.0], [0.1], [10.0], [10.1]]), 2, seed=0)
    assert labels[0] == labels[1] != labels[2] == labels[3]
    labels, inertia = kmeans(np.zeros((4, 2)), 1)
    assert list(labels) == [0, 0, 0, 0] and inertia == 0.0
    with pytest.raises(InvalidInputError):
        kmeans(np.zeros((2, 2)), 3)


def test_kmeans_is_deterministic():
    P = make_rng(3).standard_normal((30, 2))
    a, _ = kmeans(P, 3, seed=5)
    b, _ = kmeans(P, 3, seed=5)
    np.testing.assert_array_equal(a, b)


def test_ari_ami_examples():
    assert ari([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert ami([0, 0, 1, 1], [1, 1, 0, 0]) == pytest.approx(1.0)
    assert ari([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(-0.5)
    with pytest.raises(InvalidInputError):
        ari([0, 1], [0, 1, 1])
    with pytest.raises(InvalidInputError):
        ami([0, -1], [0, 1])


def test_cluster_result_fields():
    D = DistanceMatrix(np.array([[0, 1, 5, 5], [1, 0, 5, 5], [5, 5, 0, 1], [5, 5, 1, 0.0]]), "toy")
    res = cluster_distances(D, 2)
    assert ari(res.labels, [0, 0, 1, 1]) == 1.0
    d = res.to_dict()
    assert d["metric"] == "toy" and len(d["eigenvalues"]) == 2


def test_ddsc_end_to_end_clouds():
    coll = gen_gaussian_clouds(3, 4, 10, separation=10, spread=1, seed=0)
    res = ddsc(coll, make_metric("mrd"), 3, seed=0)
    assert ari(res.labels, coll.labels) == 1.0
    assert ami(res.labels, coll.labels) == pytest.approx(1.0)
