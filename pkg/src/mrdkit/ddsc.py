"""Spectral clustering of a collection of sample sets.

Pipeline: pairwise set distances, Gaussian affinity, normalized Laplacian,
bottom eigenvectors with unit-norm rows, then k-means on the rows.
"""
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from sklearn.cluster import KMeans
from sklearn.metrics import adjusted_mutual_info_score, adjusted_rand_score

from mrdkit.errors import DegenerateInputWarning, InvalidInputError, PairwiseError

ADAPTIVE = "auto"
ZERO_DEGREE_EPS = 1e-12
KMEANS_RESTARTS = 20
KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-10


@dataclass
class DistanceMatrix:
    values: np.ndarray
    metric_tag: str = ""

    def __post_init__(self):
        V = np.asarray(self.values, dtype=np.float64)
        if V.ndim != 2 or V.shape[0] != V.shape[1]:
            raise InvalidInputError(f"distance matrix must be square, got {V.shape}")
        self.values = V

    @property
    def n(self):
        return self.values.shape[0]


def default_jobs():
    return os.cpu_count() or 1


def pairwise_distances(collection, metric, parallel=True, jobs=None, tag=None):
    """Distance matrix over a list of sample sets.

    Only the upper triangle is evaluated; the result is mirrored, symmetrized
    and given a zero diagonal. Each entry is written to its own slot, so the
    matrix does not depend on ``parallel`` or ``jobs``.
    """
    sets = list(getattr(collection, "sets", collection))
    N = len(sets)
    if N < 2:
        raise InvalidInputError(f"need at least 2 sets, got {N}")
    pairs = [(i, j) for i in range(N) for j in range(i + 1, N)]

    def one(pair):
        i, j = pair
        try:
            return float(metric(sets[i], sets[j]))
        except Exception as exc:
            raise PairwiseError(i, j, exc) from exc

    workers = jobs or default_jobs()
    if parallel and workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(one, pairs))
    else:
        values = [one(p) for p in pairs]
    D = np.zeros((N, N))
    for (i, j), v in zip(pairs, values):
        D[i, j] = v
    D = D + D.T
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return DistanceMatrix(D, tag if tag is not None else getattr(metric, "tag", ""))


def adaptive_gamma(D):
    """``1 / (2 mu^2)`` with ``mu`` the mean off-diagonal distance."""
    D = np.asarray(getattr(D, "values", D), dtype=np.float64)
    N = D.shape[0]
    mu = float(D[~np.eye(N, dtype=bool)].mean()) if N > 1 else 0.0
    if not mu > 0:
        warnings.warn("all distances are zero; gamma set to 1.0", DegenerateInputWarning, stacklevel=2)
        return 1.0
    return 1.0 / (2.0 * mu * mu)


def affinity(D, gamma=ADAPTIVE):
    """Gaussian affinity ``exp(-gamma D^2)`` with a zero diagonal.

    Returns ``(A, gamma)``; ``gamma`` is the value actually used.
    """
    D = np.asarray(getattr(D, "values", D), dtype=np.float64)
    gamma = adaptive_gamma(D) if gamma == ADAPTIVE else float(gamma)
    if gamma < 0:
        raise InvalidInputError(f"gamma must be >= 0, got {gamma}")
    A = np.exp(-gamma * D * D)
    np.fill_diagonal(A, 0.0)
    if not np.any(A):
        warnings.warn("affinity matrix is all zero", DegenerateInputWarning, stacklevel=2)
    return A, gamma


def normalized_laplacian(A):
    """``I - S^{-1/2} A S^{-1/2}``; returns ``(L, isolated_node_indices)``."""
    A = np.asarray(A, dtype=np.float64)
    deg = A.sum(axis=1)
    isolated = np.flatnonzero(deg <= 0.0)
    deg = np.where(deg <= 0.0, deg + ZERO_DEGREE_EPS, deg)
    inv_sqrt = 1.0 / np.sqrt(deg)
    L = np.eye(A.shape[0]) - inv_sqrt[:, None] * A * inv_sqrt[None, :]
    return 0.5 * (L + L.T), isolated


def spectral_embed(A, K):
    """Eigenvectors of the ``K`` smallest normalized-Laplacian eigenvalues.

    Returns ``(V, eigenvalues)`` with ``V`` of shape ``(N, K)`` and the
    eigenvalues ascending. Rows are not normalized here.
    """
    A = np.asarray(A, dtype=np.float64)
    N = A.shape[0]
    if not 1 <= int(K) <= N:
        raise InvalidInputError(f"K must be in [1, {N}], got {K}")
    L, _ = normalized_laplacian(A)
    values, vectors = scipy.linalg.eigh(L, subset_by_index=[0, int(K) - 1])
    return vectors, values


def normalize_rows(V):
    """Scale rows to unit norm; numerically zero rows are left at zero."""
    norms = np.linalg.norm(V, axis=1, keepdims=True)
    out = np.zeros_like(V)
    ok = norms[:, 0] > np.finfo(np.float64).tiny
    out[ok] = V[ok] / norms[ok]
    return out


def kmeans(points, K, restarts=KMEANS_RESTARTS, seed=0):
    """k-means++ with ``restarts`` initializations; returns ``(labels, inertia)``."""
    P = np.asarray(points, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    if not 1 <= int(K) <= P.shape[0]:
        raise InvalidInputError(f"K must be in [1, {P.shape[0]}], got {K}")
    km = KMeans(
        n_clusters=int(K),
        init="k-means++",
        n_init=int(restarts),
        max_iter=KMEANS_MAX_ITER,
        tol=KMEANS_TOL,
        random_state=int(seed),
    )
    with warnings.catch_warnings():
        # duplicate points with K close to N trigger a harmless sklearn warning
        warnings.simplefilter("ignore", category=UserWarning)
        labels = km.fit_predict(P)
    return labels.astype(np.int64), float(km.inertia_)


def _check_labels(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise InvalidInputError(f"label arrays differ in shape: {a.shape} vs {b.shape}")
    if (a.size and a.min() < 0) or (b.size and b.min() < 0):
        raise InvalidInputError("labels must be nonnegative")
    return a, b


def ari(labels_a, labels_b):
    """Adjusted Rand index."""
    return float(adjusted_rand_score(*_check_labels(labels_a, labels_b)))


def ami(labels_a, labels_b):
    """Adjusted mutual information, normalized by the larger entropy."""
    a, b = _check_labels(labels_a, labels_b)
    return float(adjusted_mutual_info_score(a, b, average_method="max"))


@dataclass
class ClusterResult:
    labels: np.ndarray
    embedding: np.ndarray
    eigenvalues: np.ndarray
    kmeans_inertia: float
    gamma: float
    isolated: list = field(default_factory=list)
    distances: DistanceMatrix | None = field(default=None, repr=False)

    def to_dict(self):
        return {
            "labels": [int(v) for v in self.labels],
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "embedding": self.embedding.tolist(),
            "kmeans_inertia": self.kmeans_inertia,
            "gamma": self.gamma,
            "isolated": [int(i) for i in self.isolated],
            "metric": self.distances.metric_tag if self.distances is not None else "",
        }


def cluster_distances(D, K, gamma=ADAPTIVE, restarts=KMEANS_RESTARTS, seed=0):
    """Cluster from a precomputed :class:`DistanceMatrix`."""
    if not isinstance(D, DistanceMatrix):
        D = DistanceMatrix(D)
    A, gamma = affinity(D, gamma)
    _, isolated = normalized_laplacian(A)
    V, values = spectral_embed(A, K)
    E = normalize_rows(V)
    labels, inertia = kmeans(E, K, restarts=restarts, seed=seed)
    return ClusterResult(labels, E, values, inertia, float(gamma), list(isolated), D)


def ddsc(collection, metric, K, gamma=ADAPTIVE, restarts=KMEANS_RESTARTS, seed=0,
         parallel=True, jobs=None):
    """Cluster sample sets by spectral clustering on set distances."""
    D = pairwise_distances(collection, metric, parallel=parallel, jobs=jobs)
    return cluster_distances(D, K, gamma=gamma, restarts=restarts, seed=seed)
