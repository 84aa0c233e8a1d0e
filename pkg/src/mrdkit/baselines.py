"""Reference distances: kernel MMD and entropic optimal transport."""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from mrdkit import _backend
from mrdkit.errors import ConvergenceError, InvalidInputError
from mrdkit.kernels import gram_blocks, pairwise_sq_dists
from mrdkit.linalg import as_sample_matrix, check_same_dim

# Below this fraction of the mean cost, Sinkhorn switches to log-domain updates.
LOG_DOMAIN_RATIO = 0.05


class Estimator(str, Enum):
    BIASED = "biased"
    UNBIASED = "unbiased"


class Cost(str, Enum):
    SQEUCLIDEAN = "sqeuclidean"
    EUCLIDEAN = "euclidean"


def mmd2(X, Y, kernel, estimator=Estimator.BIASED):
    """Squared maximum mean discrepancy between two sample sets.

    The biased estimate averages every entry of each Gram block. The unbiased
    estimate drops the diagonals of the within-set blocks and may be slightly
    negative; it is returned as is.
    """
    estimator = Estimator(estimator)
    X = as_sample_matrix(X, "X")
    Y = as_sample_matrix(Y, "Y")
    check_same_dim(X, Y)
    nx, ny = X.shape[1], Y.shape[1]
    if estimator is Estimator.UNBIASED and min(nx, ny) < 2:
        raise InvalidInputError("the unbiased estimator needs at least 2 samples per set")
    b = gram_blocks(kernel, X, Y)
    if estimator is Estimator.BIASED:
        value = b.K11.mean() + b.K22.mean() - 2.0 * b.K12.mean()
        return max(float(value), 0.0)
    within_x = (b.K11.sum() - np.trace(b.K11)) / (nx * (nx - 1))
    within_y = (b.K22.sum() - np.trace(b.K22)) / (ny * (ny - 1))
    return float(within_x + within_y - 2.0 * b.K12.mean())


@dataclass(frozen=True)
class SinkhornConfig:
    epsilon: float
    marginal_tol: float = 1e-9
    max_iters: int = 10_000
    cost: Cost = Cost.SQEUCLIDEAN

    def __post_init__(self):
        object.__setattr__(self, "cost", Cost(self.cost))
        if not self.epsilon > 0:
            raise InvalidInputError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.marginal_tol > 0:
            raise InvalidInputError(f"marginal_tol must be > 0, got {self.marginal_tol}")
        if int(self.max_iters) < 1:
            raise InvalidInputError(f"max_iters must be >= 1, got {self.max_iters}")


def cost_matrix(X, Y, cost=Cost.SQEUCLIDEAN):
    M = pairwise_sq_dists(X, Y)
    if Cost(cost) is Cost.EUCLIDEAN:
        M = np.sqrt(M)
    return M


def sinkhorn_plan(X, Y, cfg):
    """Entropic transport plan between uniform empirical measures.

    Returns ``(P, M)``, the plan and the cost matrix. Raises
    :class:`~mrdkit.errors.ConvergenceError` carrying ``marginal_error`` if
    the row marginals do not reach ``cfg.marginal_tol`` in L1.
    """
    X = as_sample_matrix(X, "X")
    Y = as_sample_matrix(Y, "Y")
    check_same_dim(X, Y)
    M = np.ascontiguousarray(cost_matrix(X, Y, cfg.cost))
    n1, n2 = M.shape
    a = np.full(n1, 1.0 / n1)
    b = np.full(n2, 1.0 / n2)
    eps = float(cfg.epsilon)
    backend = _backend.current()
    mean_cost = float(M.mean())
    if eps < LOG_DOMAIN_RATIO * mean_cost:
        f, g, it, err = backend.sinkhorn_log(M, a, b, eps, int(cfg.max_iters), cfg.marginal_tol)
        P = np.exp((np.asarray(f)[:, None] + np.asarray(g)[None, :] - M) / eps)
    else:
        u, v, it, err = backend.sinkhorn_scaling(M, a, b, eps, int(cfg.max_iters), cfg.marginal_tol)
        P = np.asarray(u)[:, None] * np.exp(-M / eps) * np.asarray(v)[None, :]
    if not err < cfg.marginal_tol:
        raise ConvergenceError(
            f"Sinkhorn did not converge in {it} iterations (marginal L1 error {err:.3e})",
            marginal_error=err,
            iterations=it,
        )
    return P, M


def sinkhorn(X, Y, cfg):
    """Transport cost ``<P, M>`` of the converged entropic plan."""
    P, M = sinkhorn_plan(X, Y, cfg)
    return float(np.sum(P * M))
