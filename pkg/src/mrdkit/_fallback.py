"""Numpy implementations of the compiled kernels in ``_core.pyx``.

Signatures and return tuples match the Cython module one for one, including
the iteration schedule, so either backend gives the same answers up to
round-off.
"""
import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

NAME = "python"


def ridge_norm(K, ev, c, frobenius=False):
    """Norm of ``diag(1/(ev+c)) W`` given ``K = W W^T``."""
    ev = np.asarray(ev, dtype=np.float64)
    if ev.size == 0:
        return 0.0
    d = 1.0 / (ev + c)
    if frobenius:
        return float(np.sqrt(max(np.sum(d * d * np.diag(K)), 0.0)))
    top = np.linalg.eigvalsh(d[:, None] * K * d[None, :])[-1]
    return float(np.sqrt(max(top, 0.0)))


def bisect_ridge_norm(K, ev, hi, tol, max_iter, frobenius=False):
    """Bisection for the ridge parameter giving unit coefficient norm.

    Returns ``(c, norm, lo, hi, iterations, converged)``.
    """
    K = np.asarray(K, dtype=np.float64)
    ev = np.asarray(ev, dtype=np.float64)
    if ev.size == 0:
        return 0.0, 0.0, 0.0, hi, 0, False
    lo = 0.0
    c = 0.5 * (lo + hi)
    nrm = 0.0
    it = 0
    while it < max_iter:
        it += 1
        nrm = ridge_norm(K, ev, c, frobenius)
        if abs(nrm - 1.0) < tol:
            return c, nrm, lo, hi, it, True
        if nrm > 1.0:
            lo = c
        else:
            hi = c
        c = 0.5 * (lo + hi)
    return c, nrm, lo, hi, it, False


def sq_dists(X, Y):
    """Squared Euclidean distances between the columns of X and of Y."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    return cdist(X.T, Y.T, "sqeuclidean")


def sinkhorn_log(M, a, b, eps, max_iter, tol, check_every=10):
    """Log-domain Sinkhorn on dual potentials.

    Returns ``(f, g, iterations, row_marginal_l1_error)``.
    """
    M = np.asarray(M, dtype=np.float64)
    log_a, log_b = np.log(a), np.log(b)
    f = np.zeros(M.shape[0])
    g = np.zeros(M.shape[1])
    err = np.inf
    it = 0
    while it < max_iter:
        it += 1
        f = eps * log_a - eps * logsumexp((g[None, :] - M) / eps, axis=1)
        g = eps * log_b - eps * logsumexp((f[:, None] - M) / eps, axis=0)
        if it % check_every == 0 or it == max_iter:
            rows = np.exp((f[:, None] + g[None, :] - M) / eps).sum(axis=1)
            err = float(np.abs(rows - a).sum())
            if err < tol:
                break
    return f, g, it, err


def sinkhorn_scaling(M, a, b, eps, max_iter, tol, check_every=10):
    """Plain Sinkhorn-Knopp scaling.

    Returns ``(u, v, iterations, row_marginal_l1_error)``.
    """
    K = np.exp(-np.asarray(M, dtype=np.float64) / eps)
    u = np.ones(K.shape[0])
    v = np.ones(K.shape[1])
    err = np.inf
    it = 0
    while it < max_iter:
        it += 1
        u = a / (K @ v)
        v = b / (K.T @ u)
        if it % check_every == 0 or it == max_iter:
            err = float(np.abs(u * (K @ v) - a).sum())
            if err < tol:
                break
    return u, v, it, err
