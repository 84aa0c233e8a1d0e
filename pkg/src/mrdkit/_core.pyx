# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every function here has a numpy twin with the same signature in
``mrdkit._fallback``; ``mrdkit._backend`` picks one at import time.
"""
import numpy as np

from libc.math cimport exp, fabs, log, sqrt, INFINITY
from libc.stdlib cimport free, malloc
from scipy.linalg.cython_lapack cimport dsyevr

NAME = "cython"


cdef double _top_eigenvalue(double* a, int n, double* w, double* work, int lwork,
                            int* iwork, int liwork, int* isuppz) noexcept nogil:
    """Largest eigenvalue of the symmetric n x n matrix in ``a`` (destroyed)."""
    cdef char jobz = b'N'
    cdef char rng = b'I'
    cdef char uplo = b'L'
    cdef int il = n, iu = n, found = 0, info = 0, ldz = 1
    cdef double vl = 0.0, vu = 0.0, abstol = 0.0
    cdef double z[1]
    if n == 1:
        return a[0]
    dsyevr(&jobz, &rng, &uplo, &n, a, &n, &vl, &vu, &il, &iu, &abstol,
           &found, w, z, &ldz, isuppz, work, &lwork, iwork, &liwork, &info)
    if info != 0:
        return -INFINITY
    return w[0]


cdef double _ridge_norm(const double[:, ::1] K, const double[::1] ev, double c,
                        bint frobenius, double* d, double* scratch, double* work,
                        int lwork, int* iwork, int liwork, int* isuppz) noexcept nogil:
    cdef Py_ssize_t r = ev.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    cdef double top
    for i in range(r):
        d[i] = 1.0 / (ev[i] + c)
    if frobenius:
        for i in range(r):
            acc += d[i] * d[i] * K[i, i]
        return sqrt(acc if acc > 0.0 else 0.0)
    for i in range(r):
        for j in range(r):
            scratch[i * r + j] = d[i] * K[i, j] * d[j]
    top = _top_eigenvalue(scratch, <int> r, scratch + r * r, work, lwork, iwork, liwork, isuppz)
    return sqrt(top if top > 0.0 else 0.0)


def ridge_norm(K, ev, double c, bint frobenius=False):
    """Norm of ``diag(1/(ev+c)) W`` given ``K = W W^T``."""
    cdef const double[:, ::1] Kv = np.ascontiguousarray(K, dtype=np.float64)
    cdef const double[::1] evv = np.ascontiguousarray(ev, dtype=np.float64)
    cdef int r = <int> evv.shape[0]
    cdef int lwork = 26 * r + 1, liwork = 10 * r + 1
    cdef double* d = <double*> malloc(r * sizeof(double))
    cdef double* scratch = <double*> malloc((r * r + r) * sizeof(double))
    cdef double* work = <double*> malloc(lwork * sizeof(double))
    cdef int* iwork = <int*> malloc(liwork * sizeof(int))
    cdef int* isuppz = <int*> malloc(2 * r * sizeof(int) + 2 * sizeof(int))
    cdef double out
    if r == 0:
        return 0.0
    try:
        with nogil:
            out = _ridge_norm(Kv, evv, c, frobenius, d, scratch, work, lwork,
                              iwork, liwork, isuppz)
    finally:
        free(d); free(scratch); free(work); free(iwork); free(isuppz)
    return out


def bisect_ridge_norm(K, ev, double hi, double tol, int max_iter, bint frobenius=False):
    """Bisection for the ridge parameter giving unit coefficient norm.

    Returns ``(c, norm, lo, hi, iterations, converged)``.
    """
    cdef const double[:, ::1] Kv = np.ascontiguousarray(K, dtype=np.float64)
    cdef const double[::1] evv = np.ascontiguousarray(ev, dtype=np.float64)
    cdef int r = <int> evv.shape[0]
    cdef int lwork = 26 * r + 1, liwork = 10 * r + 1
    cdef double lo = 0.0
    cdef double c = 0.5 * (lo + hi)
    cdef double nrm = 0.0
    cdef int it = 0
    cdef bint converged = False
    cdef double* d
    cdef double* scratch
    cdef double* work
    cdef int* iwork
    cdef int* isuppz
    if r == 0:
        return 0.0, 0.0, 0.0, hi, 0, False
    d = <double*> malloc(r * sizeof(double))
    scratch = <double*> malloc((r * r + r) * sizeof(double))
    work = <double*> malloc(lwork * sizeof(double))
    iwork = <int*> malloc(liwork * sizeof(int))
    isuppz = <int*> malloc(2 * r * sizeof(int) + 2 * sizeof(int))
    try:
        with nogil:
            while it < max_iter:
                it += 1
                nrm = _ridge_norm(Kv, evv, c, frobenius, d, scratch, work, lwork,
                                  iwork, liwork, isuppz)
                if fabs(nrm - 1.0) < tol:
                    converged = True
                    break
                if nrm > 1.0:
                    lo = c
                else:
                    hi = c
                c = 0.5 * (lo + hi)
    finally:
        free(d); free(scratch); free(work); free(iwork); free(isuppz)
    return c, nrm, lo, hi, it, converged


def sq_dists(X, Y):
    """Squared Euclidean distances between the columns of X and of Y."""
    cdef const double[:, ::1] A = np.ascontiguousarray(np.asarray(X, dtype=np.float64).T)
    cdef const double[:, ::1] B = np.ascontiguousarray(np.asarray(Y, dtype=np.float64).T)
    cdef Py_ssize_t n1 = A.shape[0], n2 = B.shape[0], m = A.shape[1]
    out = np.empty((n1, n2), dtype=np.float64)
    cdef double[:, ::1] D = out
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    with nogil:
        for i in range(n1):
            for j in range(n2):
                acc = 0.0
                for k in range(m):
                    diff = A[i, k] - B[j, k]
                    acc = acc + diff * diff
                D[i, j] = acc
    return out


cdef inline double _lse_row(const double[:, ::1] M, Py_ssize_t i, const double[::1] g,
                            double eps) noexcept nogil:
    cdef Py_ssize_t j, n2 = M.shape[1]
    cdef double mx = -INFINITY, s = 0.0, v
    for j in range(n2):
        v = (g[j] - M[i, j]) / eps
        if v > mx:
            mx = v
    if mx == -INFINITY:
        return mx
    for j in range(n2):
        s += exp((g[j] - M[i, j]) / eps - mx)
    return mx + log(s)


cdef inline double _lse_col(const double[:, ::1] M, Py_ssize_t j, const double[::1] f,
                            double eps) noexcept nogil:
    cdef Py_ssize_t i, n1 = M.shape[0]
    cdef double mx = -INFINITY, s = 0.0, v
    for i in range(n1):
        v = (f[i] - M[i, j]) / eps
        if v > mx:
            mx = v
    if mx == -INFINITY:
        return mx
    for i in range(n1):
        s += exp((f[i] - M[i, j]) / eps - mx)
    return mx + log(s)


def sinkhorn_log(M, a, b, double eps, int max_iter, double tol, int check_every=10):
    """Log-domain Sinkhorn on dual potentials.

    Returns ``(f, g, iterations, row_marginal_l1_error)``; column marginals
    are exact after each g update.
    """
    cdef const double[:, ::1] Mv = np.ascontiguousarray(M, dtype=np.float64)
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n1 = Mv.shape[0], n2 = Mv.shape[1], i, j
    f_arr = np.zeros(n1)
    g_arr = np.zeros(n2)
    cdef double[::1] f = f_arr
    cdef double[::1] g = g_arr
    cdef double err = INFINITY, row
    cdef int it = 0
    with nogil:
        while it < max_iter:
            it += 1
            for i in range(n1):
                f[i] = eps * log(av[i]) - eps * _lse_row(Mv, i, g, eps)
            for j in range(n2):
                g[j] = eps * log(bv[j]) - eps * _lse_col(Mv, j, f, eps)
            if it % check_every == 0 or it == max_iter:
                err = 0.0
                for i in range(n1):
                    row = 0.0
                    for j in range(n2):
                        row += exp((f[i] + g[j] - Mv[i, j]) / eps)
                    err += fabs(row - av[i])
                if err < tol:
                    break
    return f_arr, g_arr, it, err


def sinkhorn_scaling(M, a, b, double eps, int max_iter, double tol, int check_every=10):
    """Plain Sinkhorn-Knopp scaling.

    Returns ``(u, v, iterations, row_marginal_l1_error)``.
    """
    cdef const double[:, ::1] Mv = np.ascontiguousarray(M, dtype=np.float64)
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n1 = Mv.shape[0], n2 = Mv.shape[1], i, j
    K_arr = np.exp(-np.asarray(Mv) / eps)
    cdef const double[:, ::1] K = K_arr
    u_arr = np.ones(n1)
    v_arr = np.ones(n2)
    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef double err = INFINITY, acc
    cdef int it = 0
    with nogil:
        while it < max_iter:
            it += 1
            for i in range(n1):
                acc = 0.0
                for j in range(n2):
                    acc += K[i, j] * v[j]
                u[i] = av[i] / acc
            for j in range(n2):
                acc = 0.0
                for i in range(n1):
                    acc += K[i, j] * u[i]
                v[j] = bv[j] / acc
            if it % check_every == 0 or it == max_iter:
                err = 0.0
                for i in range(n1):
                    acc = 0.0
                    for j in range(n2):
                        acc += K[i, j] * v[j]
                    err += fabs(u[i] * acc - av[i])
                if err < tol:
                    break
    return u_arr, v_arr, it, err
