"""Dense linear-algebra primitives shared by the distance modules.

Sample matrices follow the column convention throughout: an ``m x n`` array
holds ``n`` samples of dimension ``m``.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from mrdkit.errors import InvalidInputError, SingularSystemError

# Above this min-dimension spectral_norm switches from a full SVD to power iteration.
SVD_MAX_DIM = 64
POWER_TOL = 1e-10
POWER_MAX_ITER = 10_000

# Relative eigenvalue level treated as invertible for an unregularized solve.
INVERTIBLE_RCOND = 1e-12


def as_sample_matrix(X, name="X"):
    """Validate and convert to a float64 ``m x n`` array.

    A 1-D input is read as a single sample (one column).
    """
    A = np.asarray(X, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise InvalidInputError(f"{name} must be a 2-D matrix, got {A.ndim} dimensions")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise InvalidInputError(f"{name} must be nonempty, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return A


def check_same_dim(X1, X2):
    if X1.shape[0] != X2.shape[0]:
        raise InvalidInputError(
            f"feature dimensions differ: {X1.shape[0]} vs {X2.shape[0]}"
        )


def gram_rank_cutoff(values, n):
    """Eigenvalues at or below this are numerically zero for a formed Gram matrix."""
    top = float(np.max(values)) if np.size(values) else 0.0
    return max(top, 0.0) * max(n, 1) * np.finfo(np.float64).eps


def spectral_norm(M):
    """Largest singular value of ``M``.

    Uses a full SVD when the smaller dimension is at most 64, otherwise power
    iteration on ``M^T M`` (or ``M M^T``, whichever is smaller).
    """
    A = np.asarray(M, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if A.size == 0:
        raise InvalidInputError("spectral_norm of an empty matrix")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("spectral_norm input has non-finite entries")
    if min(A.shape) <= SVD_MAX_DIM:
        return float(np.linalg.svd(A, compute_uv=False)[0])
    return _power_spectral_norm(A)


def _power_spectral_norm(A, tol=POWER_TOL, max_iter=POWER_MAX_ITER):
    G = A.T @ A if A.shape[1] <= A.shape[0] else A @ A.T
    # fixed start vector keeps the result deterministic
    x = np.random.Generator(np.random.Philox(0)).standard_normal(G.shape[0])
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(max_iter):
        y = G @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        new = float(x @ (G @ x))
        if abs(new - est) <= tol * max(new, 1e-300):
            est = new
            break
        est = new
    return float(np.sqrt(max(est, 0.0)))


def ridge_solve_gram(G, B, lam, pinv_fallback=True):
    """Solve ``(G + lam I) S = B`` for symmetric PSD ``G``.

    When ``G + lam I`` is numerically singular (smallest eigenvalue at most
    ``1e-12`` times the largest) the Moore-Penrose pseudoinverse is used,
    which at ``lam == 0`` gives the minimum-norm solution.
    """
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0:
        raise InvalidInputError(f"regularization must be >= 0, got {lam}")
    G = np.asarray(G, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    n = G.shape[0]
    A = G + lam * np.eye(n)
    # lam alone keeps A well conditioned once it dominates the trace bound on ||G||
    if lam <= INVERTIBLE_RCOND * max(float(np.trace(G)), 0.0) * (1.0 + 1e-9):
        ev = np.linalg.eigvalsh(G)
        top = max(float(ev[-1]), 0.0)
        if top == 0.0 or ev[0] + lam <= INVERTIBLE_RCOND * (top + lam):
            if lam == 0.0 and not pinv_fallback:
                raise SingularSystemError("singular normal equations at lambda = 0")
            cutoff = gram_rank_cutoff(ev, n)
            return scipy.linalg.pinvh(A, atol=cutoff, rtol=0.0) @ B
    try:
        return scipy.linalg.solve(A, B, assume_a="pos")
    except np.linalg.LinAlgError:
        # Cholesky can fail when lam is tiny next to round-off in G
        return scipy.linalg.solve(A, B, assume_a="sym")


def ridge_solve(A, B, lam, pinv_fallback=True):
    """Ridge coefficients ``(A^T A + lam I)^{-1} A^T B``.

    Parameters
    ----------
    A : ndarray, shape (m, n)
        Regressors, one sample per column.
    B : ndarray, shape (m, p)
        Targets, one sample per column.
    lam : float
        Nonnegative ridge parameter.
    pinv_fallback : bool
        If False, a singular system at ``lam == 0`` raises
        :class:`~mrdkit.errors.SingularSystemError` instead of using the
        pseudoinverse.

    Returns
    -------
    ndarray, shape (n, p)
    """
    A = as_sample_matrix(A, "A")
    B = as_sample_matrix(B, "B")
    check_same_dim(A, B)
    return ridge_solve_gram(A.T @ A, A.T @ B, lam, pinv_fallback=pinv_fallback)


@dataclass(frozen=True)
class GramEig:
    """Eigendecomposition ``G = V diag(values) V^T`` with values descending, >= 0."""

    vectors: np.ndarray
    values: np.ndarray

    def reconstruct(self):
        return (self.vectors * self.values) @ self.vectors.T


def gram_eig(G, sym_tol=1e-10):
    """Symmetric eigendecomposition of a PSD Gram matrix.

    Slightly negative eigenvalues from round-off are clamped to zero.
    """
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise InvalidInputError(f"gram_eig needs a square matrix, got shape {G.shape}")
    if not np.all(np.isfinite(G)):
        raise InvalidInputError("gram_eig input has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(G))) if G.size else 1.0)
    if np.max(np.abs(G - G.T), initial=0.0) > sym_tol * scale:
        raise InvalidInputError("gram_eig input is not symmetric")
    values, vectors = np.linalg.eigh(0.5 * (G + G.T))
    order = slice(None, None, -1)
    return GramEig(vectors=vectors[:, order].copy(), values=np.maximum(values[order], 0.0))
