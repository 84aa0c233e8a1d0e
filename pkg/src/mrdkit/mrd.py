"""Linear mutual regression distances.

Each set of samples is regressed on the other; the distance is the root of the
weighted sum of the two squared Frobenius residuals. The variants differ in
how the coefficient matrices are restricted:

* heuristic exact (``mrd``): unit spectral-norm ball, reached by a bisection
  on the ridge parameter until the ridge solution has spectral norm one;
* tightened (``mrd-t``): unit Frobenius-norm ball, for which the same
  bisection is the exact optimality condition;
* simplified (``mrd-s``): fixed ridge penalties, closed form.

:func:`mrd_oracle` solves the spectral-ball problem directly by projected
gradient descent and is meant for validation on small inputs.
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from mrdkit import _backend
from mrdkit.errors import ConvergenceError, InvalidInputError
from mrdkit.linalg import (
    as_sample_matrix,
    check_same_dim,
    gram_eig,
    gram_rank_cutoff,
    ridge_solve,
    spectral_norm,
)


class Variant(str, Enum):
    HEURISTIC_EXACT = "mrd"
    TIGHTENED = "mrd-t"
    SIMPLIFIED = "mrd-s"


@dataclass(frozen=True)
class MrdConfig:
    variant: Variant = Variant.HEURISTIC_EXACT
    w1: float = 0.5
    w2: float = 0.5
    lambda12: float | None = None
    lambda21: float | None = None
    tol: float = 1e-6
    max_bisection_iters: int = 200

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        check_weights(self.w1, self.w2)
        if not self.tol > 0:
            raise InvalidInputError(f"tol must be > 0, got {self.tol}")
        if self.max_bisection_iters < 1:
            raise InvalidInputError("max_bisection_iters must be >= 1")
        for name in ("lambda12", "lambda21"):
            lam = getattr(self, name)
            if lam is not None and not lam >= 0:
                raise InvalidInputError(f"{name} must be >= 0, got {lam}")


def check_weights(w1, w2):
    if w1 < 0 or w2 < 0 or abs(w1 + w2 - 1.0) > 1e-12:
        raise InvalidInputError(f"weights must be nonnegative and sum to 1, got ({w1}, {w2})")


@dataclass
class MrdResult:
    distance: float
    s12_norm2: float
    s21_norm2: float
    lambda12: float
    lambda21: float
    residual12: float
    residual21: float
    S12: np.ndarray | None = field(default=None, repr=False, compare=False)
    S21: np.ndarray | None = field(default=None, repr=False, compare=False)

    def to_dict(self):
        return {
            "distance": self.distance,
            "lambda12": self.lambda12,
            "lambda21": self.lambda21,
            "s12_norm2": self.s12_norm2,
            "s21_norm2": self.s21_norm2,
            "residual12": self.residual12,
            "residual21": self.residual21,
        }


def _pair(X1, X2):
    X1 = as_sample_matrix(X1, "X1")
    X2 = as_sample_matrix(X2, "X2")
    check_same_dim(X1, X2)
    return X1, X2


def mrd_objective(X1, X2, S12, S21, w1=0.5, w2=0.5):
    """Mutual regression objective for given coefficient matrices."""
    X1, X2 = _pair(X1, X2)
    S12 = np.asarray(S12, dtype=np.float64)
    S21 = np.asarray(S21, dtype=np.float64)
    n1, n2 = X1.shape[1], X2.shape[1]
    if S12.shape != (n2, n1) or S21.shape != (n1, n2):
        raise InvalidInputError(
            f"coefficient shapes {S12.shape}, {S21.shape} do not match "
            f"expected {(n2, n1)}, {(n1, n2)}"
        )
    r12 = float(np.sum((X1 - X2 @ S12) ** 2))
    r21 = float(np.sum((X2 - X1 @ S21) ** 2))
    return float(np.sqrt(w1 * r12 + w2 * r21))


class RidgePath:
    """Ridge coefficients ``S(c) = (G + c I)^+ B`` from one eigendecomposition.

    With ``G = V diag(s) V^T`` the coefficient at any ``c`` is
    ``V diag(1/(s + c)) V^T B``, so each bisection step only rescales rows of
    the fixed matrix ``W = V^T B``. Numerically null eigenvalues are dropped,
    which makes ``c = 0`` the minimum-norm (pseudoinverse) solution.
    """

    def __init__(self, G, B):
        G = np.asarray(G, dtype=np.float64)
        B = np.asarray(B, dtype=np.float64)
        eig = gram_eig(G)
        keep = eig.values > gram_rank_cutoff(eig.values, G.shape[0])
        self.B = B
        self.sigma_min = float(eig.values[-1])
        self.values = np.ascontiguousarray(eig.values[keep])
        self.vectors = eig.vectors[:, keep]
        self.W = self.vectors.T @ B
        self.K = np.ascontiguousarray(self.W @ self.W.T)

    @property
    def rank(self):
        return self.values.size

    def coef(self, c):
        return self.vectors @ (self.W / (self.values + c)[:, None])

    def norm(self, c, frobenius=False):
        return _backend.current().ridge_norm(self.K, self.values, float(c), frobenius)


def constrained_ridge(G, B, tol=1e-6, max_iter=200, frobenius=False):
    """Smallest-norm-feasible ridge parameter for ``(G + lam I) S = B``.

    Returns ``(lam, S)`` with either ``lam == 0`` and the unregularized
    solution already inside the unit ball (to ``tol``), or
    ``|norm(S) - 1| < tol``. ``norm`` is spectral unless ``frobenius``.
    """
    path = RidgePath(G, B)
    if path.rank == 0:
        return 0.0, np.zeros_like(path.B)
    n0 = path.norm(0.0, frobenius)
    if n0 < 1.0 + tol:
        return 0.0, path.coef(0.0)
    b_norm = float(np.linalg.norm(B)) if frobenius else spectral_norm(B)
    hi = max(0.0, b_norm - path.sigma_min)
    c, nrm, lo, hi_last, iters, ok = _backend.current().bisect_ridge_norm(
        path.K, path.values, hi, tol, max_iter, frobenius
    )
    if not ok:
        raise ConvergenceError(
            f"lambda bisection did not converge in {iters} iterations: "
            f"bracket [{lo:.6g}, {hi_last:.6g}], last norm {nrm:.12g}",
            bracket=(lo, hi_last),
            last_norm=nrm,
            iterations=iters,
        )
    return float(c), path.coef(c)


def lambda_search(X1, X2, tol=1e-6, max_iter=200):
    """Ridge parameter for regressing ``X1`` on ``X2`` at unit spectral norm.

    Returns ``(lam, S12)`` where ``S12 = (X2^T X2 + lam I)^{-1} X2^T X1``.
    The bisection runs on ``[0, max(0, ||X2^T X1||_2 - sigma_min(X2^T X2))]``.
    """
    X1, X2 = _pair(X1, X2)
    return constrained_ridge(X2.T @ X2, X2.T @ X1, tol=tol, max_iter=max_iter)


def _result(X1, X2, S12, S21, lam12, lam21, w1, w2):
    r12 = float(np.sum((X1 - X2 @ S12) ** 2))
    r21 = float(np.sum((X2 - X1 @ S21) ** 2))
    return MrdResult(
        distance=float(np.sqrt(w1 * r12 + w2 * r21)),
        s12_norm2=spectral_norm(S12),
        s21_norm2=spectral_norm(S21),
        lambda12=float(lam12),
        lambda21=float(lam21),
        residual12=r12,
        residual21=r21,
        S12=S12,
        S21=S21,
    )


def _constrained(X1, X2, cfg, frobenius):
    X1, X2 = _pair(X1, X2)
    kw = dict(tol=cfg.tol, max_iter=cfg.max_bisection_iters, frobenius=frobenius)
    lam12, S12 = constrained_ridge(X2.T @ X2, X2.T @ X1, **kw)
    lam21, S21 = constrained_ridge(X1.T @ X1, X1.T @ X2, **kw)
    return _result(X1, X2, S12, S21, lam12, lam21, cfg.w1, cfg.w2)


def mrd_heuristic(X1, X2, cfg=None):
    """MRD with both coefficient matrices in the unit spectral-norm ball.

    Uses the ridge path in each direction, which gives a feasible point and
    hence an upper bound on the exact minimum (see :func:`mrd_oracle`).
    """
    return _constrained(X1, X2, cfg or MrdConfig(), frobenius=False)


def mrd_tightened(X1, X2, cfg=None):
    """MRD with both coefficient matrices in the unit Frobenius-norm ball."""
    return _constrained(X1, X2, cfg or MrdConfig(variant=Variant.TIGHTENED), frobenius=True)


def mrd_simplified(X1, X2, lambda12, lambda21, w1=0.5, w2=0.5):
    """Closed-form MRD with fixed ridge penalties; no norm constraint."""
    check_weights(w1, w2)
    X1, X2 = _pair(X1, X2)
    S12 = ridge_solve(X2, X1, lambda12)
    S21 = ridge_solve(X1, X2, lambda21)
    return _result(X1, X2, S12, S21, lambda12, lambda21, w1, w2)


def mrd(X1, X2, cfg=None):
    """Dispatch on ``cfg.variant``."""
    cfg = cfg or MrdConfig()
    if cfg.variant is Variant.HEURISTIC_EXACT:
        return mrd_heuristic(X1, X2, cfg)
    if cfg.variant is Variant.TIGHTENED:
        return mrd_tightened(X1, X2, cfg)
    if cfg.lambda12 is None or cfg.lambda21 is None:
        raise InvalidInputError("the simplified variant needs lambda12 and lambda21")
    return mrd_simplified(X1, X2, cfg.lambda12, cfg.lambda21, cfg.w1, cfg.w2)


def project_spectral_ball(S):
    """Euclidean projection onto ``{S : ||S||_2 <= 1}`` (clip singular values)."""
    U, s, Vt = np.linalg.svd(S, full_matrices=False)
    return (U * np.minimum(s, 1.0)) @ Vt


def project_frobenius_ball(S):
    nrm = float(np.linalg.norm(S))
    return S / nrm if nrm > 1.0 else S


def pgd_ball(G, B, ball="spectral", tol=1e-6, max_iter=100_000):
    """Minimize ``f(S) = tr(S^T G S) - 2 tr(B^T S)`` over a unit norm ball.

    Accelerated projected gradient from ``S = 0``. The step starts at 1.0 and
    is halved until the quadratic upper bound holds, then kept for later
    iterations. Whenever an accelerated step would increase ``f`` the
    momentum is dropped and a plain projected step is taken from the current
    iterate, so ``f`` never increases. Stops when the gradient mapping norm
    falls below ``tol * max(1, ||2B||_F)``.

    Returns ``(S, iterations, gradient_mapping_norm)``.
    """
    project = {"spectral": project_spectral_ball, "frobenius": project_frobenius_ball}[ball]
    G = np.asarray(G, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    S = np.zeros_like(B)
    GS = np.zeros_like(B)
    fS = 0.0
    Y, GY = S, GS
    at_iterate = True
    theta = 1.0
    step = 1.0
    threshold = tol * max(1.0, 2.0 * float(np.linalg.norm(B)))
    gm = np.inf
    for k in range(1, max_iter + 1):
        grad = 2.0 * (GY - B)
        while True:
            Z = project(Y - step * grad)
            D = Z - Y
            GD = G @ D
            dd = float(np.sum(D * D))
            # exact for a quadratic: f(Y + D) - f(Y) - <grad, D> = tr(D^T G D)
            if dd == 0.0 or float(np.sum(D * GD)) <= dd / (2.0 * step):
                break
            step *= 0.5
        gm = np.sqrt(dd) / step
        GZ = GY + GD
        fZ = float(np.sum(Z * GZ) - 2.0 * np.sum(B * Z))
        if fZ > fS and not at_iterate:
            Y, GY, theta, at_iterate = S, GS, 1.0, True
            continue
        if gm < threshold:
            return Z, k, gm
        theta_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        beta = (theta - 1.0) / theta_new
        Y = Z + beta * (Z - S)
        GY = GZ + beta * (GZ - GS)
        S, GS, fS, theta = Z, GZ, fZ, theta_new
        at_iterate = beta == 0.0
    raise ConvergenceError(
        f"projected gradient did not reach tolerance in {max_iter} iterations "
        f"(gradient mapping {gm:.3e})",
        gradient_norm=gm,
        iterations=max_iter,
    )


def mrd_oracle(X1, X2, w1=0.5, w2=0.5, tol=1e-6, ball="spectral", max_iter=100_000):
    """Exact constrained MRD by projected gradient descent.

    ``ball="spectral"`` solves the definition of MRD; ``ball="frobenius"``
    solves the tightened variant. Intended for small inputs.
    """
    check_weights(w1, w2)
    X1, X2 = _pair(X1, X2)
    S12, _, _ = pgd_ball(X2.T @ X2, X2.T @ X1, ball, tol, max_iter)
    S21, _, _ = pgd_ball(X1.T @ X1, X1.T @ X2, ball, tol, max_iter)
    return mrd_objective(X1, X2, S12, S21, w1, w2)
