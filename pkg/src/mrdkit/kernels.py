"""Kernels, Gram blocks and the kernelized MRD family.

Everything is evaluated from Gram matrices through the trace expansion

    ||phi(X1) - phi(X2) S||_F^2 = tr K11 - 2 tr(K12 S) + tr(S^T K22 S),

so no feature map is ever formed. Reported distances use finite coordinates
factored from the joint Gram matrix instead (see :func:`feature_coordinates`),
which agree with the expansion but stay accurate near zero.
"""
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from mrdkit import _backend
from mrdkit.errors import DegenerateInputWarning, InvalidInputError
from mrdkit.linalg import (
    as_sample_matrix,
    check_same_dim,
    gram_rank_cutoff,
    ridge_solve_gram,
    spectral_norm,
)
from mrdkit.mrd import (
    MrdConfig,
    MrdResult,
    Variant,
    check_weights,
    constrained_ridge,
    pgd_ball,
)

ADAPTIVE = "auto"

# Residuals above -TRACE_CLAMP * scale are treated as round-off and clamped to zero.
TRACE_CLAMP = 1e-9


class KernelFamily(str, Enum):
    GAUSSIAN = "gaussian"
    POLYNOMIAL = "poly"
    LINEAR = "linear"


@dataclass(frozen=True)
class KernelSpec:
    """A kernel choice.

    ``bandwidth`` is the Gaussian ``r`` in ``exp(-||x - y||^2 / (2 r^2))`` or
    ``"auto"`` to pick it per pair of sets with :func:`adaptive_bandwidth`.
    The polynomial kernel is ``(x.y + coef0) ** degree``.
    """

    family: KernelFamily = KernelFamily.GAUSSIAN
    bandwidth: float | str = 1.0
    degree: int = 2
    coef0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        if self.family is KernelFamily.GAUSSIAN and self.bandwidth != ADAPTIVE:
            bw = float(self.bandwidth)
            if not bw > 0 or not np.isfinite(bw):
                raise InvalidInputError(f"Gaussian bandwidth must be > 0, got {self.bandwidth}")
            object.__setattr__(self, "bandwidth", bw)
        if self.family is KernelFamily.POLYNOMIAL and int(self.degree) < 1:
            raise InvalidInputError(f"polynomial degree must be >= 1, got {self.degree}")

    @classmethod
    def gaussian(cls, bandwidth=1.0):
        return cls(KernelFamily.GAUSSIAN, bandwidth=bandwidth)

    @classmethod
    def polynomial(cls, degree=2, coef0=1.0):
        return cls(KernelFamily.POLYNOMIAL, degree=degree, coef0=coef0)

    @classmethod
    def linear(cls):
        return cls(KernelFamily.LINEAR)

    @property
    def adaptive(self):
        return self.family is KernelFamily.GAUSSIAN and self.bandwidth == ADAPTIVE

    def resolve(self, X, Y):
        """A copy with an adaptive bandwidth replaced by its value for (X, Y)."""
        if not self.adaptive:
            return self
        return KernelSpec.gaussian(adaptive_bandwidth(X, Y))


def pairwise_sq_dists(X, Y):
    """Squared Euclidean distances between columns of X and columns of Y."""
    return _backend.current().sq_dists(X, Y)


def adaptive_bandwidth(X, Y):
    """Mean Euclidean distance over all (column of X, column of Y) pairs.

    Falls back to 1.0 with a :class:`DegenerateInputWarning` when every pair
    coincides.
    """
    X = as_sample_matrix(X, "X")
    Y = as_sample_matrix(Y, "Y")
    check_same_dim(X, Y)
    mean = float(np.mean(np.sqrt(pairwise_sq_dists(X, Y))))
    if not mean > 0:
        warnings.warn("all pairwise distances are zero; bandwidth set to 1.0",
                      DegenerateInputWarning, stacklevel=2)
        return 1.0
    return mean


def gram(kernel, X, Y):
    """Kernel matrix ``[k(x_i, y_j)]`` of shape ``(n_X, n_Y)``."""
    X = as_sample_matrix(X, "X")
    Y = as_sample_matrix(Y, "Y")
    check_same_dim(X, Y)
    kernel = kernel.resolve(X, Y)
    if kernel.family is KernelFamily.LINEAR:
        return X.T @ Y
    if kernel.family is KernelFamily.POLYNOMIAL:
        return (X.T @ Y + kernel.coef0) ** int(kernel.degree)
    return np.exp(-pairwise_sq_dists(X, Y) / (2.0 * kernel.bandwidth ** 2))


@dataclass(frozen=True)
class GramBlock:
    """The three Gram blocks of a pair of sets; ``K21`` is ``K12.T``."""

    K11: np.ndarray
    K12: np.ndarray
    K22: np.ndarray
    kernel: KernelSpec

    @property
    def K21(self):
        return self.K12.T


def gram_blocks(kernel, X1, X2):
    """Gram blocks with an adaptive bandwidth fixed once for the pair."""
    X1 = as_sample_matrix(X1, "X1")
    X2 = as_sample_matrix(X2, "X2")
    check_same_dim(X1, X2)
    k = kernel.resolve(X1, X2)
    K11 = gram(k, X1, X1)
    K22 = gram(k, X2, X2)
    return GramBlock(
        K11=0.5 * (K11 + K11.T),
        K12=gram(k, X1, X2),
        K22=0.5 * (K22 + K22.T),
        kernel=k,
    )


def _trace_residual(Kaa, Kab, Kbb, S):
    """``||phi(Xa) - phi(Xb) S||_F^2`` from Gram blocks."""
    value = float(np.trace(Kaa) - 2.0 * np.sum(Kab * S.T) + np.sum(S * (Kbb @ S)))
    scale = max(1.0, float(np.trace(Kaa)))
    if value < 0.0:
        if value < -TRACE_CLAMP * scale:
            raise InvalidInputError(
                f"negative feature-space residual {value:.3e}; is the kernel PSD?"
            )
        value = 0.0
    return value


def kmrd_objective(blocks, S12, S21, w1=0.5, w2=0.5):
    """Kernel MRD objective for given coefficients, via the trace expansion."""
    r12 = _trace_residual(blocks.K11, blocks.K12, blocks.K22, S12)
    r21 = _trace_residual(blocks.K22, blocks.K21, blocks.K11, S21)
    return float(np.sqrt(w1 * r12 + w2 * r21))


def feature_coordinates(blocks):
    """Coordinates ``F1, F2`` with ``[F1 F2]^T [F1 F2]`` equal to the joint Gram matrix.

    Built from the eigendecomposition of the joint Gram matrix, with
    numerically null eigenvalues dropped. Residuals computed as sums of
    squares in these coordinates avoid the cancellation of the trace
    expansion, which matters when the distance is near zero.
    """
    n1 = blocks.K11.shape[0]
    K = np.block([[blocks.K11, blocks.K12], [blocks.K21, blocks.K22]])
    values, vectors = np.linalg.eigh(0.5 * (K + K.T))
    keep = values > gram_rank_cutoff(values, K.shape[0])
    F = (vectors[:, keep] * np.sqrt(values[keep])).T
    return F[:, :n1], F[:, n1:]


def _result(blocks, S12, S21, lam12, lam21, w1, w2):
    # the trace expansion validates the kernel; the coordinates give the value
    _trace_residual(blocks.K11, blocks.K12, blocks.K22, S12)
    _trace_residual(blocks.K22, blocks.K21, blocks.K11, S21)
    F1, F2 = feature_coordinates(blocks)
    r12 = float(np.sum((F1 - F2 @ S12) ** 2))
    r21 = float(np.sum((F2 - F1 @ S21) ** 2))
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


def kmrd_simplified(X1, X2, kernel, lambda12, lambda21, w1=0.5, w2=0.5):
    """Closed-form kernel MRD with fixed ridge penalties."""
    check_weights(w1, w2)
    b = gram_blocks(kernel, X1, X2)
    S12 = ridge_solve_gram(b.K22, b.K21, lambda12)
    S21 = ridge_solve_gram(b.K11, b.K12, lambda21)
    return _result(b, S12, S21, lambda12, lambda21, w1, w2)


def _constrained(X1, X2, kernel, cfg, frobenius):
    b = gram_blocks(kernel, X1, X2)
    kw = dict(tol=cfg.tol, max_iter=cfg.max_bisection_iters, frobenius=frobenius)
    lam12, S12 = constrained_ridge(b.K22, b.K21, **kw)
    lam21, S21 = constrained_ridge(b.K11, b.K12, **kw)
    return _result(b, S12, S21, lam12, lam21, cfg.w1, cfg.w2)


def kmrd_heuristic(X1, X2, kernel, cfg=None):
    """Kernel MRD in the unit spectral-norm ball via the ridge-path bisection."""
    return _constrained(X1, X2, kernel, cfg or MrdConfig(), frobenius=False)


def kmrd_tightened(X1, X2, kernel, cfg=None):
    """Kernel MRD in the unit Frobenius-norm ball."""
    return _constrained(X1, X2, kernel, cfg or MrdConfig(variant=Variant.TIGHTENED),
                        frobenius=True)


def kmrd(X1, X2, kernel, cfg=None):
    cfg = cfg or MrdConfig()
    if cfg.variant is Variant.HEURISTIC_EXACT:
        return kmrd_heuristic(X1, X2, kernel, cfg)
    if cfg.variant is Variant.TIGHTENED:
        return kmrd_tightened(X1, X2, kernel, cfg)
    if cfg.lambda12 is None or cfg.lambda21 is None:
        raise InvalidInputError("the simplified variant needs lambda12 and lambda21")
    return kmrd_simplified(X1, X2, kernel, cfg.lambda12, cfg.lambda21, cfg.w1, cfg.w2)


def kmrd_oracle(X1, X2, kernel, w1=0.5, w2=0.5, tol=1e-6, ball="spectral", max_iter=100_000):
    """Constrained kernel MRD by projected gradient descent on the Gram blocks."""
    check_weights(w1, w2)
    b = gram_blocks(kernel, X1, X2)
    S12, _, _ = pgd_ball(b.K22, b.K21, ball, tol, max_iter)
    S21, _, _ = pgd_ball(b.K11, b.K12, ball, tol, max_iter)
    return kmrd_objective(b, S12, S21, w1, w2)
