import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrdkit.data import gen_two_gaussians
from mrdkit.errors import DegenerateInputWarning, InvalidInputError
from mrdkit.kernels import (
    KernelSpec,
    _trace_residual,
    adaptive_bandwidth,
    gram,
    gram_blocks,
    kmrd,
    kmrd_heuristic,
    kmrd_objective,
    kmrd_oracle,
    kmrd_simplified,
    kmrd_tightened,
)
from mrdkit.mrd import MrdConfig, Variant, mrd_simplified

GAUSS = KernelSpec.gaussian(1.0)
seeds = st.integers(0, 2**31)


def gaussian(seed, *shape):
    return np.random.Generator(np.random.Philox(seed)).standard_normal(shape)


def test_gram_examples():
    np.testing.assert_array_equal(gram(GAUSS, [[0.0], [0.0]], [[0.0], [0.0]]), [[1.0]])
    assert gram(GAUSS, [[0.0], [0.0]], [[1.0], [0.0]])[0, 0] == pytest.approx(math.exp(-0.5), rel=1e-15)
    X, Y = gaussian(1, 3, 4), gaussian(2, 3, 5)
    np.testing.assert_array_equal(gram(KernelSpec.linear(), X, Y), X.T @ Y)
    np.testing.assert_allclose(gram(KernelSpec.polynomial(3, 0.5), X, Y), (X.T @ Y + 0.5) ** 3)


def test_gram_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        gram(GAUSS, np.zeros((2, 3)), np.zeros((3, 3)))


def test_kernel_spec_validation():
    with pytest.raises(InvalidInputError):
        KernelSpec.gaussian(0.0)
    with pytest.raises(InvalidInputError):
        KernelSpec.polynomial(0)
    with pytest.raises(ValueError):
        KernelSpec("cosine")


def test_adaptive_bandwidth_examples():
    with pytest.warns(DegenerateInputWarning):
        assert adaptive_bandwidth([[0.0], [0.0]], [[0.0], [0.0]]) == 1.0
    assert adaptive_bandwidth([[0.0], [0.0]], [[3.0], [4.0]]) == pytest.approx(5.0)
    assert adaptive_bandwidth([[0.0, 1.0], [0.0, 0.0]], [[0.0], [0.0]]) == pytest.approx(0.5)


def test_adaptive_kernel_resolved_once_per_pair():
    X1, X2 = gaussian(3, 2, 4), gaussian(4, 2, 5) + 2
    b = gram_blocks(KernelSpec.gaussian("auto"), X1, X2)
    assert b.kernel.bandwidth == pytest.approx(adaptive_bandwidth(X1, X2))
    np.testing.assert_allclose(b.K11, gram(b.kernel, X1, X1))


def _hand_kmrd_simplified(x1, x2, lam):
    """Two-point 1-D sets, Gaussian r = 1, evaluated with scalar arithmetic only."""
    k = lambda a, b: math.exp(-((a - b) ** 2) / 2)

    def solve(A, B):
        det = A[0][0] * A[1][1] - A[0][1] * A[1][0]
        inv = [[A[1][1] / det, -A[0][1] / det], [-A[1][0] / det, A[0][0] / det]]
        return [[sum(inv[i][t] * B[t][j] for t in range(2)) for j in range(2)] for i in range(2)]

    def residual(xa, xb, S):
        # ||phi(xa) - phi(xb) S||^2 expanded entrywise
        total = 0.0
        for j in range(2):
            total += k(xa[j], xa[j])
            total -= 2 * sum(k(xa[j], xb[i]) * S[i][j] for i in range(2))
            total += sum(S[i][j] * S[l][j] * k(xb[i], xb[l]) for i in range(2) for l in range(2))
        return total

    def coef(xa, xb):
        A = [[k(xb[i], xb[j]) + (lam if i == j else 0.0) for j in range(2)] for i in range(2)]
        B = [[k(xb[i], xa[j]) for j in range(2)] for i in range(2)]
        return solve(A, B)

    r12 = residual(x1, x2, coef(x1, x2))
    r21 = residual(x2, x1, coef(x2, x1))
    return math.sqrt(0.5 * r12 + 0.5 * r21)


def test_kmrd_simplified_examples():
    x = np.array([[0.3], [-1.0]])
    assert kmrd_simplified(x, x, GAUSS, 0, 0).distance == pytest.approx(0.0, abs=1e-12)
    X = gaussian(5, 3, 4)
    assert kmrd_simplified(X, X, GAUSS, 0, 0).distance == pytest.approx(0.0, abs=1e-6)
    hand = _hand_kmrd_simplified([0.0, 1.0], [0.0, 2.0], 0.1)
    assert hand == pytest.approx(0.6834259341145636, rel=1e-12)
    got = kmrd_simplified([[0.0, 1.0]], [[0.0, 2.0]], GAUSS, 0.1, 0.1).distance
    assert got == pytest.approx(hand, rel=1e-10)


def test_kmrd_heuristic_examples():
    X = gaussian(6, 2, 5)
    assert kmrd_heuristic(X, X, GAUSS).distance <= 1e-8
    x1, x2 = np.array([[0.0], [0.0]]), np.array([[1.0], [1.0]])
    k = math.exp(-1.0)
    res = kmrd_heuristic(x1, x2, GAUSS, MrdConfig(w1=0.25, w2=0.75))
    assert res.lambda12 == 0.0 and res.lambda21 == 0.0
    assert res.distance == pytest.approx(math.sqrt(1 - k * k), rel=1e-12)


@pytest.mark.parametrize("n", [10, 20])
def test_kmrd_heuristic_close_to_oracle_on_two_gaussians(n):
    errors = []
    for seed in range(5):
        X1, X2 = gen_two_gaussians(n, seed=seed)
        h = kmrd_heuristic(X1, X2, GAUSS).distance
        o = kmrd_oracle(X1, X2, GAUSS, tol=1e-7)
        assert o <= h * (1 + 1e-6)
        errors.append((h - o) / o)
    assert max(errors) < 0.005


def test_kmrd_tightened_examples():
    x = np.array([[0.5], [2.0]])
    res = kmrd_tightened(x, x, GAUSS)
    assert res.distance == pytest.approx(0.0, abs=1e-12)
    assert res.S12[0, 0] == pytest.approx(1.0)

    X = gaussian(7, 2, 4)
    res = kmrd_tightened(X, X, GAUSS, MrdConfig(tol=1e-10))
    assert res.distance > 0.1
    oracle = kmrd_oracle(X, X, GAUSS, tol=1e-9, ball="frobenius")
    assert res.distance == pytest.approx(oracle, rel=1e-6)

    # single points: the scalar ridge k / (1 + lam) is feasible at lam = 0
    x1, x2 = np.array([[0.0]]), np.array([[1.5]])
    k = math.exp(-1.125)
    res = kmrd_tightened(x1, x2, GAUSS)
    assert res.lambda12 == 0.0
    assert res.S12[0, 0] == pytest.approx(k)
    assert res.distance == pytest.approx(math.sqrt(1 - k * k), rel=1e-12)


def test_dispatch_requires_lambdas_for_simplified():
    with pytest.raises(InvalidInputError):
        kmrd(np.eye(2), np.eye(2), GAUSS, MrdConfig(variant=Variant.SIMPLIFIED))


def test_negative_trace_beyond_roundoff_raises():
    K = np.array([[1.0]])
    with pytest.raises(InvalidInputError):
        _trace_residual(K, np.array([[5.0]]), K, np.array([[1.0]]))
    # round-off sized negatives are clamped
    assert _trace_residual(K, np.array([[1.0 + 1e-12]]), K, np.array([[1.0]])) == 0.0


@given(seeds, st.integers(1, 4), st.integers(1, 6), st.integers(1, 6),
       st.floats(0, 3), st.floats(0, 3))
@settings(max_examples=50, deadline=None)
def test_linear_kernel_matches_linear_mrd(seed, m, n1, n2, l12, l21):
    X1, X2 = gaussian(seed, m, n1), gaussian(seed + 1, m, n2)
    a = kmrd_simplified(X1, X2, KernelSpec.linear(), l12, l21).distance
    b = mrd_simplified(X1, X2, l12, l21).distance
    assert a == pytest.approx(b, rel=1e-8, abs=1e-10)


def _poly2_features(X, c):
    """Explicit feature map of (x.y + c)^2 for columns of X."""
    m = X.shape[0]
    quad = np.einsum("in,jn->ijn", X, X).reshape(m * m, -1)
    return np.vstack([quad, math.sqrt(2 * c) * X, np.full((1, X.shape[1]), c)])


@given(seeds, st.integers(1, 3), st.integers(1, 5), st.integers(1, 5))
@settings(max_examples=40, deadline=None)
def test_trace_form_matches_explicit_features(seed, m, n1, n2):
    X1, X2 = gaussian(seed, m, n1), gaussian(seed + 1, m, n2)
    kern = KernelSpec.polynomial(2, 0.7)
    res = kmrd_simplified(X1, X2, kern, 0.5, 0.2)
    P1, P2 = _poly2_features(X1, 0.7), _poly2_features(X2, 0.7)
    r12 = np.sum((P1 - P2 @ res.S12) ** 2)
    r21 = np.sum((P2 - P1 @ res.S21) ** 2)
    explicit = math.sqrt(0.5 * r12 + 0.5 * r21)
    b = gram_blocks(kern, X1, X2)
    assert kmrd_objective(b, res.S12, res.S21) == pytest.approx(explicit, rel=1e-8, abs=1e-10)


@given(seeds, st.integers(1, 4), st.integers(1, 8), st.floats(0.5, 5))
@settings(max_examples=50, deadline=None)
def test_gaussian_gram_range_and_psd(seed, m, n, r):
    # bandwidths where exp(-d^2 / 2r^2) cannot underflow for standard normal data
    X = gaussian(seed, m, n)
    K = gram(KernelSpec.gaussian(r), X, X)
    assert np.all(K > 0) and np.all(K <= 1)
    np.testing.assert_array_equal(np.diag(K), 1.0)
    assert np.linalg.eigvalsh(K)[0] >= -1e-9


@given(seeds, st.sampled_from([Variant.HEURISTIC_EXACT, Variant.TIGHTENED]))
@settings(max_examples=40, deadline=None)
def test_kernel_pseudometric(seed, variant):
    cfg = MrdConfig(variant=variant)
    A, B, C = gaussian(seed, 2, 4), gaussian(seed + 1, 2, 5), gaussian(seed + 2, 2, 3) + 1
    d = lambda X, Y: kmrd(X, Y, GAUSS, cfg).distance
    assert abs(d(A, B) - d(B, A)) <= 1e-9 * (1 + d(A, B))
    assert d(A, C) <= d(A, B) + d(B, C) + 10 * cfg.tol
    if variant is Variant.HEURISTIC_EXACT:
        assert d(A, A) <= 1e-8


def test_adaptive_bandwidth_is_symmetric_per_pair():
    X1, X2 = gaussian(8, 2, 4), gaussian(9, 2, 6)
    kern = KernelSpec.gaussian("auto")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        a = kmrd_heuristic(X1, X2, kern).distance
        b = kmrd_heuristic(X2, X1, kern).distance
    assert a == pytest.approx(b, rel=1e-9)
