import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jmgtlab.banded import BandedMatrix, combine, factor, solve
from jmgtlab.errors import FactorizationError
from jmgtlab.splines import assemble, build_basis


def gauss_solve(A, b):
    """Textbook dense Gaussian elimination with partial pivoting."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    n = len(b)
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        A[[k, p]] = A[[p, k]]
        b[[k, p]] = b[[p, k]]
        for i in range(k + 1, n):
            m = A[i, k] / A[k, k]
            A[i, k:] -= m * A[k, k:]
            b[i] -= m * b[k]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - A[i, i + 1:] @ x[i + 1:]) / A[i, i]
    return x


def test_identity():
    A = BandedMatrix.from_dense(np.eye(5), 0)
    rhs = np.arange(5.0)
    np.testing.assert_array_equal(solve(factor(A), rhs), rhs)


def test_two_by_two():
    A = BandedMatrix.from_dense(np.array([[2.0, 1.0], [1.0, 2.0]]), 1)
    np.testing.assert_allclose(solve(factor(A), [3.0, 3.0]), [1.0, 1.0], rtol=1e-15)


def test_constrained_mass_matches_dense_elimination():
    M = assemble(build_basis(2, 4, (0.0, 0.2))).M_free
    rhs = np.random.default_rng(0).normal(size=M.n)
    x = solve(factor(M), rhs)
    ref = gauss_solve(M.to_dense(), rhs)
    assert np.linalg.norm(x - ref) <= 1e-13 * np.linalg.norm(ref)


def test_zero_rhs_and_determinism():
    K = assemble(build_basis(2, 30, (0.0, 0.2))).K_free
    F = factor(K)
    assert not solve(F, np.zeros(K.n)).any()
    rhs = np.linspace(-1, 1, K.n)
    a = solve(factor(K), rhs)
    b = solve(factor(K), rhs)
    assert a.tobytes() == b.tobytes()


def test_banded_algebra_matches_dense():
    rng = np.random.default_rng(3)
    ops = assemble(build_basis(2, 9, (0.0, 1.0)))
    x = rng.normal(size=ops.M.n)
    C = combine((2.0, ops.M), (0.5, ops.K))
    D = 2.0 * ops.M.to_dense() + 0.5 * ops.K.to_dense()
    np.testing.assert_allclose(C.to_dense(), D, rtol=1e-14)
    np.testing.assert_allclose(C.matvec(x), D @ x, rtol=1e-12)
    assert C.quadratic_form(x) == pytest.approx(x @ D @ x, rel=1e-12)
    np.testing.assert_allclose(C.restrict(1, 10).to_dense(), D[1:10, 1:10])


def test_from_dense_rejects_asymmetric():
    with pytest.raises(ValueError):
        BandedMatrix.from_dense(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)


def test_indefinite_pivot_is_reported():
    A = BandedMatrix.from_dense(np.diag([1.0, 2.0, -1.0, 4.0]), 1)
    with pytest.raises(FactorizationError) as info:
        factor(A)
    assert info.value.pivot == 2


@st.composite
def spd_banded(draw):
    n = draw(st.integers(1, 300))
    u = draw(st.integers(0, 4))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    ab = rng.uniform(-1.0, 1.0, size=(u + 1, n))
    # strict diagonal dominance makes the matrix SPD
    ab[u] = 2.0 * (u + 1) + rng.uniform(0.0, 1.0, n)
    for d in range(1, u + 1):
        ab[u - d, :d] = 0.0
    return BandedMatrix(ab), rng.normal(size=n)


@settings(max_examples=60, deadline=None)
@given(spd_banded())
def test_residual_on_random_spd(case):
    A, rhs = case
    x = solve(factor(A), rhs)
    assert np.linalg.norm(A.matvec(x) - rhs) <= 1e-12 * np.linalg.norm(rhs) + 1e-300
