import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from minsvd.core import (
    EPS, LinearOperator, adjoint_matvec, aslinearoperator, dense_svd, matvec, orthonormal_residual,
)
from minsvd.errors import DimensionError, NonFiniteError
from minsvd.matgen import haar_orthonormal


def random_csr(rng, m, n, density=0.4):
    M = sp.random(m, n, density=density, random_state=np.random.RandomState(rng.integers(2**31)),
                  format="csr")
    M.sort_indices()
    return M


class TestMatvec:
    def test_identity(self):
        assert_array_equal(matvec(np.eye(3), np.array([1.0, 2.0, 3.0])), [1.0, 2.0, 3.0])

    def test_diag_picks_last(self):
        assert_array_equal(matvec(np.diag([3.0, 2.0, 1.0]), np.array([0.0, 0.0, 1.0])), [0.0, 0.0, 1.0])

    def test_csr_matches_dense(self, rng):
        M = random_csr(rng, 7, 4)
        x = rng.standard_normal(4)
        y = matvec(LinearOperator.from_sparse(M), x)
        ref = M.toarray() @ x
        assert_allclose(y, ref, rtol=1e-15, atol=1e-15 * np.linalg.norm(ref))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            matvec(np.eye(3), np.ones(2))

    def test_nan_rejected(self):
        with pytest.raises(NonFiniteError):
            matvec(np.eye(2), np.array([1.0, np.nan]))
        with pytest.raises(NonFiniteError):
            LinearOperator.from_dense([[1.0, np.inf]])


class TestAdjoint:
    def test_identity(self):
        y = np.array([4.0, -1.0, 2.0])
        assert_array_equal(adjoint_matvec(np.eye(3), y), y)

    def test_outer_product(self):
        A = np.zeros((3, 2))
        A[0, 1] = 1.0
        assert_array_equal(adjoint_matvec(A, np.array([1.0, 0.0, 0.0])), [0.0, 1.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            adjoint_matvec(np.ones((3, 2)), np.ones(2))

    @pytest.mark.parametrize("kind", ["dense", "csr", "composed"])
    def test_consistency_100_instances(self, rng, kind):
        worst = 0.0
        for _ in range(100):
            if kind == "dense":
                A = LinearOperator.from_dense(rng.standard_normal((20, 5)))
            elif kind == "csr":
                A = LinearOperator.from_sparse(random_csr(rng, 20, 5))
            else:
                U = haar_orthonormal(20, 5, int(rng.integers(2**31)))
                V = haar_orthonormal(5, 5, int(rng.integers(2**31)))
                A = LinearOperator.composed(U, rng.uniform(0.1, 2.0, 5), V)
            x, y = rng.standard_normal(5), rng.standard_normal(20)
            normA = np.linalg.norm(A.todense(), 2)
            lhs, rhs = A.matvec(x) @ y, x @ A.rmatvec(y)
            if normA:
                worst = max(worst, abs(lhs - rhs) / (normA * np.linalg.norm(x) * np.linalg.norm(y)))
        assert worst <= 1e-13


class TestCsr:
    def test_from_csr_roundtrip(self):
        A = LinearOperator.from_csr([0, 1, 3], [1, 0, 2], [5.0, 1.0, 2.0], (2, 3))
        assert A.nnz == 3
        assert_array_equal(A.todense(), [[0.0, 5.0, 0.0], [1.0, 0.0, 2.0]])

    def test_unsorted_columns_rejected(self):
        with pytest.raises(DimensionError):
            LinearOperator.from_csr([0, 2], [1, 0], [1.0, 1.0], (1, 2))

    def test_decreasing_offsets_rejected(self):
        with pytest.raises(DimensionError):
            LinearOperator.from_csr([0, 2, 1], [0, 1, 0], [1.0, 1.0], (2, 2))

    def test_nnz_count_mismatch(self):
        with pytest.raises(DimensionError):
            LinearOperator.from_csr([0, 1, 2], [0, 1], [1.0, 1.0, 1.0], (2, 2))

    def test_column_norms_agree(self, rng):
        M = random_csr(rng, 30, 6)
        assert_allclose(LinearOperator.from_sparse(M).column_norms(),
                        np.linalg.norm(M.toarray(), axis=0), rtol=1e-14)

    def test_aslinearoperator_passthrough(self):
        A = LinearOperator.from_dense(np.eye(2))
        assert aslinearoperator(A) is A


class TestDenseSvd:
    def test_diag(self):
        res = dense_svd(np.diag([3.0, 2.0, 1.0]))
        assert_allclose(res.s, [3.0, 2.0, 1.0], rtol=1e-15)
        assert_allclose(np.abs(res.V), np.eye(3), atol=1e-15)

    def test_orthonormal_columns(self):
        Q = haar_orthonormal(9, 4, 3)
        assert_allclose(dense_svd(Q).s, 1.0, rtol=1e-14)

    def test_random_12x5(self, rng):
        M = rng.standard_normal((12, 5))
        res = dense_svd(M, want_u=True)
        rec = (res.U * res.s) @ res.V.T
        assert np.linalg.norm(M - rec, 2) / np.linalg.norm(M, 2) <= 1e-14
        assert orthonormal_residual(res.V) <= 1e-14
        assert orthonormal_residual(res.U) <= 1e-13

    def test_wide_input(self, rng):
        M = rng.standard_normal((3, 7))
        res = dense_svd(M, want_u=True)
        assert res.s.shape == (3,)
        assert_allclose((res.U * res.s) @ res.V.T, M, atol=1e-13)

    def test_sign_convention(self, rng):
        res = dense_svd(rng.standard_normal((10, 4)))
        for j in range(4):
            col = res.V[:, j]
            assert col[np.argmax(np.abs(col))] > 0

    def test_nonfinite_rejected(self):
        with pytest.raises(NonFiniteError):
            dense_svd(np.array([[1.0, np.nan], [0.0, 1.0]]))

    def test_rank_deficient(self, rng):
        M = np.outer(rng.standard_normal(6), rng.standard_normal(4))
        res = dense_svd(M)
        assert res.s[1] <= 10 * EPS * res.s[0]
        assert orthonormal_residual(res.V) <= 1e-13

    def test_graded_relative_accuracy(self):
        # one-sided Jacobi resolves tiny singular values of a graded matrix accurately
        s = np.geomspace(1.0, 1e-12, 6)
        U = haar_orthonormal(10, 6, 1)
        V = haar_orthonormal(6, 6, 2)
        res = dense_svd((U * s) @ V.T)
        assert_allclose(res.s, s, rtol=1e-3)

    @settings(max_examples=60, deadline=None)
    @given(m=st.integers(1, 12), n=st.integers(1, 8), seed=st.integers(0, 2**32 - 1))
    def test_matches_symmetric_eigen(self, m, n, seed):
        M = np.random.default_rng(seed).standard_normal((m, n))
        s = dense_svd(M).s
        lam = np.linalg.eigvalsh(M.T @ M)[::-1][: min(m, n)]
        ref = np.sqrt(np.clip(lam, 0.0, None))
        mask = ref >= 1e-6 * ref[0]  # eig of the Gram matrix loses the rest to squaring
        assert_allclose(s[mask], ref[mask], rtol=1e-10)

    def test_invariant_under_orthogonal_factors(self, rng):
        M = rng.standard_normal((15, 6))
        Q1 = haar_orthonormal(15, 15, 7)
        Q2 = haar_orthonormal(6, 6, 8)
        assert_allclose(dense_svd(Q1 @ M @ Q2).s, dense_svd(M).s, rtol=1e-13)
