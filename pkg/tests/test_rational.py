import numpy as np
import pytest
from numpy.testing import assert_allclose

from minsvd.core import dense_svd
from minsvd.errors import DimensionError
from minsvd.rational import (
    BarycentricRational, RealifiedOperator, aaa_fit, eval_barycentric, lawson_refine, max_error,
    realify, sign_re, twin_circles, unrealify,
)


def cheb(n):
    return np.cos(np.pi * (np.arange(n) + 0.5) / n)


class TestBarycentric:
    def test_interpolates_support(self):
        r = BarycentricRational([0.0, 1.0, 2j], [1.0, -2.0, 0.5], [3.0, 4.0, 5.0])
        assert eval_barycentric(r, 1.0) == 4.0
        assert_allclose(r(np.array([0.0, 2j])), [3.0, 5.0])

    def test_single_point_constant(self):
        r = BarycentricRational([0.3], [1.0], [7.0 - 1j])
        assert_allclose(r(np.linspace(-5, 5, 11)), 7.0 - 1j)

    def test_all_zero_weights(self):
        with pytest.raises(ValueError):
            BarycentricRational([0.0, 1.0], [0.0, 0.0], [1.0, 2.0])

    def test_non_finite_point(self):
        r = BarycentricRational([0.0], [1.0], [1.0])
        with pytest.raises(ValueError):
            r(np.inf)

    def test_reproduces_rational(self):
        g = lambda z: 1.0 / (z - 2.0)
        Z = np.linspace(-1, 1, 3)
        r = aaa_fit(Z, g(Z), max_degree=1, tol=0.0)  # type (1, 1) contains 1/(z - 2)
        zz = np.exp(2j * np.pi * np.arange(100) / 100) * 0.9
        assert_allclose(r(zz), g(zz), rtol=1e-12)


class TestAaa:
    def test_constant(self):
        Z = np.linspace(0, 1, 20)
        r = aaa_fit(Z, np.full(20, 2.5), max_degree=5)
        assert r.degree == 0
        assert max_error(r, Z, np.full(20, 2.5)) == 0.0

    def test_identity(self):
        Z = np.exp(1j * np.linspace(0, 6, 50))
        r = aaa_fit(Z, Z, max_degree=5)
        assert r.degree >= 1
        assert max_error(r, Z, Z) <= 1e-13

    def test_abs_corridor(self):
        x = cheb(500)
        r = aaa_fit(x, np.abs(x), max_degree=10, tol=0.0)
        assert r.degree == 10
        assert 1e-6 < max_error(r, x, np.abs(x)) < 1e-2

    def test_error_decreases_with_degree(self):
        x = cheb(400)
        errs = [max_error(aaa_fit(x, np.exp(x), max_degree=d, tol=0.0), x, np.exp(x)) for d in (1, 2, 3, 4)]
        assert all(b < a for a, b in zip(errs, errs[1:]))

    def test_preconditions(self):
        with pytest.raises(DimensionError):
            aaa_fit(np.arange(3.0), np.arange(3.0), max_degree=5)
        with pytest.raises(ValueError):
            aaa_fit(np.array([0.0, 0.0, 1.0]), np.arange(3.0), max_degree=1)
        with pytest.raises(DimensionError):
            aaa_fit(np.array([0.5]), np.array([1.0]), max_degree=0, tol=-1.0)


class TestRealify:
    @pytest.mark.parametrize("m, n", [(1, 1), (3, 2), (6, 6), (9, 4)])
    def test_doubles_singular_values(self, rng, m, n):
        M = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        ref = np.linalg.svd(M, compute_uv=False)
        s = dense_svd(realify(M)).s
        assert_allclose(s[0::2], ref, rtol=1e-12)
        assert_allclose(s[1::2], ref, rtol=1e-12)

    def test_operator_matches_complex_product(self, rng):
        M = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
        x = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        assert_allclose(RealifiedOperator(M).complex_matvec(x), M @ x, rtol=1e-14)

    def test_null_vector_recovered(self, rng):
        M = rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4))
        w = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        M -= np.outer(M @ w, w.conj()) / np.vdot(w, w)  # make w a null vector
        V = dense_svd(realify(M)).V
        for x in (V[:, -1], V[:, -2]):  # either vector of the doubled pair works
            z = unrealify(x)
            assert np.linalg.norm(M @ z) <= 1e-13 * np.linalg.norm(M)
            assert abs(abs(np.vdot(z, w)) / np.linalg.norm(w) - 1) <= 1e-12
            k = np.argmax(np.abs(z))
            assert z[k].imag == 0 and z[k].real > 0


class TestLawson:
    def test_exact_rational_fixed_point(self):
        x = cheb(200)
        f = (x + 0.5) / (x - 1.5)
        r = aaa_fit(x, f, max_degree=1, tol=0.0)
        states = []
        best = lawson_refine(r, x, f, steps=5, callback=states.append)
        assert max_error(best, x, f) <= 1e-13
        assert_allclose(best(x), r(x), atol=1e-12)
        w = states[-1].weights
        assert w.max() / w.min() < 1e3 or max_error(r, x, f) < 1e-14

    def test_weights_positive_normalised_and_best_monotone(self):
        x = cheb(300)
        f = np.abs(x)
        r = aaa_fit(x, f, max_degree=6, tol=0.0)
        states = []
        lawson_refine(r, x, f, steps=15, callback=states.append)
        for s in states:
            assert np.all(s.weights > 0)
            assert_allclose(s.weights.sum(), 1.0, rtol=1e-14)
        best = [s.best_error for s in states]
        assert all(b <= a for a, b in zip(best, best[1:]))
        assert [s.iteration for s in states] == list(range(1, 16))

    def test_improves_abs(self):
        x = cheb(1000)
        r = aaa_fit(x, np.abs(x), max_degree=10, tol=0.0)
        best = lawson_refine(r, x, np.abs(x), steps=40)
        assert max_error(best, x, np.abs(x)) < 0.7 * max_error(r, x, np.abs(x))

    def test_backends_agree(self):
        x = cheb(2000)
        f = np.abs(x)
        r = aaa_fit(x, f, max_degree=10, tol=0.0)
        e_dense = max_error(lawson_refine(r, x, f, steps=20, backend="dense_svd"), x, f)
        e_rlob = max_error(lawson_refine(r, x, f, steps=20, backend="rlobpcg"), x, f)
        assert_allclose(e_rlob, e_dense, rtol=1e-8)

    def test_twin_circles(self):
        Z = twin_circles(300)
        F = sign_re(Z)
        assert_allclose(np.abs(Z[:300] - 1.03), 1.0, rtol=1e-14)
        r = aaa_fit(Z, F, max_degree=12, tol=0.0)
        best = lawson_refine(r, Z, F, steps=10, backend="rlobpcg")
        assert max_error(best, Z, F) <= max_error(r, Z, F)

    def test_bad_inputs(self):
        x = cheb(50)
        r = aaa_fit(x, np.abs(x), max_degree=3)
        with pytest.raises(ValueError):
            lawson_refine(r, x, np.abs(x), steps=0)
        with pytest.raises(ValueError):
            lawson_refine(r, x + 10, np.abs(x), steps=1)
        with pytest.raises(ValueError, match="step 1"):
            lawson_refine(r, x, np.abs(x), steps=1, backend="nope")
