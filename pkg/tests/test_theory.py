import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from minsvd.errors import HypothesisError
from minsvd.theory import (
    angle_bounds, gamma_from_spectrum, iteration_estimate, predicted_rate, ratio, relative_gap,
)


class TestPredictedRate:
    def test_no_distortion(self):
        r = predicted_rate(0.0, 1.0)
        assert r.q == 0.5 and r.C == 0.0 and r.hypothesis_holds

    def test_small_distortion(self):
        r = predicted_rate(0.1, 1.0)
        assert_allclose(r.q, 0.55, rtol=1e-15)
        assert_allclose(r.C, 2 / 7, rtol=1e-15)
        assert r.hypothesis_holds

    def test_runtime_corollary_setting(self):
        r = predicted_rate(1 / 6, 1.0)
        assert_allclose(r.q, 7 / 12, rtol=1e-15)
        assert r.q <= 1 - 1 / 6

    def test_equality_counts_as_violation(self):
        r = predicted_rate(1 / 3, 1.0)
        assert not r.hypothesis_holds and r.C is None
        assert_allclose(r.q, 2 / 3)

    def test_violation_keeps_q(self):
        r = predicted_rate(0.5, 0.1)
        assert r.C is None and 0 < r.q < 1

    @pytest.mark.parametrize("eta, gap", [(-0.1, 1.0), (1.0, 1.0), (0.1, 0.0)])
    def test_domain(self, eta, gap):
        with pytest.raises(ValueError):
            predicted_rate(eta, gap)

    @settings(max_examples=100, deadline=None)
    @given(eta=st.floats(0.0, 0.95), g1=st.floats(1e-3, 1e3), g2=st.floats(1e-3, 1e3))
    def test_monotone_in_gap(self, eta, g1, g2):
        if abs(g1 - g2) < 1e-6 * max(g1, g2):
            return
        lo, hi = sorted([g1, g2])
        assert predicted_rate(eta, hi).q < predicted_rate(eta, lo).q

    @settings(max_examples=100, deadline=None)
    @given(e1=st.floats(0.0, 0.99), e2=st.floats(0.0, 0.99), gap=st.floats(1e-3, 1e3))
    def test_monotone_in_eta(self, e1, e2, gap):
        if abs(e1 - e2) < 1e-6:
            return
        lo, hi = sorted([e1, e2])
        assert predicted_rate(hi, gap).q > predicted_rate(lo, gap).q


class TestGamma:
    def test_flat(self):
        assert gamma_from_spectrum([1.0, 1.0]) == 0.0

    def test_two_points(self):
        assert_allclose(gamma_from_spectrum([1.0, 3.0]), 0.5)

    def test_distortion_extremes(self):
        eta = 0.3
        assert_allclose(gamma_from_spectrum([1 / (1 + eta), 1 / (1 - eta)]), eta, rtol=1e-14)

    @pytest.mark.parametrize("seed", range(5))
    def test_grid_search(self, seed):
        lams = np.random.default_rng(seed).uniform(0.2, 5.0, 8)
        f = lambda t: np.max(np.abs(1 - np.outer(t, lams)), axis=1)
        t = np.linspace(1e-9, 4 / lams.min(), 100_001)
        # refine the grid around the coarse minimiser
        for _ in range(3):
            k = np.argmin(f(t))
            h = t[1] - t[0]
            t = np.linspace(max(t[k] - h, 1e-9), t[k] + h, 100_001)
        grid = f(t).min()
        assert_allclose(gamma_from_spectrum(lams), grid, atol=1e-6)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            gamma_from_spectrum([1.0, 0.0])


class TestAngleBounds:
    def test_exact(self):
        assert angle_bounds(1.0, 1.0, 2.0) == (0.0, 0.0)

    def test_example(self):
        s, t = angle_bounds(1.25, 1.0, math.sqrt(2.0))
        assert_allclose([s, t], [0.5, math.sqrt(1 / 3)], rtol=1e-15)

    @pytest.mark.parametrize("av2", [0.5, 2.5, 3.0])
    def test_precondition(self, av2):
        with pytest.raises(HypothesisError):
            angle_bounds(av2, 1.0, math.sqrt(2.0))

    def test_bounds_hold_on_random_vectors(self, rng):
        s = np.array([3.0, 2.0, 1.5, 1.0])
        V, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        A = np.diag(s) @ V.T
        for _ in range(200):
            v = V[:, -1] + 0.2 * rng.standard_normal(4)
            v /= np.linalg.norm(v)
            av2 = np.linalg.norm(A @ v) ** 2
            if av2 >= s[-2] ** 2:
                continue
            sb, tb = angle_bounds(av2, s[-1], s[-2])
            c = abs(v @ V[:, -1])
            sin = math.sqrt(max(0.0, 1 - c * c))
            assert sin <= sb + 1e-12
            assert sin / c <= tb + 1e-12


class TestIterationEstimate:
    def test_corollary_setting(self):
        assert iteration_estimate(None, 1.0, 1e-6) == 14

    def test_direct_formula(self):
        q = 7 / 12
        k = iteration_estimate(1 / 6, 1.0, 1e-6)
        assert 2 * q ** (2 * k) <= 1e-6 < 2 * q ** (2 * (k - 1))

    def test_boundary(self):
        assert iteration_estimate(None, 1.0, 2.0) == 0

    def test_clamp(self):
        assert_allclose(predicted_rate(min(3 / 3, 1 / 6), 3.0).q, 0.375)

    def test_bad_eta(self):
        with pytest.raises(HypothesisError):
            iteration_estimate(0.5, 1.0, 1e-6)

    def test_bad_eps(self):
        with pytest.raises(ValueError):
            iteration_estimate(None, 1.0, 0.0)

    @settings(max_examples=100, deadline=None)
    @given(gap=st.floats(1e-3, 1e3), eps=st.floats(1e-15, 1.9))
    def test_minimal(self, gap, eps):
        k = iteration_estimate(None, gap, eps)
        q = predicted_rate(min(gap / 3, 1 / 6), gap).q
        assert 2 * q ** (2 * k) <= eps
        assert k == 0 or 2 * q ** (2 * (k - 1)) > eps


def test_ratio_and_gap():
    assert_allclose(relative_gap(1.0, math.sqrt(2.0)), 1.0)
    assert_allclose(ratio(1.25, 1.0, math.sqrt(2.0)), 1 / 3)
