"""Activation maps: closed forms, quadrature maps, derivatives, one layer."""
import numpy as np
import pytest
from scipy.integrate import dblquad

from deepntk.activations import (CorrelationMap, covariance_step,
                                 make_activation, relu, relu_f,
                                 relu_f_prime, relu_one_minus_f, tanh_f,
                                 tanh_f_deriv)
from deepntk.phase import InitParams, eoc_curve, variance_fixed_point

RELU = make_activation("relu")
TANH = make_activation("tanh")


def relu_phiphi_oracle(c: float) -> float:
    """E[relu(u1) relu(u2)] at unit variances by adaptive quadrature over
    the positive quadrant (independent of the arcsin closed form)."""
    s = np.sqrt(1.0 - c * c)

    def integrand(z2, z1):
        return (z1 * (c * z1 + s * z2)
                * np.exp(-(z1 * z1 + z2 * z2) / 2.0) / (2.0 * np.pi))

    val, _ = dblquad(integrand, 0.0, 12.0, lambda z1: -c * z1 / s, 12.0,
                     epsabs=1e-13, epsrel=1e-13)
    return val


class TestReluF:
    def test_value_at_one(self):
        assert relu_f(1.0) == 1.0

    def test_value_at_zero(self):
        assert abs(relu_f(0.0) - 1.0 / np.pi) < 1e-15

    def test_value_at_minus_one(self):
        assert abs(relu_f(-1.0)) < 1e-15

    def test_prime_at_one(self):
        assert relu_f_prime(1.0) == 1.0

    def test_prime_at_zero(self):
        assert relu_f_prime(0.0) == 0.5

    def test_prime_at_minus_one(self):
        assert abs(relu_f_prime(-1.0)) < 1e-15

    @pytest.mark.parametrize("c", [-0.8, -0.3, 0.2, 0.7])
    def test_against_adaptive_oracle(self, c):
        assert abs(2.0 * relu_phiphi_oracle(c) - relu_f(c)) < 1e-9

    def test_series_and_direct_branches_agree(self):
        # around the 1e-4 switchover both evaluations must coincide
        for gamma in (2e-4, 1.001e-4, 0.999e-4, 5e-5):
            direct = (1 - gamma) / 2.0 + (
                (1 - gamma) * np.arcsin(1 - gamma) + np.sqrt(1 - (1 - gamma) ** 2)
            ) / np.pi
            assert abs(relu_f(1.0 - gamma) - direct) < 1e-12

    def test_one_minus_f_accuracy_deep(self):
        # frozen 50-digit mpmath evaluation of 1 - f(1 - 1e-8)
        val = relu_one_minus_f(1e-8)
        assert abs(val - 9.9996998945611309e-09) < 1e-21


@pytest.fixture(scope="module")
def eoc_map():
    sw = eoc_curve(TANH, 0.2)
    q = variance_fixed_point(TANH, InitParams(0.2, sw))
    return CorrelationMap(TANH, q, 0.2, sw)


class TestTanhF:

    def test_fixed_point_normalization(self, eoc_map):
        assert abs(tanh_f(eoc_map, 1.0) - 1.0) < 1e-8

    def test_zero_bias_uncorrelated(self):
        cm = CorrelationMap(TANH, 0.8, 0.0, 1.3)
        assert abs(tanh_f(cm, 0.0)) < 1e-14  # odd function, zero mean

    def test_against_monte_carlo(self, eoc_map):
        rng = np.random.default_rng(7)
        z1, z2 = rng.standard_normal((2, 10**6))
        c, q = 0.5, eoc_map.q
        u1 = np.sqrt(q) * z1
        u2 = np.sqrt(q) * (c * z1 + np.sqrt(1 - c * c) * z2)
        vals = np.tanh(u1) * np.tanh(u2)
        mc = (eoc_map.sigma_b**2 + eoc_map.sigma_w**2 * vals.mean()) / q
        se = eoc_map.sigma_w**2 * vals.std(ddof=1) / 1000.0 / q
        assert abs(tanh_f(eoc_map, c) - mc) < 3 * se

    def test_first_derivative_at_one_is_chi(self, eoc_map):
        assert abs(tanh_f_deriv(eoc_map, 1.0, 1) - 1.0) < 1e-6

    @pytest.mark.parametrize("c", [-0.6, 0.0, 0.45, 0.8])
    def test_first_derivative_vs_finite_difference(self, eoc_map, c):
        h = 1e-5
        fd = (tanh_f(eoc_map, c + h) - tanh_f(eoc_map, c - h)) / (2 * h)
        assert abs(tanh_f_deriv(eoc_map, c, 1) - fd) < 1e-6

    def test_second_derivative_positive_at_one(self, eoc_map):
        assert tanh_f_deriv(eoc_map, 1.0, 2) > 0

    def test_third_derivative_vs_finite_difference(self, eoc_map):
        h = 1e-4
        fd = (tanh_f_deriv(eoc_map, 0.3 + h, 2)
              - tanh_f_deriv(eoc_map, 0.3 - h, 2)) / (2 * h)
        assert abs(tanh_f_deriv(eoc_map, 0.3, 3) - fd) < 1e-5

    def test_order_out_of_range(self, eoc_map):
        with pytest.raises(ValueError):
            tanh_f_deriv(eoc_map, 0.5, 4)


class TestCovarianceStep:
    def test_relu_critical_fixed_triple(self):
        for v in (0.5, 1.0, 3.0):
            out = covariance_step(RELU, 0.0, np.sqrt(2.0), v, v, v)
            np.testing.assert_allclose(out, (v, v, v), rtol=1e-14)

    def test_relu_ordered_variance_limit(self):
        qx = qxp = qcov = 5.0
        for _ in range(200):
            qx, qxp, qcov = covariance_step(RELU, 1.0, 0.1, qx, qxp, qcov)
        assert abs(qx - 1.0 / 0.995) < 1e-12

    def test_tanh_step_vs_wide_random_layer(self):
        # propagate (1, 1, 0.5) through one width-1e5 random tanh layer:
        # the next-layer covariance equals sb^2 + sw^2 mean_j phi(u1_j) phi(u2_j)
        # over the layer's sampled input units (weight average taken exactly)
        rng = np.random.default_rng(42)
        n = 10**5
        sb, sw = 0.3, 1.2
        z1, z2 = rng.standard_normal((2, n))
        u1, u2 = z1, 0.5 * z1 + np.sqrt(1 - 0.25) * z2
        prods = np.tanh(u1) * np.tanh(u2)
        est = sb**2 + sw**2 * prods.mean()
        se = sw**2 * prods.std(ddof=1) / np.sqrt(n)
        _, _, qcov = covariance_step(TANH, sb, sw, 1.0, 1.0, 0.5)
        assert abs(qcov - est) < 3 * se

    def test_nonpositive_variance_rejected(self):
        with pytest.raises(ValueError):
            covariance_step(RELU, 0.0, 1.0, 0.0, 1.0, 0.0)

    def test_cauchy_schwarz_violation_rejected(self):
        with pytest.raises(ValueError):
            covariance_step(RELU, 0.0, 1.0, 1.0, 1.0, 1.1)


class TestInvariants:
    def test_relu_f_matches_quadrature_expectation(self):
        # kinked integrand: tensor Gauss-Hermite converges only algebraically,
        # so the cross-validation runs at measured quadrature accuracy (the
        # 1e-9 closed-form validation is test_against_adaptive_oracle above)
        from deepntk.gaussmath import expect2
        worst = max(abs(2.0 * expect2(relu, 1.0, 1.0, c, RELU.quadrature) - relu_f(c))
                    for c in np.linspace(-0.9, 0.9, 13))
        assert worst < 1e-2

    def test_tanh_map_order64_self_consistent(self):
        # at the critical fixed-point variance the order-64 map matches
        # order-128 below 1e-10 across the whole correlation range
        from deepntk.gaussmath import gauss_hermite
        sw = eoc_curve(TANH, 0.2)
        q = variance_fixed_point(TANH, InitParams(0.2, sw))
        hi = make_activation("tanh", gauss_hermite(128))
        lo_map = CorrelationMap(TANH, q, 0.2, sw)
        hi_map = CorrelationMap(hi, q, 0.2, sw)
        worst = max(abs(tanh_f(lo_map, c) - tanh_f(hi_map, c))
                    for c in np.linspace(-1, 1, 21))
        assert worst < 1e-10
