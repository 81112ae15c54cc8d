"""Variance fixed points, phase classification, the critical curve."""
import numpy as np
import pytest

from deepntk.activations import make_activation
from deepntk.errors import DivergenceError, NoSolutionError
from deepntk.gaussmath import expect1
from deepntk.phase import InitParams, classify, eoc_curve, variance_fixed_point

RELU = make_activation("relu")
TANH = make_activation("tanh")

# critical sigma_w at sigma_b = 0.2, frozen from an independent adaptive
# quadrature + brentq computation (scipy.integrate.quad to 1e-13)
TANH_EOC_SW_02 = 1.304145840056574


class TestVarianceFixedPoint:
    def test_relu_ordered_closed_form(self):
        q = variance_fixed_point(RELU, InitParams(1.0, 0.1))
        assert abs(q - 1.0 / (1.0 - 0.005)) < 1e-10

    def test_relu_critical_returns_input_variance(self):
        for v in (0.3, 1.0, 7.5):
            assert variance_fixed_point(RELU, InitParams(0.0, np.sqrt(2.0)), v) == v

    def test_relu_chaotic_diverges(self):
        with pytest.raises(DivergenceError):
            variance_fixed_point(RELU, InitParams(0.0, 1.6))

    def test_relu_critical_with_bias_diverges(self):
        with pytest.raises(DivergenceError):
            variance_fixed_point(RELU, InitParams(0.5, np.sqrt(2.0)))

    def test_tanh_self_consistency(self):
        p = InitParams(0.2, TANH_EOC_SW_02)
        q = variance_fixed_point(TANH, p)
        resid = q - (p.sigma_b**2 + p.sigma_w**2 * expect1(
            lambda u: np.tanh(u) ** 2, q, TANH.quadrature))
        assert abs(resid) < 1e-10

    def test_tanh_degenerate_zero_bias(self):
        assert variance_fixed_point(TANH, InitParams(0.0, 0.9)) == 0.0

    def test_tanh_zero_bias_chaotic_positive_fixed_point(self):
        q = variance_fixed_point(TANH, InitParams(0.0, 1.5))
        assert q > 0.1


class TestClassify:
    def test_relu_deep_ordered(self):
        rep = classify(RELU, InitParams(1.0, 0.1))
        assert rep.phase == "ordered"
        assert abs(rep.chi - 0.005) < 1e-15

    def test_relu_critical_point(self):
        rep = classify(RELU, InitParams(0.0, np.sqrt(2.0)))
        assert rep.phase == "eoc"
        assert rep.chi == 1.0

    def test_tanh_near_critical_paper_point(self):
        # the commonly quoted (0.2, 1.298) sits 3.4e-3 inside the ordered
        # phase; the true critical sigma_w is 1.30415 (independent adaptive
        # quadrature oracle, frozen above)
        rep = classify(TANH, InitParams(0.2, 1.298))
        assert abs(rep.chi - 1.0) < 5e-3

    def test_tanh_chaotic(self):
        rep = classify(TANH, InitParams(0.2, 2.0))
        assert rep.phase == "chaotic"

    def test_degenerate_flagged(self):
        assert classify(TANH, InitParams(0.0, 0.9)).degenerate


class TestEocCurve:
    def test_matches_independent_oracle(self):
        sw = eoc_curve(TANH, 0.2)
        assert abs(sw - TANH_EOC_SW_02) < 1e-4

    def test_near_commonly_quoted_value(self):
        # the literature-standard 1.298 is a rounded version of 1.3041
        assert abs(eoc_curve(TANH, 0.2) - 1.298) < 7e-3

    def test_zero_bias_limit(self):
        assert abs(eoc_curve(TANH, 0.0) - 1.0) < 1e-6

    def test_round_trip_classifies_critical(self):
        sw = eoc_curve(TANH, 0.35)
        assert classify(TANH, InitParams(0.35, sw)).phase == "eoc"

    def test_relu_curve_is_singleton(self):
        assert eoc_curve(RELU, 0.0) == np.sqrt(2.0)
        with pytest.raises(NoSolutionError):
            eoc_curve(RELU, 0.5)

    def test_chi_target_placement(self):
        sw = eoc_curve(TANH, 0.3, chi_target=0.99)
        rep = classify(TANH, InitParams(0.3, sw))
        assert abs(rep.chi - 0.99) < 1e-9
        assert rep.phase == "ordered"


class TestInvariants:
    def test_chi_monotone_in_sigma_w(self):
        chis = [classify(TANH, InitParams(0.2, sw)).chi
                for sw in np.linspace(0.5, 2.0, 9)]
        assert np.all(np.diff(chis) > 0)

    def test_ordered_variance_reached_from_wide_starts(self):
        p = InitParams(1.0, 0.8)
        target = p.sigma_b**2 / (1.0 - p.sigma_w**2 / 2.0)
        for q0 in (1e-3, 1.0, 1e3):
            q = q0
            prev_delta = np.inf
            for it in range(5000):
                qn = p.sigma_b**2 + p.sigma_w**2 * q / 2.0
                delta = abs(qn - q)
                assert delta < prev_delta or delta < 1e-15
                prev_delta = delta
                q = qn
                if delta < 1e-15:
                    break
            assert abs(q - target) < 1e-9
