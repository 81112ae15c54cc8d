"""Activation models and their Gaussian covariance / correlation maps.

For an activation phi and a bivariate Gaussian field with variances
qx, qxp and correlation c, one propagation layer maps

    q_next = sigma_b^2 + sigma_w^2 E[phi(u1) phi(u2)],

and the correlation function at the variance fixed point q is

    f(c) = (sigma_b^2 + sigma_w^2 E[phi(sqrt(q) Z1)
            phi(sqrt(q) (c Z1 + sqrt(1-c^2) Z2))]) / q.

ReLU admits closed forms (positive homogeneity):

    E[phi phi]   = sqrt(qx qxp)/2 * f_relu(c),
    E[phi' phi'] = 1/2 * f_relu'(c),
    f_relu(c)    = (c asin(c) + sqrt(1-c^2)) / pi + c / 2,
    f_relu'(c)   = asin(c) / pi + 1/2.

Tanh goes through Gauss-Hermite quadrature only; its derivatives are
analytic (phi' = 1 - tanh^2, phi'' = -2 tanh phi',
phi''' = -2 phi'^2 - 2 tanh phi'') so that f', f'', f''' come out of the
same bivariate expectation with phi replaced by phi^(j):

    f^(j)(c) = sigma_w^2 q^(j-1) E[phi^(j)(sqrt(q) Z1) phi^(j)(sqrt(q) U2)].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussmath import (
    QuadratureRule,
    clamp_correlation,
    default_hermite,
    expect1,
    expect2,
    expect2_pairs,
)

_S_RELU = 2.0 * np.sqrt(2.0) / (3.0 * np.pi)   # (1-c)^{3/2} Taylor coefficient
_B_RELU = np.sqrt(2.0) / (30.0 * np.pi)        # (1-c)^{5/2} Taylor coefficient

#: Below this 1-c, arcsin/sqrt cancellation dominates; use the series.
_RELU_SERIES_THRESHOLD = 1e-4


def relu(u):
    return np.maximum(u, 0.0)


def relu_prime(u):
    # derivative at 0 defined as 0
    return (u > 0).astype(np.float64)


def tanh_prime(u):
    t = np.tanh(u)
    return 1.0 - t * t


def tanh_second(u):
    t = np.tanh(u)
    return -2.0 * t * (1.0 - t * t)


def tanh_third(u):
    t = np.tanh(u)
    p = 1.0 - t * t
    return -2.0 * p * p - 2.0 * t * (-2.0 * t * p)


_TANH_DERIVS = {0: np.tanh, 1: tanh_prime, 2: tanh_second, 3: tanh_third}


@dataclass(frozen=True)
class ActivationModel:
    """An activation plus the quadrature backing its expectation maps.

    ReLU ignores the rule entirely (closed forms only); Tanh uses it for
    every expectation.
    """

    kind: str
    quadrature: QuadratureRule

    def __post_init__(self):
        if self.kind not in ("relu", "tanh"):
            raise ValueError(f"unknown activation {self.kind!r}")

    @property
    def phi(self):
        return relu if self.kind == "relu" else np.tanh

    @property
    def phi_prime(self):
        return relu_prime if self.kind == "relu" else tanh_prime


def make_activation(kind: str, rule: QuadratureRule | None = None) -> ActivationModel:
    return ActivationModel(kind=kind, quadrature=rule or default_hermite())


def relu_one_minus_f(gamma):
    """1 - f_relu(1 - gamma), accurate for small gamma.

    Direct evaluation of f near c = 1 loses the tiny f(c) - c increment to
    cancellation between arccos(c) and sqrt(1-c^2) (both ~ sqrt(2 gamma)).
    Below the series threshold uses
        1 - f(1-gamma) = gamma - s gamma^{3/2} - b gamma^{5/2} + O(g^{7/2});
    above it, the bracketed exact form
        1 - f(c) = gamma/2 + (arccos(c) + gamma asin(c) - sqrt(1-c^2)) / pi.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    out = np.empty_like(gamma)
    small = gamma < _RELU_SERIES_THRESHOLD
    g_s = gamma[small]
    out[small] = g_s - _S_RELU * g_s**1.5 - _B_RELU * g_s**2.5
    g_b = gamma[~small]
    c = 1.0 - g_b
    out[~small] = g_b / 2.0 + (
        np.arccos(c) + g_b * np.arcsin(c) - np.sqrt(g_b * (2.0 - g_b))
    ) / np.pi
    return out if out.ndim else float(out)


def relu_f(c):
    """ReLU correlation map f(c) = (c asin c + sqrt(1-c^2))/pi + c/2."""
    c = clamp_correlation(c)
    carr = np.asarray(c, dtype=np.float64)
    out = (carr * np.arcsin(carr) + np.sqrt(np.maximum(1.0 - carr * carr, 0.0))
           ) / np.pi + carr / 2.0
    near_one = carr > 1.0 - _RELU_SERIES_THRESHOLD
    if np.any(near_one):
        if carr.ndim:
            out[near_one] = 1.0 - relu_one_minus_f(1.0 - carr[near_one])
        else:
            out = np.float64(1.0 - relu_one_minus_f(1.0 - carr))
    return float(out) if out.ndim == 0 else out


def relu_f_prime(c):
    """Derivative f'(c) = asin(c)/pi + 1/2; equals 1 at c = 1 (EOC)."""
    c = clamp_correlation(c)
    carr = np.asarray(c, dtype=np.float64)
    out = np.arcsin(carr) / np.pi + 0.5
    return float(out) if out.ndim == 0 else out


def relu_one_minus_f_prime(gamma):
    """1 - f_relu'(1 - gamma) = sqrt(2 gamma)(1 + gamma/12 + 3 gamma^2/160)/pi."""
    gamma = np.asarray(gamma, dtype=np.float64)
    out = np.where(
        gamma < _RELU_SERIES_THRESHOLD,
        np.sqrt(2.0 * gamma) * (1.0 + gamma / 12.0 + 3.0 * gamma**2 / 160.0) / np.pi,
        np.arccos(1.0 - gamma) / np.pi,
    )
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CorrelationMap:
    """Correlation function f at a variance fixed point q.

    Satisfies f(1) = 1 when q solves q = sigma_b^2 + sigma_w^2 E[phi(sqrt(q)Z)^2].
    """

    activation: ActivationModel
    q: float
    sigma_b: float
    sigma_w: float

    def __post_init__(self):
        if self.q <= 0:
            raise ValueError("fixed-point variance must be positive")
        if self.sigma_w <= 0:
            raise ValueError("sigma_w must be positive")

    def __call__(self, c: float) -> float:
        if self.activation.kind == "relu":
            return float(
                (self.sigma_b**2
                 + 0.5 * self.sigma_w**2 * self.q * relu_f(c)) / self.q
            )
        return tanh_f(self, c)


def tanh_f(corr_map: CorrelationMap, c: float) -> float:
    """Tanh correlation map via the bivariate quadrature expectation."""
    e = expect2(np.tanh, corr_map.q, corr_map.q, c, corr_map.activation.quadrature)
    return (corr_map.sigma_b**2 + corr_map.sigma_w**2 * e) / corr_map.q


def tanh_f_deriv(corr_map: CorrelationMap, c: float, order: int) -> float:
    """j-th derivative of the Tanh correlation map, j in {1, 2, 3}.

    Uses f^(j)(c) = sigma_w^2 q^{j-1} E[phi^(j)(u1) phi^(j)(u2)] (repeated
    Price's theorem), with the phi^(j) arguments carrying the sqrt(q) scale.
    """
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    g = _TANH_DERIVS[order]
    e = expect2(g, corr_map.q, corr_map.q, c, corr_map.activation.quadrature)
    return corr_map.sigma_w**2 * corr_map.q ** (order - 1) * e


def phiphi_expectation(activation: ActivationModel, qx, qxp, c) -> np.ndarray:
    """E[phi(u1) phi(u2)] for variances qx, qxp and correlation c (vectorized)."""
    c = clamp_correlation(c)
    if activation.kind == "relu":
        return 0.5 * np.sqrt(np.asarray(qx) * np.asarray(qxp)) * relu_f(c)
    return expect2_pairs(np.tanh, qx, qxp, c, activation.quadrature)


def phiprime_expectation(activation: ActivationModel, qx, qxp, c) -> np.ndarray:
    """E[phi'(u1) phi'(u2)] for variances qx, qxp and correlation c."""
    c = clamp_correlation(c)
    if activation.kind == "relu":
        return 0.5 * relu_f_prime(c)
    return expect2_pairs(tanh_prime, qx, qxp, c, activation.quadrature)


def covariance_step(activation: ActivationModel, sigma_b: float, sigma_w: float,
                    qx: float, qxp: float, qcov: float):
    """One exact layer of variance/covariance propagation.

    Returns (qx_next, qxp_next, qcov_next) with
        q_next = sigma_b^2 + sigma_w^2 E[phi phi]
    evaluated on the layer-input Gaussian field.
    """
    qx_a = np.asarray(qx, dtype=np.float64)
    qxp_a = np.asarray(qxp, dtype=np.float64)
    qcov_a = np.asarray(qcov, dtype=np.float64)
    if np.any(qx_a <= 0) or np.any(qxp_a <= 0):
        raise ValueError("variances must be positive")
    if np.any(qcov_a * qcov_a > qx_a * qxp_a * (1.0 + 1e-10)):
        raise ValueError("covariance violates Cauchy-Schwarz")
    c = clamp_correlation(qcov_a / np.sqrt(qx_a * qxp_a))
    sb2, sw2 = sigma_b**2, sigma_w**2
    qx_next = sb2 + sw2 * _diag_expectation(activation, qx_a)
    qxp_next = sb2 + sw2 * _diag_expectation(activation, qxp_a)
    qcov_next = sb2 + sw2 * phiphi_expectation(activation, qx_a, qxp_a, c)
    if np.isscalar(qx) or qx_a.ndim == 0:
        return float(qx_next), float(qxp_next), float(qcov_next)
    return qx_next, qxp_next, qcov_next


def _diag_expectation(activation: ActivationModel, q) -> np.ndarray:
    """E[phi(sqrt(q) Z)^2]: q/2 for ReLU, quadrature for Tanh."""
    q = np.asarray(q, dtype=np.float64)
    if activation.kind == "relu":
        return q / 2.0
    if q.ndim == 0:
        return expect1(lambda u: np.tanh(u) ** 2, float(q), activation.quadrature)
    return expect2_pairs(np.tanh, q, q, np.ones_like(q), activation.quadrature)
