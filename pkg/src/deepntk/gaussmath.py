"""Gaussian quadrature and bivariate Gaussian expectations.

All kernel maps in this package reduce to one- and two-dimensional
expectations over standard normals,

    E[g(sqrt(q) Z)],                    Z ~ N(0,1),
    E[g(u1) g(u2)],                     (u1, u2) jointly Gaussian,

with u1 = sqrt(q1) Z1 and u2 = sqrt(q2) (c Z1 + sqrt(1-c^2) Z2), so that
Var(u1)=q1, Var(u2)=q2 and Corr(u1,u2)=c.  Hermite rules integrate against
the standard normal density; Jacobi rules integrate against
(1-t^2)^alpha on [-1,1] and are used by the spherical-spectrum code.

Everything here is plain 64-bit floating point; rules are immutable and
safe to share between threads.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_hermitenorm, roots_jacobi

from .errors import NumericError

#: Default 1D order; 64x64 tensor grids in 2D keep Tanh map errors < 1e-10.
DEFAULT_ORDER = 64

#: Correlations within this distance above 1 in absolute value are clamped.
CORRELATION_SLACK = 1e-12


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights of a fixed quadrature rule.

    ``kind`` is "hermite" (weight = standard normal density, nodes on the
    real line) or "jacobi" (weight = (1-t^2)^alpha_exponent on [-1, 1]).
    Nodes are strictly increasing and weights strictly positive.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    alpha_exponent: float | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be 1D of equal length")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        if not np.all(weights > 0):
            raise ValueError("weights must be positive")

    @property
    def order(self) -> int:
        return self.nodes.size


def gauss_hermite(order: int) -> QuadratureRule:
    """Gauss-Hermite rule for expectations under N(0, 1).

    Uses the probabilists' Hermite rule (weight e^{-z^2/2}) normalized so
    that sum(w_i) = 1 and sum(w_i f(z_i)) ~= E[f(Z)] for Z ~ N(0,1).
    """
    if order < 2:
        raise ValueError(f"order must be >= 2, got {order}")
    z, w = roots_hermitenorm(order)
    return QuadratureRule(
        nodes=z, weights=w / np.sqrt(2.0 * np.pi), kind="hermite"
    )


def gauss_jacobi(order: int, alpha_exponent: float) -> QuadratureRule:
    """Gauss-Jacobi rule on [-1, 1] with weight (1-t^2)^alpha_exponent."""
    if order < 2:
        raise ValueError(f"order must be >= 2, got {order}")
    if alpha_exponent <= -1:
        raise ValueError("alpha_exponent must exceed -1")
    t, w = roots_jacobi(order, alpha_exponent, alpha_exponent)
    return QuadratureRule(
        nodes=t, weights=w, kind="jacobi", alpha_exponent=alpha_exponent
    )


def clamp_correlation(c, slack: float = CORRELATION_SLACK):
    """Clamp correlations to [-1, 1], rejecting violations beyond ``slack``.

    Long kernel recursions accumulate floating-point drift that can push a
    correlation marginally past 1; anything worse than ``slack`` is a caller
    bug and raises.
    """
    c_arr = np.asarray(c, dtype=np.float64)
    if np.any(np.abs(c_arr) > 1.0 + slack):
        raise ValueError(f"correlation out of range [-1,1]: {c!r}")
    clipped = np.clip(c_arr, -1.0, 1.0)
    return float(clipped) if np.isscalar(c) or c_arr.ndim == 0 else clipped


def expect1(g, q: float, rule: QuadratureRule) -> float:
    """Quadrature estimate of E[g(sqrt(q) Z)] with Z ~ N(0,1)."""
    if q < 0:
        raise ValueError(f"variance must be nonnegative, got {q}")
    if rule.kind != "hermite":
        raise ValueError("expect1 requires a hermite rule")
    vals = g(np.sqrt(q) * rule.nodes)
    if not np.all(np.isfinite(vals)):
        raise NumericError("integrand evaluated to a non-finite value")
    return float(rule.weights @ vals)


def expect2(g, q1: float, q2: float, c: float, rule: QuadratureRule) -> float:
    """Tensor-product estimate of E[g(u1) g(u2)].

    (u1, u2) is the bivariate Gaussian with variances q1, q2 and
    correlation c, realized as u1 = sqrt(q1) z1,
    u2 = sqrt(q2) (c z1 + sqrt(1-c^2) z2).
    """
    if q1 < 0 or q2 < 0:
        raise ValueError("variances must be nonnegative")
    if rule.kind != "hermite":
        raise ValueError("expect2 requires a hermite rule")
    c = clamp_correlation(c)
    if q2 > q1:  # canonical order makes the estimate exactly symmetric
        q1, q2 = q2, q1
    z = rule.nodes
    w = rule.weights
    u1 = np.sqrt(q1) * z
    u2 = np.sqrt(q2) * (c * z[:, None] + np.sqrt(1.0 - c * c) * z[None, :])
    vals = g(u1)[:, None] * g(u2)
    if not np.all(np.isfinite(vals)):
        raise NumericError("integrand evaluated to a non-finite value")
    return float(w @ vals @ w)


def expect2_pairs(g, q1, q2, c, rule: QuadratureRule) -> np.ndarray:
    """Vectorized :func:`expect2` over arrays of (q1, q2, c) triples.

    Returns an array of the same shape as the broadcast inputs.  Used by the
    kernel recursions, which propagate many input pairs per layer.
    """
    if rule.kind != "hermite":
        raise ValueError("expect2_pairs requires a hermite rule")
    q1, q2, c = np.broadcast_arrays(
        np.asarray(q1, dtype=np.float64),
        np.asarray(q2, dtype=np.float64),
        np.asarray(c, dtype=np.float64),
    )
    if np.any(q1 < 0) or np.any(q2 < 0):
        raise ValueError("variances must be nonnegative")
    c = clamp_correlation(c)
    q1, q2 = np.maximum(q1, q2), np.minimum(q1, q2)  # canonical order
    shape = q1.shape
    q1f, q2f, cf = q1.ravel(), q2.ravel(), np.atleast_1d(c).ravel()
    z = rule.nodes
    w = rule.weights
    # grid axes: (i, j, pair)
    u1 = np.sqrt(q1f)[None, :] * z[:, None]                       # (n, P)
    mix = cf[None, None, :] * z[:, None, None] + np.sqrt(
        1.0 - cf * cf
    )[None, None, :] * z[None, :, None]                            # (n, n, P)
    u2 = np.sqrt(q2f)[None, None, :] * mix
    vals = g(u1)[:, None, :] * g(u2)
    if not np.all(np.isfinite(vals)):
        raise NumericError("integrand evaluated to a non-finite value")
    out = np.einsum("i,j,ijp->p", w, w, vals)
    return out.reshape(shape)


_DEFAULT_HERMITE: QuadratureRule | None = None


def default_hermite() -> QuadratureRule:
    """Shared order-64 Hermite rule (immutable, so caching is safe)."""
    global _DEFAULT_HERMITE
    if _DEFAULT_HERMITE is None:
        _DEFAULT_HERMITE = gauss_hermite(DEFAULT_ORDER)
    return _DEFAULT_HERMITE
