"""Exact infinite-width NTK recursions per depth for four architectures.

Dense feedforward (depth-L) kernel, per input pair:

    K^1 = q^1 = sigma_b^2 + sigma_w^2 (x . x') / d,
    K^l = qdot^l K^{l-1} + q^l,                        l >= 2,

with q^l = sigma_b^2 + sigma_w^2 E[phi phi] and
qdot^l = sigma_w^2 E[phi' phi'] evaluated on the layer-(l-1) Gaussian
field.  Convolutional kernels replace the scalars by (alpha, alpha') grids
with a circulant average over the filter window; residual kernels gain a
skip term

    K^l = K^{l-1} (qdot^l + 1) + qhat^l,

where qhat^l = sigma_b^2 + sigma_w^2 E[phi phi] is the covariance of the
residual *block output* (the skip path contributes the K^{l-1} term, the
block parameters contribute qhat^l; the full field covariance
q^l = q^{l-1} + qhat^l is what propagates forward).  Scaled residual
blocks carry a 1/sqrt(l) factor, so their kernel contributions scale
by 1/l.

Residual variances grow like (1 + sigma_w^2/2)^L; those recursions run in
a rescaled representation and the trace stores log-magnitudes alongside
(possibly overflowed) raw values.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .activations import (
    ActivationModel,
    _diag_expectation,
    phiphi_expectation,
    phiprime_expectation,
    relu_f,
    relu_f_prime,
)
from .errors import DivergenceError
from .gaussmath import clamp_correlation
from .phase import InitParams, classify

_DENSE_KINDS = ("ffnn", "resnet_dense", "scaled_resnet_dense")
_CONV_KINDS = ("cnn", "resnet_conv", "scaled_resnet_conv")

#: variances beyond this flag the trace as overflowed (chaotic ReLU)
_OVERFLOW_LIMIT = 1e300


def _layer_correlation(qcov, qx, qxp):
    """Correlation with rounding guards.

    Clamps to [-1, 1] and snaps values within 1e-12 of +-1 to exactly +-1:
    the kernel multiplier f'(c) has square-root sensitivity at |c| = 1, so
    last-ulp noise in the variances would otherwise contaminate self-pairs.
    Genuinely distinct pairs sit far from the snap zone (the dataset
    colinearity gate keeps |cos| below 1 - 1e-9).
    """
    c = clamp_correlation(qcov / np.sqrt(qx * qxp))
    snapped = np.where(1.0 - np.abs(c) < 1e-12, np.sign(c), c)
    return snapped if isinstance(c, np.ndarray) else float(snapped)


@dataclass(frozen=True)
class Architecture:
    """Architecture selector; conv kinds carry the channel geometry."""

    kind: str
    positions: int | None = None          # M, neurons per channel
    filter_half_width: int | None = None  # k, filter = [-k, k]
    assumption1: bool = True

    def __post_init__(self):
        if self.kind not in _DENSE_KINDS + _CONV_KINDS:
            raise ValueError(f"unknown architecture kind {self.kind!r}")
        if self.is_conv:
            if self.positions is None or self.filter_half_width is None:
                raise ValueError("conv architectures need positions and filter_half_width")
            if 2 * self.filter_half_width + 1 > self.positions:
                raise ValueError("filter size 2k+1 must not exceed positions M")

    @property
    def is_conv(self) -> bool:
        return self.kind in _CONV_KINDS

    @property
    def is_residual(self) -> bool:
        return "resnet" in self.kind

    @property
    def is_scaled(self) -> bool:
        return self.kind.startswith("scaled")


@dataclass(frozen=True)
class InputPair:
    """A pair of inputs; vectors (d,) for dense, arrays (n0, M) for conv."""

    x: np.ndarray
    xp: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        xp = np.asarray(self.xp, dtype=np.float64)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xp", xp)
        if x.shape != xp.shape:
            raise ValueError("x and xp must have identical shapes")
        if x.ndim not in (1, 2):
            raise ValueError("inputs must be vectors (dense) or (n0, M) arrays (conv)")

    @property
    def dim(self) -> int:
        return self.x.size

    @property
    def is_conv(self) -> bool:
        return self.x.ndim == 2

    def conv_inner(self, k: int) -> np.ndarray:
        """Window inner products [x,x']_{a,a'} on the circular position grid."""
        _, m = self.x.shape
        out = np.zeros((m, m))
        for beta in range(-k, k + 1):
            xs = np.roll(self.x, -beta, axis=1)
            xps = np.roll(self.xp, -beta, axis=1)
            out += xs.T @ xps
        return out


@dataclass
class KernelTrace:
    """Per-depth record of one kernel recursion.

    Arrays have length L for dense kernels and shape (L, M, M) for full-grid
    conv kernels.  ``qdot`` at layer 1 is NaN (there is no previous layer).
    ``ntk_log``/``ntk_sign`` and ``log_qx``/``log_qxp`` stay finite even when
    the raw values overflow (residual kernels grow geometrically).
    """

    architecture: Architecture
    activation: str
    params: InitParams
    depth: int
    qx: np.ndarray
    qxp: np.ndarray
    qcov: np.ndarray
    corr: np.ndarray
    qdot: np.ndarray
    ntk: np.ndarray
    log_qx: np.ndarray
    log_qxp: np.ndarray
    ntk_log: np.ndarray
    ntk_sign: np.ndarray
    overflow: bool = False
    extras: dict = field(default_factory=dict)


def first_layer_dense(pair: InputPair, params: InitParams):
    """q^1 triplet for a dense first layer: sigma_b^2 + sigma_w^2 (u.v)/d."""
    d = pair.dim
    sb2, sw2 = params.sigma_b**2, params.sigma_w**2
    qx = sb2 + sw2 * float(pair.x @ pair.x) / d
    qxp = sb2 + sw2 * float(pair.xp @ pair.xp) / d
    qcov = sb2 + sw2 * float(pair.x @ pair.xp) / d
    return qx, qxp, qcov


# ---------------------------------------------------------------------------
# dense recursions, vectorized over P pairs
# ---------------------------------------------------------------------------

def dense_layer_arrays(kind: str, activation: ActivationModel, params: InitParams,
                       qx0, qxp0, qcov0, L: int) -> dict:
    """Run a dense kernel recursion from first-layer covariances.

    Returns per-layer arrays of shape (L, P): qx, qxp, qcov, corr, qdot, ntk,
    log_qx, log_qxp, ntk_log, ntk_sign, plus an ``overflow`` flag.  Residual
    recursions are computed in a rescaled space so the log outputs remain
    finite at any depth.
    """
    if kind not in _DENSE_KINDS:
        raise ValueError(f"not a dense kind: {kind}")
    if kind != "ffnn" and activation.kind != "relu":
        raise ValueError("residual kernels are defined for relu only")
    qx0 = np.atleast_1d(np.asarray(qx0, dtype=np.float64))
    qxp0 = np.atleast_1d(np.asarray(qxp0, dtype=np.float64))
    qcov0 = np.atleast_1d(np.asarray(qcov0, dtype=np.float64))
    P = qx0.size
    sb2, sw2 = params.sigma_b**2, params.sigma_w**2
    alpha = sw2 / 2.0
    beta = 1.0 + alpha  # residual per-layer variance growth factor

    out = {name: np.empty((L, P)) for name in
           ("qx", "qxp", "qcov", "corr", "qdot", "ntk",
            "log_qx", "log_qxp", "ntk_log", "ntk_sign")}
    overflow = False

    # scaled-space state: raw = value * exp(scale_log)
    vx, vxp, vcov = qx0.copy(), qxp0.copy(), qcov0.copy()
    wK = qcov0.copy()
    scale_log = 0.0

    def record(layer_idx, qdot_vals):
        s = np.exp(scale_log) if scale_log < 700 else np.inf
        c = _layer_correlation(vcov, vx, vxp)
        out["qx"][layer_idx] = vx * s
        out["qxp"][layer_idx] = vxp * s
        out["qcov"][layer_idx] = vcov * s
        out["corr"][layer_idx] = c
        out["qdot"][layer_idx] = qdot_vals
        out["ntk"][layer_idx] = wK * s
        out["log_qx"][layer_idx] = np.log(vx) + scale_log
        out["log_qxp"][layer_idx] = np.log(vxp) + scale_log
        out["ntk_log"][layer_idx] = np.log(np.abs(wK)) + scale_log
        out["ntk_sign"][layer_idx] = np.sign(wK)

    # the chaotic-ReLU regime deliberately saturates raw values to inf once
    # the 1e300 flag trips (the log-space fields stay exact); silence the
    # resulting IEEE warnings for the recursion
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        record(0, np.full(P, np.nan))
        for layer in range(2, L + 1):
            c = _layer_correlation(vcov, vx, vxp)
            sb2_scaled = sb2 * np.exp(-scale_log) if scale_log < 700 else 0.0
            if kind == "ffnn":
                qdot = sw2 * phiprime_expectation(activation, vx, vxp, c)
                cov_new = sb2_scaled + sw2 * phiphi_expectation(activation, vx, vxp, c)
                vx_new = sb2_scaled + sw2 * _diag_expectation(activation, vx)
                vxp_new = sb2_scaled + sw2 * _diag_expectation(activation, vxp)
                wK = qdot * wK + cov_new
                vx, vxp, vcov = vx_new, vxp_new, cov_new
                if np.max(vx) > _OVERFLOW_LIMIT or np.max(vxp) > _OVERFLOW_LIMIT:
                    # chaotic ReLU: renormalize so the recursion keeps running
                    overflow = True
                    shift = float(np.log(max(np.max(vx), np.max(vxp))))
                    scale_log += shift
                    f = np.exp(-shift)
                    vx, vxp, vcov, wK = vx * f, vxp * f, vcov * f, wK * f
            elif kind == "resnet_dense":
                # state is raw/beta^{l-2}; a layer multiplies the scale by beta
                qdot = alpha * relu_f_prime(c)
                block = sb2_scaled / beta + (alpha / beta) * np.sqrt(vx * vxp) * relu_f(c)
                wK = wK * (1.0 + qdot) / beta + block
                vcov = vcov / beta + block
                vx = vx + sb2_scaled / beta
                vxp = vxp + sb2_scaled / beta
                scale_log += np.log(beta)
            else:  # scaled_resnet_dense
                al = sw2 / (2.0 * layer)
                qdot = al * relu_f_prime(c)
                block = (sb2_scaled + alpha * np.sqrt(vx * vxp) * relu_f(c)) / layer
                wK = wK * (1.0 + qdot) + block
                vcov = vcov + block
                vx = vx * (1.0 + al) + sb2_scaled / layer
                vxp = vxp * (1.0 + al) + sb2_scaled / layer
            record(layer - 1, qdot)

    out["overflow"] = overflow
    return out


def _trace_from_arrays(arch: Architecture, activation: ActivationModel,
                       params: InitParams, L: int, arrays: dict,
                       squeeze: bool) -> KernelTrace:
    def pick(name):
        a = arrays[name]
        return a[:, 0] if squeeze else a

    return KernelTrace(
        architecture=arch,
        activation=activation.kind,
        params=params,
        depth=L,
        qx=pick("qx"), qxp=pick("qxp"), qcov=pick("qcov"),
        corr=pick("corr"), qdot=pick("qdot"), ntk=pick("ntk"),
        log_qx=pick("log_qx"), log_qxp=pick("log_qxp"),
        ntk_log=pick("ntk_log"), ntk_sign=pick("ntk_sign"),
        overflow=arrays["overflow"],
    )


def ntk_ffnn(pair: InputPair, activation: ActivationModel, params: InitParams,
             L: int) -> KernelTrace:
    """Depth-L feedforward NTK trace for one input pair."""
    if L < 1:
        raise ValueError("depth must be >= 1")
    if pair.is_conv:
        raise ValueError("ntk_ffnn expects dense inputs")
    qx, qxp, qcov = first_layer_dense(pair, params)
    arrays = dense_layer_arrays("ffnn", activation, params, qx, qxp, qcov, L)
    arch = Architecture(kind="ffnn")
    return _trace_from_arrays(arch, activation, params, L, arrays, squeeze=True)


def ntk_resnet_dense(pair: InputPair, activation: ActivationModel,
                     params: InitParams, L: int) -> KernelTrace:
    """Depth-L residual NTK trace (dense blocks, first layer without skip)."""
    if L < 1:
        raise ValueError("depth must be >= 1")
    qx, qxp, qcov = first_layer_dense(pair, params)
    arrays = dense_layer_arrays("resnet_dense", activation, params, qx, qxp, qcov, L)
    arch = Architecture(kind="resnet_dense")
    return _trace_from_arrays(arch, activation, params, L, arrays, squeeze=True)


def ntk_scaled_resnet(pair: InputPair, params: InitParams, L: int,
                      activation: ActivationModel | None = None,
                      conv: Architecture | None = None) -> KernelTrace:
    """Depth-L NTK of the 1/sqrt(l)-scaled residual network (ReLU blocks)."""
    from .gaussmath import default_hermite
    act = activation or ActivationModel("relu", default_hermite())
    if act.kind != "relu":
        raise ValueError("scaled residual kernels are defined for relu only")
    if conv is not None:
        return _conv_trace(pair, act, params,
                           conv.positions, conv.filter_half_width, L,
                           kind="scaled_resnet_conv", assumption1=conv.assumption1)
    if L < 1:
        raise ValueError("depth must be >= 1")
    qx, qxp, qcov = first_layer_dense(pair, params)
    arrays = dense_layer_arrays("scaled_resnet_dense", act, params, qx, qxp, qcov, L)
    arch = Architecture(kind="scaled_resnet_dense")
    return _trace_from_arrays(arch, act, params, L, arrays, squeeze=True)


# ---------------------------------------------------------------------------
# convolutional recursions (full (alpha, alpha') grids, circular indexing)
# ---------------------------------------------------------------------------

def _circulant_average(grid: np.ndarray, k: int) -> np.ndarray:
    """(1/(2k+1)) sum_beta grid[a+beta, a'+beta] with circular wraparound."""
    acc = np.zeros_like(grid)
    for beta in range(-k, k + 1):
        acc += np.roll(np.roll(grid, -beta, axis=0), -beta, axis=1)
    return acc / (2 * k + 1)


def _grid_expectations(activation: ActivationModel, varx: np.ndarray,
                       varxp: np.ndarray, cov: np.ndarray, sb2, sw2):
    """qhat and qdot grids from position variances and a covariance grid."""
    v1 = varx[:, None] * np.ones_like(cov)
    v2 = np.ones_like(cov) * varxp[None, :]
    c = _layer_correlation(cov, v1, v2)
    qhat = sb2 + sw2 * phiphi_expectation(activation, v1, v2, c)
    qdot = sw2 * phiprime_expectation(activation, v1, v2, c)
    return qhat, qdot, c


def _conv_trace(pair: InputPair, activation: ActivationModel, params: InitParams,
                M: int, k: int, L: int, kind: str, assumption1: bool) -> KernelTrace:
    from .errors import AssumptionViolatedError

    if not pair.is_conv:
        raise ValueError("conv kernels need (n0, M) inputs")
    n0, m = pair.x.shape
    if m != M:
        raise ValueError(f"input has {m} positions, architecture expects {M}")
    arch = Architecture(kind=kind, positions=M, filter_half_width=k,
                        assumption1=assumption1)
    sb2, sw2 = params.sigma_b**2, params.sigma_w**2
    norm = n0 * (2 * k + 1)

    # first-layer covariance grids for the three input combinations
    Cxx = sb2 + sw2 * InputPair(pair.x, pair.x).conv_inner(k) / norm
    Cpp = sb2 + sw2 * InputPair(pair.xp, pair.xp).conv_inner(k) / norm
    Cxp = sb2 + sw2 * pair.conv_inner(k) / norm

    if assumption1:
        for name, g in (("q1(x,x)", Cxx), ("q1(x',x')", Cpp), ("q1(x,x')", Cxp)):
            if np.ptp(g) > 1e-9:
                raise AssumptionViolatedError(
                    f"first-layer grid {name} varies by {np.ptp(g):.2e} > 1e-9"
                )
        dense_kind = {"cnn": "ffnn", "resnet_conv": "resnet_dense",
                      "scaled_resnet_conv": "scaled_resnet_dense"}[kind]
        arrays = dense_layer_arrays(dense_kind, activation, params,
                                    Cxx[0, 0], Cpp[0, 0], Cxp[0, 0], L)
        return _trace_from_arrays(arch, activation, params, L, arrays, squeeze=True)

    residual = kind in ("resnet_conv", "scaled_resnet_conv")
    scaled = kind == "scaled_resnet_conv"
    K = Cxp.copy()

    shape = (L, M, M)
    out = {name: np.empty(shape) for name in
           ("qx", "qxp", "qcov", "corr", "qdot", "ntk",
            "log_qx", "log_qxp", "ntk_log", "ntk_sign")}

    def record(i, qdotg):
        out["qx"][i], out["qxp"][i], out["qcov"][i] = Cxx, Cpp, Cxp
        vx = np.diag(Cxx)[:, None] * np.ones((M, M))
        vp = np.ones((M, M)) * np.diag(Cpp)[None, :]
        out["corr"][i] = _layer_correlation(Cxp, vx, vp)
        out["qdot"][i] = qdotg
        out["ntk"][i] = K
        out["log_qx"][i] = np.log(vx)
        out["log_qxp"][i] = np.log(vp)
        with np.errstate(divide="ignore"):
            out["ntk_log"][i] = np.log(np.abs(K))
        out["ntk_sign"][i] = np.sign(K)

    record(0, np.full((M, M), np.nan))
    for layer in range(2, L + 1):
        scale = 1.0 / layer if scaled else 1.0
        qhat_xx, _, _ = _grid_expectations(activation, np.diag(Cxx), np.diag(Cxx), Cxx, sb2, sw2)
        qhat_pp, _, _ = _grid_expectations(activation, np.diag(Cpp), np.diag(Cpp), Cpp, sb2, sw2)
        qhat_xp, qdot_xp, _ = _grid_expectations(activation, np.diag(Cxx), np.diag(Cpp), Cxp, sb2, sw2)
        psi = qdot_xp * scale * K + qhat_xp * scale
        if residual:
            K = K + _circulant_average(psi, k)
            Cxx = Cxx + scale * _circulant_average(qhat_xx, k)
            Cpp = Cpp + scale * _circulant_average(qhat_pp, k)
            Cxp = Cxp + scale * _circulant_average(qhat_xp, k)
        else:
            K = _circulant_average(psi, k)
            Cxx = _circulant_average(qhat_xx, k)
            Cpp = _circulant_average(qhat_pp, k)
            Cxp = _circulant_average(qhat_xp, k)
        record(layer - 1, qdot_xp * scale)

    out["overflow"] = False
    trace = KernelTrace(
        architecture=arch, activation=activation.kind, params=params, depth=L,
        qx=out["qx"], qxp=out["qxp"], qcov=out["qcov"], corr=out["corr"],
        qdot=out["qdot"], ntk=out["ntk"], log_qx=out["log_qx"],
        log_qxp=out["log_qxp"], ntk_log=out["ntk_log"], ntk_sign=out["ntk_sign"],
    )
    return trace


def ntk_cnn(pair: InputPair, activation: ActivationModel, params: InitParams,
            M: int, k: int, L: int, assumption1: bool = False) -> KernelTrace:
    """Depth-L convolutional NTK trace (circular 1D geometry)."""
    return _conv_trace(pair, activation, params, M, k, L, "cnn", assumption1)


def ntk_resnet_conv(pair: InputPair, params: InitParams, M: int, k: int, L: int,
                    assumption1: bool = False,
                    activation: ActivationModel | None = None) -> KernelTrace:
    """Depth-L convolutional residual NTK trace (ReLU blocks)."""
    from .gaussmath import default_hermite
    act = activation or ActivationModel("relu", default_hermite())
    if act.kind != "relu":
        raise ValueError("residual kernels are defined for relu only")
    return _conv_trace(pair, act, params, M, k, L, "resnet_conv", assumption1)


# ---------------------------------------------------------------------------
# normalization and limits
# ---------------------------------------------------------------------------

_SCHEMES = {
    "average": ("ffnn", "cnn"),
    "resnet": ("resnet_dense", "resnet_conv"),
    "scaled": ("scaled_resnet_dense", "scaled_resnet_conv"),
}


def normalize(trace: KernelTrace, scheme: str) -> np.ndarray:
    """Per-layer normalized kernel K^l / alpha_l.

    alpha_l is l (average), l (1+sigma_w^2/2)^{l-1} (resnet, computed in
    log space), or l^{1+sigma_w^2/2} (scaled).
    """
    if scheme not in _SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if trace.architecture.kind not in _SCHEMES[scheme]:
        raise ValueError(
            f"scheme {scheme!r} does not apply to {trace.architecture.kind!r}"
        )
    L = trace.depth
    ls = np.arange(1, L + 1, dtype=np.float64)
    if trace.ntk_log.ndim > 1:
        ls = ls.reshape((L,) + (1,) * (trace.ntk_log.ndim - 1))
    if scheme == "average":
        log_alpha = np.log(ls)
    elif scheme == "resnet":
        beta = 1.0 + trace.params.sigma_w**2 / 2.0
        log_alpha = np.log(ls) + (ls - 1.0) * np.log(beta)
    else:
        log_alpha = (1.0 + trace.params.sigma_w**2 / 2.0) * np.log(ls)
    return trace.ntk_sign * np.exp(trace.ntk_log - log_alpha)


def scaled_resnet_growth_constant(params: InitParams, depth: int = 10**6) -> float:
    """lim prod_{k=2}^{L}(1 + sigma_w^2/2k) / L^{sigma_w^2/2}.

    The scaled-residual variance product grows like this constant times
    L^{sigma_w^2/2}; used when forming depth-compensated references.
    """
    h = params.sigma_w**2 / 2.0
    ks = np.arange(2, depth + 1, dtype=np.float64)
    log_prod = np.sum(np.log1p(h / ks))
    return float(np.exp(log_prod - h * np.log(depth)))


def limiting_kernel(architecture: Architecture, activation: ActivationModel,
                    params: InitParams, pair: InputPair) -> float:
    """Limiting value of the normalized kernel for the pair.

    Critical feedforward initializations: the depth-averaged kernel K^L/L
    converges, off the diagonal, to q_lim/(1+a) where q_lim is the limit of
    the per-layer additive covariance and a is the leading 1/l coefficient
    of the multiplier (a = 3 for ReLU, a = 2 for Tanh); on the diagonal the
    multiplier is exactly 1 and the limit is q_lim itself.  Residual
    kernels follow the same pattern in the (1+sigma_w^2/2)^{l-1}-rescaled
    space, where the block covariance converges to
    (alpha/(1+alpha)) sqrt(v_inf(x) v_inf(x')) with
    v_inf(u) = q^1(u,u) + sigma_b^2/alpha.  Ordered/chaotic feedforward
    initializations converge to the constant q_inf/(1 - qdot_inf).
    """
    if pair.is_conv:
        raise ValueError("limiting_kernel expects dense inputs (use Assumption 1)")
    same = np.array_equal(pair.x, pair.xp)
    qx1, qxp1, _ = first_layer_dense(pair, params)
    sw2 = params.sigma_w**2
    alpha = sw2 / 2.0
    d = pair.dim

    if architecture.kind in ("resnet_dense", "resnet_conv"):
        v_inf_x = qx1 + (params.sigma_b**2 / alpha if params.sigma_b > 0 else 0.0)
        v_inf_xp = qxp1 + (params.sigma_b**2 / alpha if params.sigma_b > 0 else 0.0)
        q_lim = (alpha / (1.0 + alpha)) * np.sqrt(v_inf_x * v_inf_xp)
        return float(q_lim) if same else float(q_lim / 4.0)

    if architecture.kind in ("scaled_resnet_dense", "scaled_resnet_conv"):
        # limit of K^L / (L^{sigma_w^2/2} log L): block sums are
        # (sigma_w^2/2k)/(1+sigma_w^2/2k) per layer, harmonic in k.
        c_pi = scaled_resnet_growth_constant(params)
        q_lim = alpha * c_pi * np.sqrt(qx1 * qxp1)
        return float(q_lim) if same else float(q_lim / 4.0)

    report = classify(activation, params, input_variance=qx1)
    if report.phase == "eoc":
        if activation.kind == "relu":
            norm_x = float(np.linalg.norm(pair.x))
            norm_xp = float(np.linalg.norm(pair.xp))
            q_lim = sw2 * norm_x * norm_xp / d
            return q_lim if same else q_lim / 4.0
        q = report.q_fixed
        return float(q) if same else float(q / 3.0)
    if report.phase == "chaotic" and activation.kind == "relu":
        raise DivergenceError("chaotic ReLU NTK diverges")
    # ordered (or chaotic tanh): K^L -> q c* / (1 - f'(c*)), where c* is the
    # stable fixed point of the correlation map (1 in the ordered phase) and
    # f'(c*) = sigma_w^2 E[phi' phi'] is the limiting kernel multiplier.
    q = report.q_fixed
    if report.phase == "ordered":
        c_star = 1.0
        qdot_inf = report.chi
    else:
        # the chaotic constant only applies to pairs whose first-layer
        # correlation is bounded away from 1 (default margin 1e-3): on the
        # diagonal the multiplier is chi > 1 and the kernel diverges
        if same:
            raise DivergenceError(
                "chaotic diagonal kernel grows like chi^L; no finite limit"
            )
        qx1_, qxp1_, qcov1_ = first_layer_dense(pair, params)
        c1 = qcov1_ / np.sqrt(qx1_ * qxp1_)
        if c1 > 1.0 - 1e-3:
            raise ValueError(
                "chaotic-phase limit needs first-layer correlation <= 1 - 1e-3"
            )
        c_star = stable_correlation_fixed_point(activation, params, q)
        qdot_inf = sw2 * phiprime_expectation(activation, q, q, c_star)
    if qdot_inf >= 1.0:
        raise DivergenceError("kernel multiplier does not contract")
    return float(q * c_star / (1.0 - qdot_inf))


def stable_correlation_fixed_point(activation: ActivationModel,
                                   params: InitParams, q: float) -> float:
    """Stable fixed point c* < 1 of the chaotic-phase correlation map."""
    sb2, sw2 = params.sigma_b**2, params.sigma_w**2
    c = 0.0
    for _ in range(100_000):
        c_new = (sb2 + sw2 * phiphi_expectation(activation, q, q, c)) / q
        c_new = float(clamp_correlation(c_new))
        if abs(c_new - c) < 1e-15:
            return c_new
        c = c_new
    raise DivergenceError("correlation map did not reach its stable fixed point")
