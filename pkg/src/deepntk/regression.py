"""Closed-form kernel-regime training dynamics and prediction.

With a quadratic loss, the infinite-width training dynamics of the network
outputs on the training set X are linear in the Gram matrix KH = K^L(X, X):

    f_t(X) = e^{-t KH / N} f_0(X) + (I - e^{-t KH / N}) Z,

and for a general input x,

    f_t(x) = f_0(x) + K^L(x, X) KH^{-1} (I - e^{-t KH / N}) (Z - f_0(X)).

Everything is computed through the symmetric eigendecomposition of KH;
no explicit inverse is formed.  Eigenvalues below 1e-12 of the largest are
treated as exactly zero (minimum-norm / pseudo-inverse behaviour, reported
via ``TrainingState.rank_deficient``).  The smallest eigenvalue controls the
convergence speed of f_t, and its collapse with depth is the mechanism by
which kernel-regime training fails for deep networks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activations import ActivationModel
from .errors import InvalidDatasetError, SingularMatrixError
from .kernels import Architecture, dense_layer_arrays
from .phase import InitParams

_PINV_RTOL = 1e-12


@dataclass(frozen=True)
class Dataset:
    """Inputs X (N, d) and targets Z (N, o); rows pairwise non-colinear."""

    X: np.ndarray
    Z: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        Z = np.asarray(self.Z, dtype=np.float64)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Z", Z)
        if X.ndim != 2 or Z.ndim != 2 or X.shape[0] != Z.shape[0]:
            raise InvalidDatasetError("X must be (N,d) and Z (N,o) with equal N")
        validate_no_colinearity(X)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def out_dim(self) -> int:
        return self.Z.shape[1]


def validate_no_colinearity(X: np.ndarray, tol: float = 1e-9) -> None:
    """Reject duplicate or colinear input rows (|cos angle| >= 1 - tol)."""
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0):
        raise InvalidDatasetError("zero input row")
    G = (X / norms[:, None]) @ (X / norms[:, None]).T
    np.fill_diagonal(G, 0.0)
    bad = np.argwhere(np.abs(G) >= 1.0 - tol)
    if bad.size:
        i, j = bad[0]
        raise InvalidDatasetError(f"rows {i} and {j} are colinear")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel used for the Gram matrix: architecture, activation, init, depth."""

    architecture: Architecture
    activation: ActivationModel
    params: InitParams
    depth: int


@dataclass
class TrainingState:
    """Eigendecomposition of the Gram matrix plus the f_t evaluator state."""

    gram: np.ndarray
    eigenvalues: np.ndarray   # nonincreasing
    eigenvectors: np.ndarray  # columns match eigenvalues
    f0_train: np.ndarray
    min_eig: float
    max_eig: float
    rank_deficient: bool

    @property
    def n(self) -> int:
        return self.gram.shape[0]


def kernel_values(spec: KernelSpec, qx, qxp, qcov) -> np.ndarray:
    """Depth-L kernel values from first-layer covariances (vectorized)."""
    arrays = dense_layer_arrays(spec.architecture.kind, spec.activation,
                                spec.params, qx, qxp, qcov, spec.depth)
    return arrays["ntk"][-1]


def build_gram(dataset: Dataset, spec: KernelSpec,
               f0_train: np.ndarray | None = None) -> TrainingState:
    """Assemble K^L(X, X) and its symmetric eigendecomposition.

    The infinite-width kernel is diagonal in the output channels, so the
    oN x oN block system reduces to one N x N matrix applied per channel.
    """
    X = dataset.X
    n, d = X.shape
    p = spec.params
    sb2, sw2 = p.sigma_b**2, p.sigma_w**2
    sq = sb2 + sw2 * np.sum(X * X, axis=1) / d
    iu, ju = np.triu_indices(n)
    qcov = sb2 + sw2 * (X[iu] * X[ju]).sum(axis=1) / d
    vals = kernel_values(spec, sq[iu], sq[ju], qcov)
    gram = np.zeros((n, n))
    gram[iu, ju] = vals
    gram = gram + gram.T - np.diag(np.diag(gram))
    eigvals, eigvecs = np.linalg.eigh(gram)
    order = np.argsort(eigvals)[::-1]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]
    f0 = np.zeros_like(dataset.Z) if f0_train is None else np.asarray(f0_train, dtype=np.float64)
    if f0.shape != dataset.Z.shape:
        raise ValueError("f0_train must match the target shape")
    max_eig = float(eigvals[0])
    min_eig = float(eigvals[-1])
    return TrainingState(
        gram=gram, eigenvalues=eigvals, eigenvectors=eigvecs, f0_train=f0,
        min_eig=min_eig, max_eig=max_eig,
        rank_deficient=bool(min_eig <= _PINV_RTOL * max_eig),
    )


def _decay_factors(state: TrainingState, t: float, n: int) -> np.ndarray:
    """e^{-t lambda / N} per eigenvalue; zeroed modes do not move."""
    lam = state.eigenvalues
    zero = lam <= _PINV_RTOL * state.max_eig
    if np.isinf(t):
        return np.where(zero, 1.0, 0.0)
    return np.where(zero, 1.0, np.exp(-t * lam / n))


def evolve(state: TrainingState, Z: np.ndarray, t: float) -> np.ndarray:
    """Training-set outputs f_t(X); t may be inf for the t -> oo limit."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    Z = np.asarray(Z, dtype=np.float64)
    U = state.eigenvectors
    decay = _decay_factors(state, t, state.n)
    A = U.T @ (state.f0_train - Z)
    return Z + U @ (decay[:, None] * A)


def _response_factors(state: TrainingState, t: float) -> np.ndarray:
    """(1 - e^{-t lambda / N}) / lambda per mode; zeroed modes contribute 0."""
    lam = state.eigenvalues
    zero = lam <= _PINV_RTOL * state.max_eig
    decay = _decay_factors(state, t, state.n)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.where(zero, 0.0, (1.0 - decay) / lam)
    return h


def predict(state: TrainingState, dataset: Dataset, spec: KernelSpec,
            x_new: np.ndarray, t: float, f0_new: np.ndarray | None = None,
            allow_singular: bool = True) -> np.ndarray:
    """f_t at a new input via the closed-form generalization formula."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if state.rank_deficient and not allow_singular:
        raise SingularMatrixError(
            "Gram matrix is numerically singular; pass allow_singular=True "
            "for the minimum-norm solution"
        )
    x_new = np.asarray(x_new, dtype=np.float64)
    X = dataset.X
    n, d = X.shape
    p = spec.params
    sb2, sw2 = p.sigma_b**2, p.sigma_w**2
    qx = np.full(n, sb2 + sw2 * float(x_new @ x_new) / d)
    qxp = sb2 + sw2 * np.sum(X * X, axis=1) / d
    qcov = sb2 + sw2 * (X @ x_new) / d
    k_vec = kernel_values(spec, qx, qxp, qcov)
    U = state.eigenvectors
    h = _response_factors(state, t)
    B = U.T @ (dataset.Z - state.f0_train)
    out = (k_vec @ U) @ (h[:, None] * B)
    if f0_new is not None:
        out = out + np.asarray(f0_new, dtype=np.float64)
    return out


def rkhs_residual_coeffs(state: TrainingState, Z: np.ndarray, t: float) -> np.ndarray:
    """Coefficients a with f_t(x) - f_0(x) = sum_i a_i K^L(x_i, x).

    a = KH^{-1} (I - e^{-t KH / N}) (Z - f_0(X)), through the
    eigendecomposition with the pseudo-inverse convention.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    Z = np.asarray(Z, dtype=np.float64)
    U = state.eigenvectors
    h = _response_factors(state, t)
    B = U.T @ (Z - state.f0_train)
    return U @ (h[:, None] * B)


def one_hot(labels: np.ndarray) -> np.ndarray:
    """Targets as one-hot rows; classes are the sorted unique labels."""
    labels = np.asarray(labels)
    classes = np.unique(labels)
    Z = np.zeros((labels.size, classes.size))
    for j, c in enumerate(classes):
        Z[labels == c, j] = 1.0
    return Z


def accuracy(predictions: np.ndarray, targets_onehot: np.ndarray) -> float:
    """Argmax classification accuracy."""
    return float(np.mean(
        np.argmax(predictions, axis=1) == np.argmax(targets_onehot, axis=1)
    ))
