"""deepntk: infinite-width NTK engine for deep network architectures.

Computes exact depth-by-depth NTK recursions for feedforward, convolutional,
residual, and depth-scaled residual networks; classifies initializations by
their signal-propagation phase; verifies the depth-asymptotic convergence
laws and their exact constants; decomposes kernels into spherical harmonics;
solves the closed-form kernel-regime training problem; and validates the
mean-field recursions against exact finite-width Monte-Carlo kernels.
"""

__version__ = "0.1.0"

from .activations import ActivationModel, CorrelationMap, make_activation
from .gaussmath import QuadratureRule, gauss_hermite, gauss_jacobi
from .kernels import Architecture, InputPair, KernelTrace
from .phase import InitParams, PhaseReport, classify, eoc_curve

__all__ = [
    "ActivationModel", "Architecture", "CorrelationMap", "InitParams",
    "InputPair", "KernelTrace", "PhaseReport", "QuadratureRule",
    "__version__", "classify", "eoc_curve", "gauss_hermite", "gauss_jacobi",
    "make_activation",
]
