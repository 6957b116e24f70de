"""Scattering theory and dispersive decay for Jacobi operators with compact perturbations."""

from .lattice import JacobiOperator, NormKind, WindowedKernel, kernel_norm, load_operator
from .scattering import detect_resonances, scattering_matrix
from .evolution import PropagatorRequest, decay_fit, propagator_oscillatory, propagator_spectral

__all__ = [
    "JacobiOperator",
    "NormKind",
    "WindowedKernel",
    "kernel_norm",
    "load_operator",
    "detect_resonances",
    "scattering_matrix",
    "PropagatorRequest",
    "decay_fit",
    "propagator_oscillatory",
    "propagator_spectral",
]

__version__ = "0.1.0"
