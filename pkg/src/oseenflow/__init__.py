"""
Integral-equation Navier-Stokes solver on a truncated periodic box.

Closed-form Oseen-type kernels, a pseudo-spectral Picard/Duhamel solver
marching in contraction windows, and diagnostics for the norms, energy
budget and a-priori bounds of the computed flows.
"""

__version__ = "0.1.0"

from .fields import (  # noqa: E402
    GridSpec,
    ScalarField,
    SpectralField,
    VectorField,
    derivative,
    divergence,
    forward_transform,
    heat_propagate,
    inverse_transform,
    leray_project,
    nonlinear_term,
)
from .solver import (  # noqa: E402
    Scenario,
    SolutionTrajectory,
    SolverConfig,
    assemble_F,
    duhamel_apply,
    estimate_window,
    march,
    picard_iterate,
    recover_pressure,
)

__all__ = [
    "__version__",
    "GridSpec",
    "ScalarField",
    "SpectralField",
    "VectorField",
    "derivative",
    "divergence",
    "forward_transform",
    "heat_propagate",
    "inverse_transform",
    "leray_project",
    "nonlinear_term",
    "Scenario",
    "SolutionTrajectory",
    "SolverConfig",
    "assemble_F",
    "duhamel_apply",
    "estimate_window",
    "march",
    "picard_iterate",
    "recover_pressure",
]
