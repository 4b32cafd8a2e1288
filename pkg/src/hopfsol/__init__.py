"""Rotationally symmetric Hopf solitons of mean curvature flow in S^{2n+1}.

The package integrates the planar profile system, builds the reflect-and-glue
soliton that wraps a Clifford torus at both ends, and checks the curvature
identities of the resulting hypersurfaces by finite differences.
"""

from hopfsol.phase import (
    DomainError,
    EquilibriumInfo,
    PhasePoint,
    SolitonParams,
    clifford_radii,
    equilibrium,
    g_of,
    polar_angle_rate,
    vector_field,
    zeta,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "EquilibriumInfo",
    "PhasePoint",
    "SolitonParams",
    "clifford_radii",
    "equilibrium",
    "g_of",
    "polar_angle_rate",
    "vector_field",
    "zeta",
    "__version__",
]
