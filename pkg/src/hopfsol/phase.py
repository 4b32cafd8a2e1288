"""Planar phase system for rotational Hopf solitons.

A rotationally symmetric hypersurface of S^{2n+1} is generated by a profile
u(s) satisfying a second order ODE.  Writing v = u' turns it into the planar
system

    u' = P(u, v) = v
    v' = Q(u, v) = (2n-1)(1 - u^2 - v^2)/u - v*g - u,   g = sqrt(1 - u^2 - v^2)

on the half disc D = {u > 0, u^2 + v^2 < 1}.  This module holds the vector
field, its single equilibrium (the Clifford torus) and the scalar quantities
used to study trajectories.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

TOL_DOMAIN = 1e-9
TOL_R = 1e-12
# 1 - u^2 - v^2 carries a few ulp of rounding error; below this it counts as 0,
# otherwise sqrt would turn 1e-16 of noise into g ~ 1e-8 on the circle
W_FLOOR = 8 * np.finfo(float).eps


class DomainError(ValueError):
    """A phase point lies outside the closed half disc."""


class DegenerateInputError(ValueError):
    """Polar coordinates around the equilibrium are undefined (r too small)."""


class DomainWarning(RuntimeWarning):
    """1 - u^2 - v^2 went below -TOL_DOMAIN and was clamped to zero."""


@dataclass(frozen=True)
class SolitonParams:
    """Dimension parameter: the hypersurface is 2n-dimensional in S^{2n+1}."""

    n: int = 1

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))


class PhasePoint(NamedTuple):
    u: float
    v: float

    @classmethod
    def parse(cls, text: str) -> "PhasePoint":
        parts = [float(x) for x in text.split(",")]
        if len(parts) != 2:
            raise ValueError(f"expected 'u,v', got {text!r}")
        return cls(*parts)


@dataclass(frozen=True)
class EquilibriumInfo:
    point: PhasePoint
    jacobian: np.ndarray
    eigenvalues: tuple[complex, complex]

    @property
    def alpha(self) -> float:
        return self.eigenvalues[0].real

    @property
    def beta(self) -> float:
        return abs(self.eigenvalues[0].imag)

    @property
    def pseudo_period(self) -> float:
        return 2.0 * math.pi / self.beta


def _check_point(p) -> tuple[float, float]:
    u, v = float(p[0]), float(p[1])
    if not u > 0.0:
        raise DomainError(f"u must be positive, got u={u!r}")
    if u * u + v * v > 1.0 + TOL_DOMAIN:
        raise DomainError(f"u^2 + v^2 = {u * u + v * v!r} exceeds 1 + {TOL_DOMAIN}")
    return u, v


def g_of(p) -> float:
    """sqrt(1 - u^2 - v^2), clamped at zero.

    Values of 1 - u^2 - v^2 below -TOL_DOMAIN emit a DomainWarning instead of
    raising, so callers scanning near the circle still get a number.
    """
    u, v = float(p[0]), float(p[1])
    w = 1.0 - u * u - v * v
    if w < -TOL_DOMAIN:
        warnings.warn(f"1 - u^2 - v^2 = {w!r} is outside the closed disc", DomainWarning, stacklevel=2)
    return math.sqrt(w) if w > W_FLOOR else 0.0


def zeta(params: SolitonParams, p) -> float:
    """Monotone quantity u^{2n-1} g; nondecreasing along every trajectory."""
    return float(p[0]) ** (2 * params.n - 1) * g_of(p)


def vector_field(params: SolitonParams, p) -> tuple[float, float]:
    u, v = _check_point(p)
    w = 1.0 - u * u - v * v
    g = math.sqrt(w) if w > W_FLOOR else 0.0
    return v, (2 * params.n - 1) * (g * g) / u - v * g - u


def equilibrium(params: SolitonParams) -> EquilibriumInfo:
    n = params.n
    un = math.sqrt(1.0 - 1.0 / (2 * n))
    jac = np.array([[0.0, 1.0], [-4.0 * n, -1.0 / math.sqrt(2 * n)]])
    denom = 2.0 * math.sqrt(2 * n)
    alpha = -1.0 / denom
    beta = math.sqrt(32 * n * n - 1) / denom
    return EquilibriumInfo(
        point=PhasePoint(un, 0.0),
        jacobian=jac,
        eigenvalues=(complex(alpha, beta), complex(alpha, -beta)),
    )


def clifford_radii(params: SolitonParams) -> tuple[float, float]:
    """Radii of T_{2n-1,1} = S^{2n-1}(a) x S^1(b) inside R^{2n} x R^2."""
    n = params.n
    return math.sqrt((2 * n - 1) / (2 * n)), math.sqrt(1.0 / (2 * n))


def polar_coordinates(params: SolitonParams, p) -> tuple[float, float]:
    """(r, theta) with u = u_n + r cos(theta), v = r sin(theta); theta from atan2."""
    un = math.sqrt(1.0 - 1.0 / (2 * params.n))
    du, v = float(p[0]) - un, float(p[1])
    return math.hypot(du, v), math.atan2(v, du)


def polar_angle_rate(params: SolitonParams, p) -> float:
    """Rate theta' of the polar angle around the equilibrium along the flow."""
    u, v = _check_point(p)
    n = params.n
    un = math.sqrt(1.0 - 1.0 / (2 * n))
    r, theta = polar_coordinates(params, (u, v))
    if r < TOL_R:
        raise DegenerateInputError(f"r = {r!r} is below {TOL_R}: the angle is undefined at the equilibrium")
    w = 1.0 - u * u - v * v
    g2 = w if w > W_FLOOR else 0.0
    g = math.sqrt(g2)
    c, s = math.cos(theta), math.sin(theta)
    return -1.0 + (2 * n - 1) * (g2 / u) * (c / r) - g * s * c - un * c / r
