"""Ambient profile curve and hypersurface geometry from phase data.

A solution (u, v) of the phase system generates the curve
gamma = (u, y, z) on S^2 with u = cos r, y = sin r sin(theta), z = sin r cos(theta)
and the rotational hypersurface f(p, s) = (u(s) p; y(s), z(s)) of S^{2n+1}.
The angle theta is recovered by quadrature of theta' = +-g / (1 - u^2).

Everything here is vectorized over samples: a :class:`ProfileCurve` stores
one array per column, and :meth:`ProfileCurve.sample` gives a row view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import NamedTuple, Optional

import numpy as np

from hopfsol.integrator import Trajectory
from hopfsol.phase import SolitonParams, equilibrium

G_MIN = 1e-6
SOLITON_TOL = 1e-7
POLE_EPS = 1e-14

COLUMNS = (
    "s", "u", "v", "g", "r", "theta_amb", "y", "z",
    "lambda_tan", "lambda_prof", "H", "normA2", "traceless2", "drift_a",
)


class SingularityError(ValueError):
    """lambda_prof requested at g = 0 with the soliton fallback disabled."""


class SolitonResidualError(ValueError):
    """Trace of the shape operator disagrees with -u': not a soliton profile."""


class ReconstructionError(ValueError):
    pass


class ProfileSample(NamedTuple):
    s: float
    u: float
    v: float
    g: float
    r: float
    theta_amb: float
    y: float
    z: float
    lambda_tan: float
    lambda_prof: float
    H: float
    normA2: float
    traceless2: float
    drift_a: float
    upp: float
    dy: float
    dz: float


@dataclass(frozen=True, eq=False)
class ProfileCurve:
    """Column arrays of a reconstructed profile.

    Besides the tabulated columns it keeps u'' (``upp``, from the vector
    field) and the analytic y', z' (``dy``, ``dz``) for the normal vector and
    the identity checks.
    """

    params: SolitonParams
    theta_sign: int
    s: np.ndarray
    u: np.ndarray
    v: np.ndarray
    g: np.ndarray
    r: np.ndarray
    theta_amb: np.ndarray
    y: np.ndarray
    z: np.ndarray
    lambda_tan: np.ndarray
    lambda_prof: np.ndarray
    H: np.ndarray
    normA2: np.ndarray
    traceless2: np.ndarray
    drift_a: np.ndarray
    upp: np.ndarray
    dy: np.ndarray
    dz: np.ndarray

    def __len__(self):
        return len(self.s)

    def sample(self, i: int) -> ProfileSample:
        return ProfileSample(*(float(getattr(self, f)[i]) for f in ProfileSample._fields))

    def table(self) -> dict[str, np.ndarray]:
        return {c: getattr(self, c) for c in COLUMNS}

    def _arrays(self):
        return [f.name for f in fields(self) if f.name not in ("params", "theta_sign")]

    def take(self, idx) -> "ProfileCurve":
        return replace(self, **{k: getattr(self, k)[idx] for k in self._arrays()})

    def where(self, mask) -> "ProfileCurve":
        return self.take(np.flatnonzero(mask))

    @property
    def spacing(self) -> float:
        return float(np.median(np.diff(self.s)))

    @classmethod
    def concatenate(cls, parts: list["ProfileCurve"]) -> "ProfileCurve":
        first = parts[0]
        return replace(first, **{k: np.concatenate([getattr(p, k) for p in parts]) for k in first._arrays()})


def vector_field_q(params: SolitonParams, u, v, g):
    """Q with g supplied (possibly signed); equals u'' on solutions."""
    m = 2 * params.n - 1
    return m * g * g / u - v * g - u


def principal_curvatures(params: SolitonParams, u, v, g, upp=None, *, g_min: float = G_MIN, fallback: bool = True):
    """(lambda_tan, lambda_prof) = (-g/u, (u'' + u)/g).

    ``upp`` defaults to Q(u, v, g).  Where 0 < |g| < g_min the 0/0 quotient
    is replaced by the exact soliton identity lambda_prof = -u' - (2n-1)
    lambda_tan.  A sample with g exactly 0 lies on the boundary circle, where
    the profile runs along a great circle and lambda_prof is 0.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    g = np.asarray(g, dtype=float)
    m = 2 * params.n - 1
    if np.any(u <= 0):
        raise ValueError("principal curvatures need u > 0")
    upp = vector_field_q(params, u, v, g) if upp is None else np.asarray(upp, dtype=float)
    lam_tan = -g / u
    small = np.abs(g) < g_min
    if np.any(small) and not fallback:
        raise SingularityError("g below g_min and the soliton fallback is disabled")
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_prof = np.where(small, -v - m * lam_tan, (upp + u) / np.where(small, 1.0, g))
    lam_prof = np.where(g == 0.0, 0.0, lam_prof)
    return lam_tan, lam_prof


def mean_and_norms(params: SolitonParams, lam_tan, lam_prof, v=None, *, tol: float = SOLITON_TOL):
    """(H, |A|^2, |traceless A|^2); checks H = -v when v is given."""
    m = 2 * params.n - 1
    H = m * lam_tan + lam_prof
    A2 = m * lam_tan**2 + lam_prof**2
    T2 = A2 - H**2 / (2 * params.n)
    if v is not None:
        bad = np.abs(H + np.asarray(v)) > tol
        if np.any(bad):
            i = int(np.flatnonzero(np.atleast_1d(bad))[0])
            err = float(np.max(np.abs(H + np.asarray(v))))
            raise SolitonResidualError(f"|H + v| = {err:.3e} exceeds {tol:g} (first at sample {i})")
    return H, A2, T2


def normal_vector(u, y, z, du, dy, dz):
    """Unit normal (c_p, c_y, c_z) of the hypersurface along the profile.

    The full normal at f(p, s) is (c_p p; c_y, c_z).  This is minus the cross
    product gamma x gamma'.
    """
    return dy * z - y * dz, u * dz - du * z, du * y - u * dy


def soliton_residual(params: SolitonParams, u, v, g=None, upp=None):
    """u u'' + (2n-1) u'^2 + 2n u^2 - (2n-1) + u u' g, with u'' = Q(u, v, g).

    ``g`` defaults to sqrt(1 - u^2 - v^2).  Substituting u'' = Q makes the
    expression (2n-1)(g^2 + u^2 + v^2 - 1), so on integrated data with g
    carried as its own unknown it measures how well g and (u, v) agree.
    """
    n = params.n
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if g is None:
        g = np.sqrt(np.maximum(0.0, 1.0 - u * u - v * v))
    g = np.asarray(g, dtype=float)
    upp = vector_field_q(params, u, v, g) if upp is None else upp
    return u * upp + (2 * n - 1) * v * v + 2 * n * u * u - (2 * n - 1) + u * v * g


def _theta_rate(params, u, v, g, theta_sign):
    """theta' and theta'' along the flow; g may be signed."""
    m = 2 * params.n - 1
    one_minus = (1.0 - u) * (1.0 + u)
    pole = one_minus <= POLE_EPS
    safe = np.where(pole, 1.0, one_minus)
    f = np.where(pole, 0.0, g / safe)
    gp = v * v - m * v * g / u
    fp = np.where(pole, 0.0, gp / safe + 2.0 * u * v * g / safe**2)
    return theta_sign * f, theta_sign * fp, pole


def _pole_slopes(s, f, fp, pole):
    """theta' is linear in s through the pole, so a one-sided difference
    quotient gives theta'' there to O(h^2)."""
    for i in np.flatnonzero(pole):
        j = i + 1 if i + 1 < len(s) else i - 1
        if j >= 0 and j != i:
            fp[i] = (f[j] - f[i]) / (s[j] - s[i])
    return fp


def _quadrature(s, f, fp, theta0):
    """Corrected trapezoid (Hermite) rule, fourth order on any grid."""
    h = np.diff(s)
    inc = 0.5 * h * (f[:-1] + f[1:]) + h * h / 12.0 * (fp[:-1] - fp[1:])
    return theta0 + np.concatenate([[0.0], np.cumsum(inc)])


def profile_from_phase(
    params: SolitonParams,
    s,
    u,
    v,
    g,
    theta,
    theta_sign: int = 1,
    *,
    check: bool = True,
    g_min: float = G_MIN,
) -> ProfileCurve:
    """Assemble all columns from phase data and an ambient angle.

    ``g`` carries the orientation: theta' = theta_sign * g / (1 - u^2).  The
    stored g column is its magnitude.
    """
    s, u, v, g, theta = (np.asarray(x, dtype=float) for x in (s, u, v, g, theta))
    sin_r = np.sqrt(np.maximum(0.0, (1.0 - u) * (1.0 + u)))
    r = np.arctan2(sin_r, u)
    f, _, _ = _theta_rate(params, u, v, g, theta_sign)
    pole = sin_r <= math.sqrt(POLE_EPS)
    # r' = -v / sin r; leaving the pole the curve moves away at unit speed
    dr = np.where(pole, 1.0, -v / np.where(pole, 1.0, sin_r))
    st, ct = np.sin(theta), np.cos(theta)
    y, z = sin_r * st, sin_r * ct
    dy = u * dr * st + sin_r * ct * f
    dz = u * dr * ct - sin_r * st * f
    upp = vector_field_q(params, u, v, g)
    lam_tan, lam_prof = principal_curvatures(params, u, v, g, upp, g_min=g_min)
    H, A2, T2 = mean_and_norms(params, lam_tan, lam_prof, v if check else None)
    drift = z * dy - y * dz
    return ProfileCurve(
        params=params, theta_sign=theta_sign,
        s=s, u=u, v=v, g=np.abs(g), r=r, theta_amb=theta, y=y, z=z,
        lambda_tan=lam_tan, lambda_prof=lam_prof, H=H, normA2=A2, traceless2=T2,
        drift_a=drift, upp=upp, dy=dy, dz=dz,
    )


def reconstruct_profile(
    params: SolitonParams,
    traj: Trajectory,
    theta_sign: int = 1,
    *,
    theta0: float = 0.0,
    signed_g: bool = False,
    check: bool = True,
) -> ProfileCurve:
    """Profile curve of a trajectory with theta(s_first) = theta0.

    By default theta' = theta_sign * |g| / (1 - u^2).  With ``signed_g`` the
    trajectory's own (lifted, possibly negative) g is used instead, which is
    what keeps the curve smooth through the pole.
    """
    if theta_sign not in (1, -1):
        raise ValueError("theta_sign must be +1 or -1")
    u, v = traj.u, traj.v
    if np.any(u[1:] >= 1.0):
        i = int(np.flatnonzero(u[1:] >= 1.0)[0]) + 1
        raise ReconstructionError(f"u >= 1 at interior sample {i} (s = {traj.s[i]:g})")
    f, fp, pole = _theta_rate(params, u, v, traj.g, theta_sign)
    g = traj.g
    if not signed_g:
        # |g| has derivative sign(g) g'
        sgn = np.where(traj.g < 0.0, -1.0, 1.0)
        f, fp, g = sgn * f, sgn * fp, np.abs(traj.g)
    fp = _pole_slopes(traj.s, f, fp, pole)
    theta = _quadrature(traj.s, f, fp, theta0)
    return profile_from_phase(params, traj.s, u, v, g, theta, theta_sign, check=check)


def clifford_profile(params: SolitonParams, s_max: float = 10.0, h: float = 1e-3, theta_sign: int = 1) -> ProfileCurve:
    """Constant profile at the equilibrium: the Clifford torus T_{2n-1,1}."""
    un = equilibrium(params).point.u
    k = int(round(s_max / h))
    s = h * np.arange(k + 1)
    u = np.full_like(s, un)
    v = np.zeros_like(s)
    g = np.full_like(s, math.sqrt(1.0 / (2 * params.n)))
    theta = theta_sign * math.sqrt(2 * params.n) * s
    return profile_from_phase(params, s, u, v, g, theta, theta_sign)


@dataclass(frozen=True)
class CompletenessReport:
    inf_u: float
    s_at_inf: float
    warp_values: np.ndarray

    def __iter__(self):
        return iter((self.inf_u, self.warp_values))


def metric_completeness_report(curve: ProfileCurve) -> CompletenessReport:
    """inf u over the curve; > 0 means ds^2 + u^2 g_S is nondegenerate there."""
    if len(curve) == 0:
        raise ValueError("empty profile")
    i = int(np.argmin(curve.u))
    return CompletenessReport(float(curve.u[i]), float(curve.s[i]), curve.u.copy())


def _central4(x, h):
    d = np.full_like(x, np.nan)
    d[2:-2] = (x[:-4] - 8.0 * x[1:-3] + 8.0 * x[3:-1] - x[4:]) / (12.0 * h)
    return d


def ambient_soliton_defect(curve: ProfileCurve) -> dict:
    """Soliton condition checked from the ambient curve alone.

    The profile-direction curvature is <nu, gamma''> with gamma'' from central
    differences of (u', y', z'); with the fiber curvature -c_p / u this gives
    an ambient mean curvature to compare with -v.  Unlike the tabulated H,
    this does not assume the phase equation.  Needs a uniform grid.
    """
    cp, cy, cz = normal_vector(curve.u, curve.y, curve.z, curve.v, curve.dy, curve.dz)
    h = np.diff(curve.s)
    if len(h) < 3 or np.ptp(h) > 1e-9 * abs(h[0]):
        raise ValueError("ambient check needs a uniform grid with at least 4 samples")
    h = float(h[0])
    d2 = [_central4(x, h) for x in (curve.v, curve.dy, curve.dz)]
    lam_prof = cp * d2[0] + cy * d2[1] + cz * d2[2]
    lam_tan = -cp / curve.u
    H_amb = (2 * curve.params.n - 1) * lam_tan + lam_prof
    inner = slice(2, -2)
    dev = np.abs(H_amb + curve.v)[inner]
    i = int(np.argmax(dev))
    return {
        "max_defect": float(dev[i]),
        "s_at_max": float(curve.s[inner][i]),
        "H_ambient": H_amb,
        "lambda_prof_ambient": lam_prof,
    }
