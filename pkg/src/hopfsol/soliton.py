"""Reflect-and-glue construction of a complete rotational Hopf soliton.

The profile starts at the pole (u, v) = (1, 0) on the interior branch given by
the pole series, is integrated forward until it has settled on the Clifford
torus, and is then doubled across s = 0.  Two mirrors are available:

``reflection``
    (u, y, z)(-s) = (u, -y, z)(s), the reflection x_{2n+1} -> -x_{2n+1}.
    This is the default.
``rotation``
    (u, y, z)(-s) = (u, -y, -z)(s), the half turn in the (y, z) plane.  It
    commutes with the complex structure, and it is the analytic continuation
    of the profile through the pole.

The reflection reverses the complex structure, so on s < 0 it produces a
curve with H = +u' instead of H = -u'.  The tabulated columns cannot see
this because they are computed from the phase equation, but
:func:`hopfsol.profile.ambient_soliton_defect` recomputes H from the ambient
curve and exposes it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from hopfsol.integrator import (
    EQUILIBRIUM_REACHED,
    IntegratorConfig,
    Trajectory,
    boundary_start,
    integrate_forward,
    integrate_grid,
)
from hopfsol.phase import SolitonParams, clifford_radii, equilibrium
from hopfsol.profile import (
    ProfileCurve,
    ambient_soliton_defect,
    profile_from_phase,
    reconstruct_profile,
)
from hopfsol.series import pole_series

MIRRORS = ("reflection", "rotation")


class BuildError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


class ConvergenceNotFound(ValueError):
    pass


@dataclass(frozen=True)
class BuildConfig:
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    handoff: float = 0.25
    h: float = 1e-3
    clifford_tol: float = 1e-6
    tail_periods: float = 5.0
    min_half_range: float = 0.0
    theta_sign: int = 1
    mirror: str = "reflection"
    cross_validate: bool = True

    def __post_init__(self):
        if self.mirror not in MIRRORS:
            raise ValueError(f"mirror must be one of {MIRRORS}")
        if self.theta_sign not in (1, -1):
            raise ValueError("theta_sign must be +1 or -1")
        k = self.handoff / self.h
        if abs(k - round(k)) > 1e-9 or round(k) < 1:
            raise ValueError("handoff must be a positive multiple of the grid step")


@dataclass(frozen=True)
class CliffordConvergence:
    s_star: float
    index: int
    final_distance: float
    radii: tuple[float, float]
    clifford: tuple[float, float]


@dataclass(frozen=True)
class Diagnostics:
    clifford_s_star: float
    sign_changes: int
    winding: float
    symmetry_defect: float
    sup_normA2: float
    sup_normA2_s: float
    glue_curvature_norm: float
    terminal_distance: float
    half_range: float
    start_cross_validation: float
    ambient_soliton_defect: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True, eq=False)
class SolitonSurface:
    params: SolitonParams
    profile: ProfileCurve
    glue_index: int
    half: ProfileCurve
    trajectory: Trajectory
    grid: Trajectory
    diagnostics: Diagnostics
    config: BuildConfig


def detect_clifford_convergence(traj: Trajectory, tol: float = 1e-6) -> CliffordConvergence:
    """First sample after which the trajectory stays within ``tol`` of p_n."""
    d = traj.distance_to_equilibrium()
    outside = np.flatnonzero(d >= tol)
    if outside.size and outside[-1] == len(d) - 1:
        raise ConvergenceNotFound(f"final distance {d[-1]:.3e} is not below {tol:g}")
    i = int(outside[-1] + 1) if outside.size else 0
    u = float(traj.u[-1])
    return CliffordConvergence(
        s_star=float(traj.s[i]),
        index=i,
        final_distance=float(d[-1]),
        radii=(u, math.sqrt(max(0.0, 1.0 - u * u))),
        clifford=clifford_radii(traj.params),
    )


def count_sign_changes(data: Union[Trajectory, ProfileCurve, np.ndarray], deadband: float = 1e-10) -> int:
    """Sign changes of H = -v, ignoring samples with |v| <= deadband."""
    v = np.asarray(data.v if hasattr(data, "v") else data, dtype=float)
    signs = np.sign(v[np.abs(v) > deadband])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def tail_rates(traj: Trajectory, lo: float = 1e-7, hi: float = 1e-2) -> tuple[float, float]:
    """Least-squares slopes of log|rho - p_n| and of the polar angle over
    the stretch where lo < |rho - p_n| < hi."""
    d = traj.distance_to_equilibrium()
    m = (d > lo) & (d < hi)
    if np.count_nonzero(m) < 10:
        raise ValueError("too few tail samples for a rate fit")
    slope = np.polyfit(traj.s[m], np.log(d[m]), 1)[0]
    turn = np.polyfit(traj.s[m], traj.theta[m], 1)[0]
    return float(slope), float(turn)


def sup_normA2(surface: Union[SolitonSurface, ProfileCurve]) -> tuple[float, float, bool]:
    """(sup |A|^2, location s, whether it exceeds 2n beyond rounding)."""
    prof = surface.profile if isinstance(surface, SolitonSurface) else surface
    i = int(np.argmax(prof.normA2))
    val = float(prof.normA2[i])
    return val, float(prof.s[i]), val > 2 * prof.params.n + 1e-12


def _pole_grid(params, cfg: BuildConfig, s_end: float, sign: int = 1) -> Trajectory:
    """Series on |s| <= handoff, then grid-locked integration out to s_end."""
    ser = pole_series(params)
    h = cfg.h
    k = int(round(cfg.handoff / h))
    s_ser = sign * h * np.arange(k + 1)
    u, v, g = ser.state(s_ser)
    tail = integrate_grid(params, (u[-1], v[-1], g[-1]), s_ser[-1], s_end, h)
    un = equilibrium(params).point.u
    s = np.concatenate([s_ser, tail.s[1:]])
    uu = np.concatenate([u, tail.u[1:]])
    vv = np.concatenate([v, tail.v[1:]])
    gg = np.concatenate([g, tail.g[1:]])
    m = 2 * params.n - 1
    dv = np.zeros_like(uu)
    dv[1:] = m * gg[1:] ** 2 / uu[1:] - vv[1:] * gg[1:] - uu[1:]
    dv[0] = -1.0
    return Trajectory(
        params=params, s=s, u=uu, v=vv, g=gg, du=vv.copy(), dv=dv,
        theta=np.unwrap(np.arctan2(vv, uu - un)),
        direction="forward" if sign > 0 else "backward",
        termination=tail.termination,
        stats={"series_samples": k + 1, "g_carried": True},
    )


def mirror_profile(half: ProfileCurve, mirror: str = "reflection") -> ProfileCurve:
    """The s < 0 half obtained from the s >= 0 half by the chosen mirror."""
    if mirror not in MIRRORS:
        raise ValueError(f"mirror must be one of {MIRRORS}")
    idx = np.arange(len(half) - 1, 0, -1)
    s = -half.s[idx]
    u = half.u[idx]
    v = -half.v[idx]
    g = half.g[idx]
    if mirror == "reflection":
        theta = -half.theta_amb[idx]
        g_signed = g
    else:
        theta = half.theta_amb[idx] + math.pi
        g_signed = -g
    return profile_from_phase(half.params, s, u, v, g_signed, theta, half.theta_sign)


def symmetry_defect(profile: ProfileCurve, glue_index: int, mirror: str = "reflection") -> float:
    """Largest deviation from the mirror's parities across s = 0."""
    k = glue_index
    m = min(k, len(profile) - 1 - k)
    neg = np.arange(k - 1, k - 1 - m, -1)
    pos = np.arange(k + 1, k + 1 + m)
    zsign = 1.0 if mirror == "reflection" else -1.0
    devs = [
        np.abs(profile.s[neg] + profile.s[pos]),
        np.abs(profile.u[neg] - profile.u[pos]),
        np.abs(profile.v[neg] + profile.v[pos]),
        np.abs(profile.y[neg] + profile.y[pos]),
        np.abs(profile.z[neg] - zsign * profile.z[pos]),
    ]
    return float(max(np.max(d) for d in devs)) if m else 0.0


def build_soliton(params: SolitonParams, cfg: Optional[BuildConfig] = None) -> SolitonSurface:
    """Pole start, forward run to the Clifford torus, reconstruction, doubling.

    The profile is normalized by gamma(0) = (1, 0, 0) and gamma'(0) = (0, 1, 0);
    near the pole y ~ s sin(theta) and z ~ s cos(theta), so this needs
    theta(0) = pi/2.  The tabulated grid uses step ``cfg.h``: the pole series
    on [0, handoff], then fixed-step integration carrying g.
    """
    cfg = cfg or BuildConfig()
    ser = pole_series(params)
    try:
        start = boundary_start(params, (1.0, 0.0), "series", cfg.integrator, s_handoff=cfg.handoff, series=ser)
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage name
        raise BuildError("boundary_start", str(exc)) from exc

    cross = float("nan")
    if cfg.cross_validate:
        try:
            alt = boundary_start(params, (1.0, 0.0), "perturbation", cfg.integrator, s_handoff=cfg.handoff)
        except Exception as exc:  # noqa: BLE001
            raise BuildError("cross_validation", str(exc)) from exc
        cross = start_agreement(params, start.state, alt.state, cfg.handoff, cfg.integrator)

    fwd = integrate_forward(params, start.state, cfg.integrator, s0=cfg.handoff)
    if fwd.termination != EQUILIBRIUM_REACHED:
        raise BuildError("forward", f"ended with {fwd.termination} at s = {fwd.s[-1]:g}")
    try:
        conv = detect_clifford_convergence(fwd, cfg.clifford_tol)
    except ConvergenceNotFound as exc:
        raise BuildError("clifford_convergence", str(exc)) from exc

    period = equilibrium(params).pseudo_period
    S = max(conv.s_star + cfg.tail_periods * period, cfg.min_half_range, cfg.handoff + cfg.h)
    S = math.ceil(S / cfg.h - 1e-9) * cfg.h
    grid = _pole_grid(params, cfg, S)
    try:
        half = reconstruct_profile(params, grid, cfg.theta_sign, theta0=math.pi / 2, signed_g=True)
    except Exception as exc:  # noqa: BLE001
        raise BuildError("reconstruct", str(exc)) from exc
    neg = mirror_profile(half, cfg.mirror)
    full = ProfileCurve.concatenate([neg, half])
    glue = len(neg)

    val, at, _ = sup_normA2(full)
    un = equilibrium(params).point.u
    term = max(abs(full.u[0] - un), abs(full.u[-1] - un), abs(full.v[0]), abs(full.v[-1]))
    diag = Diagnostics(
        clifford_s_star=conv.s_star,
        sign_changes=count_sign_changes(half),
        winding=float((grid.theta[-1] - grid.theta[0]) / (2 * math.pi)),
        symmetry_defect=symmetry_defect(full, glue, cfg.mirror),
        sup_normA2=val,
        sup_normA2_s=at,
        glue_curvature_norm=float(math.sqrt(full.normA2[glue])),
        terminal_distance=float(term),
        half_range=float(S),
        start_cross_validation=cross,
        ambient_soliton_defect=ambient_soliton_defect(full)["max_defect"],
    )
    return SolitonSurface(params, full, glue, half, fwd, grid, diag, cfg)


def start_agreement(params, a, b, s0: float, cfg: Optional[IntegratorConfig] = None, length: float = 1.0) -> float:
    """Sup-norm distance of the two trajectories on [s0, s0 + length]."""
    ta = integrate_forward(params, a, cfg, s0=s0, until=s0 + length)
    tb = integrate_forward(params, b, cfg, s0=s0, until=s0 + length)
    ss = np.linspace(s0, s0 + length, 1001)
    return float(np.max(np.abs(ta.interpolant()(ss) - tb.interpolant()(ss))))


def reintegration_defect(surface: SolitonSurface) -> dict:
    """Rebuild the s < 0 half by integrating through the pole and compare.

    The pole series is evaluated at negative s (u even, v and g odd) and the
    lifted system is integrated down to -S on the same grid.  The angle
    restarts at theta(0) + pi because r passes through zero.  With the
    reflection the quadrature uses |g| (theta' keeps its sign); with the
    rotation it uses the signed g of the continuation.
    """
    cfg = surface.config
    params = surface.params
    S = surface.half.s[-1]
    back = _pole_grid(params, cfg, -S, sign=-1)
    rot = cfg.mirror == "rotation"
    prof = reconstruct_profile(
        params, back, cfg.theta_sign, theta0=math.pi / 2 + math.pi, signed_g=rot, check=False
    )
    neg = surface.profile.take(np.arange(surface.glue_index, -1, -1))
    if len(neg) != len(prof) or np.max(np.abs(neg.s - prof.s)) > 1e-9:
        raise ValueError("re-integrated grid does not line up with the profile")
    out = {k: float(np.max(np.abs(getattr(neg, k) - getattr(prof, k)))) for k in ("u", "v", "y", "z")}
    out["max"] = max(out.values())
    return out
