"""Adaptive arclength integration of the planar soliton system.

The stepper is the Dormand-Prince 5(4) pair with a PI step-size controller.
Forward runs stop near the equilibrium; backward runs stop where the
trajectory meets the unit circle, localized by bisection on the cubic Hermite
interpolant of the last step.  Starts on the circle go through
:func:`boundary_start`, which selects the interior branch either from the
pole series or by extrapolating interior starts q_eps -> q.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from hopfsol.phase import (
    TOL_DOMAIN,
    DomainError,
    PhasePoint,
    SolitonParams,
    equilibrium,
)
from hopfsol.series import PoleSeries, pole_series

EQUILIBRIUM_REACHED = "equilibrium_reached"
HORIZON_REACHED = "horizon_reached"
BOUNDARY_HIT = "boundary_hit"
STEP_FAILURE = "step_failure"

TOL_ZETA = 1e-8


class IntegrationError(RuntimeError):
    pass


class AngleAmbiguityError(ValueError):
    """Consecutive samples are too far apart in angle to unwrap reliably."""


class ExtrapolationError(IntegrationError):
    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class IntegratorConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    h_init: float = 1e-2
    h_min: float = 1e-14
    h_max: float = 0.25
    horizon: float = 500.0
    eq_radius: float = 1e-8
    boundary_tol: float = 1e-7

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol", "h_init", "h_min", "h_max", "horizon", "eq_radius", "boundary_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.h_min <= self.h_init <= self.h_max:
            raise ValueError("need h_min <= h_init <= h_max")


@dataclass(frozen=True)
class Trajectory:
    """Phase samples ordered along the integration direction.

    ``du``/``dv`` hold the field values (u', v') at each sample, enough for a
    cubic Hermite reinterpolation between consecutive samples.
    """

    params: SolitonParams
    s: np.ndarray
    u: np.ndarray
    v: np.ndarray
    g: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    theta: np.ndarray
    direction: str
    termination: str
    boundary_point: Optional[PhasePoint] = None
    stats: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.s)

    @property
    def zeta(self) -> np.ndarray:
        return self.u ** (2 * self.params.n - 1) * self.g

    @property
    def final(self) -> PhasePoint:
        return PhasePoint(float(self.u[-1]), float(self.v[-1]))

    @property
    def theta_unwrapped(self) -> np.ndarray:
        return self.theta

    def point(self, i: int) -> PhasePoint:
        return PhasePoint(float(self.u[i]), float(self.v[i]))

    def distance_to_equilibrium(self) -> np.ndarray:
        un = equilibrium(self.params).point.u
        return np.hypot(self.u - un, self.v)

    def interpolant(self) -> CubicHermiteSpline:
        """Cubic Hermite interpolant of (u, v) in increasing s."""
        order = np.argsort(self.s)
        s = self.s[order]
        y = np.stack([self.u[order], self.v[order]], axis=-1)
        dy = np.stack([self.du[order], self.dv[order]], axis=-1)
        return CubicHermiteSpline(s, y, dy, axis=0)

    def slice(self, mask) -> "Trajectory":
        idx = np.flatnonzero(mask)
        return replace(
            self,
            s=self.s[idx], u=self.u[idx], v=self.v[idx], g=self.g[idx],
            du=self.du[idx], dv=self.dv[idx], theta=self.theta[idx],
        )


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)


# naive on-circle mode: states this close to the circle are put back on it
CLAMP_BAND = 1e-8


class _OutOfDomain(Exception):
    pass


def planar_rhs(n: int, band: float = 0.0) -> Callable:
    """Planar field with g clamped to zero wherever 1 - u^2 - v^2 <= band."""
    m = 2 * n - 1

    def f(y):
        u, v = y
        if u <= 0.0:
            raise _OutOfDomain
        w = 1.0 - u * u - v * v
        g = math.sqrt(w) if w > band else 0.0
        return (v, m * (g * g) / u - v * g - u)

    return f


def lifted_rhs(n: int) -> Callable:
    """(u, v, g) system: the planar field with g carried through its own ODE."""
    m = 2 * n - 1

    def f(y):
        u, v, g = y
        if u <= 0.0:
            raise _OutOfDomain
        return (v, m * g * g / u - v * g - u, v * v - m * v * g / u)

    return f


def _dp_step(f, y, k1, h):
    ks = [k1]
    dim = len(y)
    for i in range(1, 7):
        a = _A[i]
        yi = tuple(y[d] + h * sum(a[j] * ks[j][d] for j in range(i)) for d in range(dim))
        ks.append(f(yi))
    y1 = yi  # stage 7 is evaluated at the 5th-order solution (FSAL)
    err = tuple(h * sum(_E[j] * ks[j][d] for j in range(7)) for d in range(dim))
    return y1, err, ks[6]


def _wrap(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def _hermite(y0, f0, y1, f1, h, t):
    """Cubic Hermite value at fraction t of a step of signed length h."""
    t2, t3 = t * t, t * t * t
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + t
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    return tuple(h00 * a + h10 * h * fa + h01 * b + h11 * h * fb for a, fa, b, fb in zip(y0, f0, y1, f1))


def _integrate(
    params: SolitonParams,
    p0,
    cfg: IntegratorConfig,
    sign: int,
    s0: float,
    until: Optional[float],
    clamp: bool = False,
) -> Trajectory:
    n = params.n
    band = CLAMP_BAND if clamp else 0.0
    # backward runs end on the circle, where sqrt(1 - u^2 - v^2) amplifies
    # any error in u, v; there g is carried through its own equation instead
    lifted = sign < 0
    f = lifted_rhs(n) if lifted else planar_rhs(n, band)
    un = equilibrium(params).point.u
    u0, v0 = float(p0[0]), float(p0[1])
    w0 = 1.0 - u0 * u0 - v0 * v0
    y = (u0, v0, math.sqrt(max(w0, 0.0))) if lifted else (u0, v0)
    dim = len(y)
    s = float(s0)
    fy = f(y)
    end = s0 + sign * cfg.horizon
    if until is not None:
        end = until if sign * (until - end) < 0 else end

    def gfun(p):
        if lifted:
            return p[2]
        w = 1.0 - p[0] * p[0] - p[1] * p[1]
        return math.sqrt(w) if w > band else 0.0

    th = math.atan2(y[1], y[0] - un)
    S, U, V, G, DU, DV, TH = [s], [y[0]], [y[1]], [gfun(y)], [fy[0]], [fy[1]], [th]
    boundary_point = None
    h = cfg.h_init
    err_prev = 1e-4
    n_acc = n_rej = 0
    termination = None

    if math.hypot(y[0] - un, y[1]) < cfg.eq_radius and sign > 0:
        termination = EQUILIBRIUM_REACHED

    while termination is None:
        h = min(h, cfg.h_max, abs(end - s))
        if sign < 0:
            # approach the circle geometrically: never step past the predicted hit
            g = G[-1]
            rate = abs(y[1] * y[1] - (2 * n - 1) * y[1] * g / y[0])
            if rate > 0.0:
                h = min(h, max(0.5 * g / rate, cfg.h_min))
        if h < cfg.h_min:
            termination = STEP_FAILURE
            break
        hs = sign * h
        try:
            y1, err, f1 = _dp_step(f, y, fy, hs)
        except _OutOfDomain:
            h *= 0.5
            n_rej += 1
            continue
        if y1[0] <= 0.0 or y1[0] * y1[0] + y1[1] * y1[1] > 1.0 + TOL_DOMAIN:
            h *= 0.5
            n_rej += 1
            continue
        en = 0.0
        for d in range(dim):
            sc = cfg.abs_tol + cfg.rel_tol * max(abs(y[d]), abs(y1[d]))
            en += (err[d] / sc) ** 2
        en = math.sqrt(en / dim)
        if en > 1.0:
            h *= max(0.2, 0.9 * en ** -0.2)
            n_rej += 1
            continue
        th1 = math.atan2(y1[1], y1[0] - un)
        dth = _wrap(th1 - th)
        if abs(dth) > 0.5 * math.pi:
            h *= 0.5
            n_rej += 1
            continue
        n_acc += 1
        s1 = s + hs
        if clamp:
            r = math.hypot(*y1)
            if r > 1.0 or 1.0 - r * r <= CLAMP_BAND:
                y1 = (y1[0] / r, y1[1] / r)
                f1 = f(y1)
        g1 = gfun(y1)
        if sign < 0 and g1 < cfg.boundary_tol:
            # bisection on the Hermite interpolant for g = boundary_tol
            lo, hi = 0.0, 1.0
            while (hi - lo) * h > 1e-13:
                mid = 0.5 * (lo + hi)
                if gfun(_hermite(y, fy, y1, f1, hs, mid)) > cfg.boundary_tol:
                    lo = mid
                else:
                    hi = mid
            y1 = _hermite(y, fy, y1, f1, hs, hi)
            s1 = s + hi * hs
            g1 = gfun(y1)
            f1 = f(y1)
            th1 = math.atan2(y1[1], y1[0] - un)
            dth = _wrap(th1 - th)
            boundary_point = PhasePoint(y1[0], y1[1])
            termination = BOUNDARY_HIT
        th = TH[-1] + dth
        S.append(s1)
        U.append(y1[0])
        V.append(y1[1])
        G.append(g1)
        DU.append(f1[0])
        DV.append(f1[1])
        TH.append(th)
        th = th1
        y, fy, s = y1, f1, s1
        if termination is not None:
            break
        if sign > 0 and math.hypot(y[0] - un, y[1]) < cfg.eq_radius:
            termination = EQUILIBRIUM_REACHED
            break
        if sign * (end - s) <= 0.0:
            termination = HORIZON_REACHED
            break
        # PI controller
        fac = 0.9 * max(en, 1e-10) ** (-0.7 / 5) * err_prev ** (0.4 / 5)
        err_prev = max(en, 1e-4)
        h *= min(5.0, max(0.2, fac))

    return Trajectory(
        params=params,
        s=np.array(S), u=np.array(U), v=np.array(V), g=np.array(G),
        du=np.array(DU), dv=np.array(DV), theta=np.array(TH),
        direction="forward" if sign > 0 else "backward",
        termination=termination,
        boundary_point=boundary_point,
        stats={"accepted": n_acc, "rejected": n_rej},
    )


def _interior_or_raise(p0, cfg: IntegratorConfig):
    u, v = float(p0[0]), float(p0[1])
    w = 1.0 - u * u - v * v
    if not u > 0.0 or w < -TOL_DOMAIN:
        raise DomainError(f"start {p0!r} lies outside the closed half disc")
    if math.sqrt(max(w, 0.0)) <= cfg.boundary_tol:
        raise DomainError(
            f"start {p0!r} is on the unit circle, where starts are not unique; "
            "use boundary_start to select the interior branch"
        )


def integrate_forward(
    params: SolitonParams,
    p0,
    cfg: Optional[IntegratorConfig] = None,
    *,
    s0: float = 0.0,
    until: Optional[float] = None,
    require_interior: bool = True,
) -> Trajectory:
    """Integrate in increasing arclength until the equilibrium or the horizon.

    ``require_interior=False`` is the naive mode for a start exactly on the
    circle: g is clamped to zero within TOL_DOMAIN of the circle and every
    accepted state is clamped back into the closed disc.  Such a run follows
    the totally geodesic branch u = cos(s + s0), which
    :func:`detect_geodesic_branch` flags.
    """
    cfg = cfg or IntegratorConfig()
    if require_interior:
        _interior_or_raise(p0, cfg)
    return _integrate(params, p0, cfg, +1, s0, until, clamp=not require_interior)


def integrate_backward(
    params: SolitonParams,
    p0,
    cfg: Optional[IntegratorConfig] = None,
    *,
    s0: float = 0.0,
    until: Optional[float] = None,
) -> Trajectory:
    """Integrate in decreasing arclength until the trajectory meets the circle."""
    cfg = cfg or IntegratorConfig()
    _interior_or_raise(p0, cfg)
    pn = equilibrium(params).point
    if math.hypot(p0[0] - pn.u, p0[1] - pn.v) < cfg.eq_radius:
        raise ValueError("backward integration from the equilibrium is stationary")
    return _integrate(params, p0, cfg, -1, s0, until)


def integrate_grid(
    params: SolitonParams,
    state: Sequence[float],
    s0: float,
    s1: float,
    h: float,
) -> Trajectory:
    """Fixed-step integration landing exactly on s0 + k*h.

    Here g is carried as a third unknown through g' = v^2 - (2n-1) v g / u, so
    it keeps full relative accuracy near the circle where sqrt(1 - u^2 - v^2)
    would cancel.  ``state`` is (u, v) or (u, v, g).
    """
    n = params.n
    f = lifted_rhs(n)
    if len(state) == 2:
        u, v = state
        state = (u, v, math.sqrt(max(0.0, 1.0 - u * u - v * v)))
    y = tuple(float(x) for x in state)
    steps = int(round(abs(s1 - s0) / h))
    if steps < 1 or abs(steps * h - abs(s1 - s0)) > 1e-9 * max(1.0, abs(s1 - s0)):
        raise ValueError("grid spacing must divide the interval")
    sign = 1 if s1 > s0 else -1
    hs = sign * h
    out = np.empty((steps + 1, 3))
    der = np.empty((steps + 1, 3))
    out[0] = y
    fy = f(y)
    der[0] = fy
    for k in range(1, steps + 1):
        y, _, fy = _dp_step(f, y, fy, hs)
        out[k] = y
        der[k] = fy
    s = s0 + hs * np.arange(steps + 1)
    un = equilibrium(params).point.u
    theta = np.unwrap(np.arctan2(out[:, 1], out[:, 0] - un))
    return Trajectory(
        params=params, s=s, u=out[:, 0], v=out[:, 1], g=out[:, 2],
        du=der[:, 0], dv=der[:, 1], theta=theta,
        direction="forward" if sign > 0 else "backward",
        termination=HORIZON_REACHED,
        stats={"accepted": steps, "rejected": 0, "g_carried": True},
    )


def unwrap_angle(traj: Trajectory, max_jump: float = 0.75 * math.pi) -> np.ndarray:
    """Continuous polar angle around the equilibrium along the samples.

    The increment between samples is taken as the representative of the raw
    atan2 difference in (-pi, pi]; increments larger than ``max_jump`` in
    magnitude are ambiguous and raise.
    """
    un = equilibrium(traj.params).point.u
    raw = np.arctan2(traj.v, traj.u - un)
    if len(raw) < 2:
        return raw.copy()
    d = (np.diff(raw) + np.pi) % (2 * np.pi) - np.pi
    bad = np.flatnonzero(np.abs(d) >= max_jump)
    if bad.size:
        i = int(bad[0])
        raise AngleAmbiguityError(
            f"angle increment {d[i]:.3f} between samples {i} and {i + 1} is ambiguous; refine the sampling"
        )
    return np.concatenate([[raw[0]], raw[0] + np.cumsum(d)])


def winding_number(traj: Trajectory) -> float:
    th = traj.theta
    return float((th[-1] - th[0]) / (2 * math.pi))


def detect_geodesic_branch(traj: Trajectory, g_min: float = 1e-6) -> dict:
    """Report whether a trajectory stays on the unit circle.

    On the circle g == 0, so the generated hypersurface is a piece of a
    totally geodesic sphere: every principal curvature is zero and the mean
    curvature is 0.  The soliton condition H = -u' = -v then fails wherever
    v != 0, which is what ``h_crosscheck_max`` measures.
    """
    g_max = float(np.max(traj.g))
    h_geom = np.zeros_like(traj.v)
    defect = float(np.max(np.abs(h_geom + traj.v)))
    return {
        "g_max": g_max,
        "on_circle": g_max < g_min,
        "h_crosscheck_max": defect,
        "geodesic": g_max < g_min and defect > 1e-7,
    }


# ---------------------------------------------------------------------------
# starts on the boundary circle


@dataclass(frozen=True)
class BoundaryStart:
    s_handoff: float
    state: PhasePoint
    g: float
    method: str
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __iter__(self):
        # unpacks as (s_handoff, state)
        return iter((self.s_handoff, self.state))


def _neville_at_zero(x: Sequence[float], y: np.ndarray) -> list[np.ndarray]:
    """Successive polynomial extrapolants to x = 0 using the first k+1 points."""
    x = list(x)
    table = [np.asarray(yi, dtype=float) for yi in y]
    out = [table[0]]
    cur = list(table)
    for level in range(1, len(x)):
        nxt = []
        for i in range(len(cur) - 1):
            xi, xj = x[i], x[i + level]
            nxt.append((xj * cur[i] - xi * cur[i + 1]) / (xj - xi))
        cur = nxt
        out.append(cur[0])
    return out


def boundary_start(
    params: SolitonParams,
    q,
    method: str = "series",
    cfg: Optional[IntegratorConfig] = None,
    *,
    s_handoff: float = 0.25,
    eps0: float = 1e-3,
    levels: int = 7,
    extrap_tol: float = 1e-8,
    run_tol: float = 1e-13,
    series: Optional[PoleSeries] = None,
) -> BoundaryStart:
    """State of the interior branch issuing from a point q of the unit circle.

    ``series`` (only for q = (1, 0)) evaluates the pole expansion at
    ``s_handoff``.  ``perturbation`` integrates from q_eps = (1 - eps) q for
    eps = eps0 * 2^-k, k < levels, and extrapolates the states at
    ``s_handoff`` to eps -> 0.  The states depend smoothly on the initial
    value of g, g0 = sqrt(2 eps - eps^2), not on eps, so the extrapolation
    polynomial is built in g0.  The runs use ``run_tol`` (tighter than the
    usual defaults) because near the circle an error dw in 1 - u^2 - v^2
    becomes an error dw / 2g in g.
    """
    cfg = cfg or IntegratorConfig()
    uq, vq = float(q[0]), float(q[1])
    if not uq > 0.0 or abs(uq * uq + vq * vq - 1.0) > 1e-12:
        raise DomainError(f"q = {q!r} is not a point of the circle with u > 0")
    if method == "series":
        if abs(uq - 1.0) > 1e-12 or abs(vq) > 1e-12:
            raise ValueError("the series start is only available at q = (1, 0)")
        ser = series or pole_series(params)
        u, v, g = (float(x) for x in ser.state(s_handoff))
        return BoundaryStart(
            s_handoff, PhasePoint(u, v), g, "series",
            {"order": ser.order, "tail_bound": ser.tail_bound(s_handoff)},
        )
    if method != "perturbation":
        raise ValueError(f"unknown method {method!r}")
    eps = [eps0 * 2.0**-k for k in range(levels)]
    run_cfg = replace(cfg, abs_tol=min(cfg.abs_tol, run_tol), rel_tol=min(cfg.rel_tol, run_tol))
    g0 = [math.sqrt(2 * e - e * e) for e in eps]
    states = []
    for e in eps:
        tr = integrate_forward(params, ((1 - e) * uq, (1 - e) * vq), run_cfg, until=s_handoff)
        if tr.termination != HORIZON_REACHED or abs(tr.s[-1] - s_handoff) > 1e-12:
            raise ExtrapolationError(
                f"run from eps={e:g} ended with {tr.termination} at s={tr.s[-1]:g}",
                {"eps": eps},
            )
        states.append(np.array([tr.u[-1], tr.v[-1]]))
    extrap = _neville_at_zero(g0, np.array(states))
    diffs = [float(np.max(np.abs(extrap[k] - extrap[k - 1]))) for k in range(1, len(extrap))]
    diag = {"eps": eps, "g0": g0, "states": states, "extrapolants": extrap, "differences": diffs}
    if diffs[-1] > extrap_tol:
        raise ExtrapolationError(
            f"extrapolation did not converge: last change {diffs[-1]:.3e} > {extrap_tol:g}", diag
        )
    u, v = (float(x) for x in extrap[-1])
    w = 1.0 - u * u - v * v
    if not w > 0.0:
        raise ExtrapolationError("extrapolated state is not interior", diag)
    return BoundaryStart(s_handoff, PhasePoint(u, v), math.sqrt(w), "perturbation", diag)


# ---------------------------------------------------------------------------
# batches


def _forward_job(args):
    params, p0, cfg = args
    return integrate_forward(params, p0, cfg)


def _backward_job(args):
    params, p0, cfg = args
    return integrate_backward(params, p0, cfg)


def integrate_many(
    params: SolitonParams,
    starts: Sequence,
    cfg: Optional[IntegratorConfig] = None,
    direction: str = "forward",
    workers: int = 1,
) -> list[Trajectory]:
    """Integrate a batch of starts; results come back in input order."""
    cfg = cfg or IntegratorConfig()
    job = _forward_job if direction == "forward" else _backward_job
    args = [(params, tuple(p), cfg) for p in starts]
    if workers <= 1:
        return [job(a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(job, args))


def random_interior_points(
    rng: np.random.Generator,
    count: int,
    u_min: float = 0.05,
    radius_max: float = 0.95,
) -> list[PhasePoint]:
    """Uniform draws from {u >= u_min, u^2 + v^2 <= radius_max^2}."""
    pts = []
    while len(pts) < count:
        u, v = rng.uniform(u_min, radius_max), rng.uniform(-radius_max, radius_max)
        if u * u + v * v <= radius_max**2:
            pts.append(PhasePoint(u, v))
    return pts
