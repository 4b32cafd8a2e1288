"""Power series of the soliton branch issuing from the pole (u, v) = (1, 0).

On the unit circle the planar field is only continuous, and the circle itself
is a solution (the totally geodesic family u = cos(s + s0)), so a start at
(1, 0) is not unique.  Carrying g as a third unknown with

    g' = v^2 - (2n-1) v g / u

turns the system into a polynomial/rational one that is analytic at
(u, v, g) = (1, 0, 0).  Its Taylor solution has g = s^3/3 + ..., i.e. it leaves
the circle: it is the interior branch.  The leading correction to the
geodesic is u = cos s + s^6/90 + O(s^8) for every n.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from hopfsol.phase import SolitonParams

DEFAULT_ORDER = 40


def _reciprocal(a: np.ndarray) -> np.ndarray:
    w = np.zeros_like(a)
    w[0] = 1.0 / a[0]
    for k in range(1, len(a)):
        w[k] = -np.dot(a[1 : k + 1], w[k - 1 :: -1][:k]) / a[0]
    return w


def _conv(x: np.ndarray, y: np.ndarray, k: int) -> float:
    return float(np.dot(x[: k + 1], y[k::-1]))


@dataclass(frozen=True)
class PoleSeries:
    """Taylor coefficients (ascending powers of s) of u, v, g and of the
    ambient angle increment theta(s) - theta(0), which solves
    theta' = g / (1 - u^2)."""

    params: SolitonParams
    u: np.ndarray
    v: np.ndarray
    g: np.ndarray
    theta: np.ndarray = field(repr=False)

    @property
    def order(self) -> int:
        return len(self.u) - 1

    @property
    def c6(self) -> float:
        """Coefficient of s^6 in u(s) - cos(s)."""
        return float(self.u[6]) + 1.0 / 720.0

    def state(self, s):
        """(u, v, g) at arclength s (scalar or array)."""
        return P.polyval(s, self.u), P.polyval(s, self.v), P.polyval(s, self.g)

    def theta_increment(self, s):
        return P.polyval(s, self.theta)

    def upp(self, s):
        return P.polyval(s, P.polyder(self.u, 2))

    def tail_bound(self, s: float) -> float:
        """Crude truncation estimate: size of the last four retained terms."""
        k = np.arange(self.order - 3, self.order + 1)
        return float(np.max(np.abs(self.u[k]) * abs(s) ** k))


def pole_series(params: SolitonParams, order: int = DEFAULT_ORDER) -> PoleSeries:
    n = params.n
    m = 2 * n - 1
    K = order + 1
    a = np.zeros(K)
    b = np.zeros(K)
    c = np.zeros(K)
    a[0] = 1.0
    w = np.zeros(K)
    for k in range(K - 1):
        # coefficients up to index k are known; 1/u needs a[0..k]
        w[: k + 1] = _reciprocal(a[: k + 1])
        gg = np.array([_conv(c, c, j) for j in range(k + 1)])
        vg = np.array([_conv(b, c, j) for j in range(k + 1)])
        rv = m * _conv(gg, w, k) - vg[k] - a[k]
        rg = _conv(b, b, k) - m * _conv(vg, w, k)
        a[k + 1] = b[k] / (k + 1)
        b[k + 1] = rv / (k + 1)
        c[k + 1] = rg / (k + 1)
    # theta' = g / (1 - u^2); both numerator and denominator vanish at s = 0
    d = -P.polymul(a, a)[:K]
    d[0] += 1.0
    num = c[3:]
    den = d[2 : 2 + len(num)]
    q = np.zeros(len(num))
    rden = _reciprocal(den)
    for k in range(len(num)):
        q[k] = _conv(num, rden, k)
    # theta' = s * q(s)  ->  theta = sum q_k s^{k+2} / (k+2)
    theta = np.zeros(len(q) + 2)
    theta[2:] = q / np.arange(2, len(q) + 2)
    return PoleSeries(params=params, u=a, v=b, g=c, theta=theta)


def shs_residual_coefficients(series: PoleSeries, g_sign: float = 1.0) -> np.ndarray:
    """Taylor coefficients of u u'' + (2n-1) u'^2 + 2n u^2 - (2n-1) + u u' g
    computed from the series itself (g taken from its own expansion)."""
    n = series.params.n
    u = series.u
    up = P.polyder(u)
    upp = P.polyder(u, 2)
    res = P.polyadd(P.polymul(u, upp), (2 * n - 1) * P.polymul(up, up))
    res = P.polyadd(res, 2 * n * P.polymul(u, u))
    res = P.polysub(res, [2 * n - 1])
    res = P.polyadd(res, g_sign * P.polymul(P.polymul(u, up), series.g))
    return res[: series.order - 1]
