"""Where do trajectories of the profile system go?

Every interior start drifts into the equilibrium p_n as arclength grows
and, run backwards, leaves through the unit circle in finite time.  This
script integrates a handful of starts in both directions and prints what
happened, then checks the decay and turning rates near p_n against the
linearization.
"""

import math

import numpy as np

from hopfsol.integrator import integrate_backward, integrate_forward, random_interior_points
from hopfsol.phase import SolitonParams, equilibrium
from hopfsol.soliton import tail_rates

params = SolitonParams(n=1)
eq = equilibrium(params)
print(f"p_n = ({eq.point.u:.10f}, {eq.point.v:.1f}), eigenvalues {eq.eigenvalues[0]:.6f} and conjugate")

starts = random_interior_points(np.random.default_rng(7), 6)
print(f"\n{'start':>20}  {'forward end':>19}  {'s':>7}  {'backward end':>22}  {'s':>8}")
for p in starts:
    fw = integrate_forward(params, p)
    bw = integrate_backward(params, p)
    print(
        f"({p.u:+.3f}, {p.v:+.3f})".rjust(20),
        f"{fw.termination:>19}",
        f"{fw.s[-1]:7.1f}",
        f"({bw.u[-1]:+.4f}, {bw.v[-1]:+.4f})",
        f"{bw.s[-1]:8.4f}",
    )

# zeta = u^(2n-1) g only grows along the flow, which is why there are no cycles
fw = integrate_forward(params, starts[0])
print(f"\nsmallest zeta increment along the first forward run: {np.min(np.diff(fw.zeta)):.2e}")

slope, turn = tail_rates(fw)
print(f"decay rate of |rho - p_n|: fitted {slope:.5f}, predicted {eq.alpha:.5f}")
print(f"turning rate near p_n:     fitted {abs(turn):.5f}, predicted {eq.beta:.5f}")
print(f"pseudo-period 2 pi / beta = {eq.pseudo_period:.4f}, forward run wound {abs(fw.theta[-1] - fw.theta[0]) / (2 * math.pi):.1f} times")
