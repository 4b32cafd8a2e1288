import math
import warnings

import numpy as np
import pytest

from hopfsol.integrator import IntegratorConfig, integrate_backward, integrate_forward
from hopfsol.phase import (
    DegenerateInputError,
    DomainError,
    DomainWarning,
    PhasePoint,
    SolitonParams,
    clifford_radii,
    equilibrium,
    g_of,
    polar_angle_rate,
    vector_field,
    zeta,
)

N1 = SolitonParams(1)


@pytest.mark.parametrize(
    "p, expected",
    [
        ((math.sqrt(0.5), 0.0), (0.0, 0.0)),
        ((0.5, 0.0), (0.0, 1.0)),
        ((math.cos(0.3), -math.sin(0.3)), (-math.sin(0.3), -math.cos(0.3))),
    ],
)
def test_vector_field_examples(p, expected):
    assert vector_field(N1, p) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("p", [(0.0, 0.1), (-0.2, 0.0), (0.9, 0.9)])
def test_vector_field_rejects_points_outside(p):
    with pytest.raises(DomainError):
        vector_field(N1, p)


def test_circle_is_invariant():
    for t in np.linspace(-1.5, 1.5, 31):
        u, v = math.cos(t), math.sin(t)
        P, Q = vector_field(N1, (u, v))
        assert abs(2 * u * P + 2 * v * Q) < 1e-12


def test_g_of():
    assert g_of((1.0, 0.0)) == 0.0
    assert g_of((0.6, 0.3)) == pytest.approx(0.7416198, abs=1e-7)
    for n in (1, 2, 5):
        un = math.sqrt(1 - 1 / (2 * n))
        assert g_of((un, 0.0)) == pytest.approx(math.sqrt(1 / (2 * n)), abs=1e-15)


def test_g_of_flags_but_returns():
    with pytest.warns(DomainWarning):
        assert g_of((1.0, 0.1)) == 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        g_of((1.0, 1e-6))  # inside the tolerance band, silent


def test_zeta_examples():
    assert zeta(N1, (1.0, 0.0)) == 0.0
    assert zeta(N1, (0.6, 0.3)) == pytest.approx(0.4449719, abs=1e-7)
    assert zeta(SolitonParams(2), (0.5, 0.0)) == pytest.approx(0.1082532, abs=1e-7)


def test_equilibrium_n1_n2():
    eq = equilibrium(N1)
    assert eq.point == pytest.approx((0.70710678, 0.0), abs=1e-8)
    assert eq.alpha == pytest.approx(-0.35355339, abs=1e-8)
    # sqrt(31) / (2 sqrt(2)) = 1.9685019685...
    assert eq.beta == pytest.approx(math.sqrt(31) / (2 * math.sqrt(2)), abs=1e-15)
    assert eq.beta == pytest.approx(1.96850197, abs=1e-8)
    assert equilibrium(SolitonParams(2)).point.u == pytest.approx(0.86602540, abs=1e-8)
    assert vector_field(N1, eq.point) == pytest.approx((0.0, 0.0), abs=1e-15)


@pytest.mark.parametrize("n", range(1, 11))
def test_eigenvalues_match_jacobian(n):
    eq = equilibrium(SolitonParams(n))
    ev = np.sort_complex(np.linalg.eigvals(eq.jacobian))
    assert np.allclose(ev, np.sort_complex(np.array(eq.eigenvalues)), atol=1e-12)
    # finite-difference Jacobian of the field
    h = 1e-6
    p = eq.point
    cols = []
    for d in ((h, 0.0), (0.0, h)):
        fp = np.array(vector_field(SolitonParams(n), (p.u + d[0], p.v + d[1])))
        fm = np.array(vector_field(SolitonParams(n), (p.u - d[0], p.v - d[1])))
        cols.append((fp - fm) / (2 * h))
    assert np.allclose(np.column_stack(cols), eq.jacobian, atol=1e-7)


def test_polar_angle_rate_top_of_circle():
    un = math.sqrt(0.5)
    assert polar_angle_rate(N1, (un, 0.2)) == pytest.approx(-1.0, abs=1e-14)


def test_polar_angle_rate_matches_integrated_arc():
    p0 = (0.9, 0.0)
    cfg = IntegratorConfig(abs_tol=1e-14, rel_tol=1e-14)
    un = math.sqrt(0.5)

    def angle(tr):
        return math.atan2(tr.v[-1], tr.u[-1] - un)

    def central(h):
        fw = integrate_forward(N1, p0, cfg, until=h)
        bw = integrate_backward(N1, p0, cfg, until=-h)
        return (angle(fw) - angle(bw)) / (2 * h)

    h = 5e-4
    fd = (4 * central(h / 2) - central(h)) / 3
    assert polar_angle_rate(N1, p0) == pytest.approx(fd, abs=1e-10)


def test_polar_angle_rate_degenerate():
    with pytest.raises(DegenerateInputError):
        polar_angle_rate(N1, equilibrium(N1).point)


def test_clifford_radii():
    assert clifford_radii(N1) == pytest.approx((math.sqrt(0.5), math.sqrt(0.5)), abs=1e-15)
    assert clifford_radii(SolitonParams(2)) == pytest.approx((math.sqrt(0.75), 0.5), abs=1e-15)


def test_params_and_points():
    with pytest.raises(ValueError):
        SolitonParams(0)
    with pytest.raises(ValueError):
        SolitonParams(1.5)
    assert PhasePoint.parse("0.3, -0.1") == (0.3, -0.1)
    with pytest.raises(ValueError):
        PhasePoint.parse("1,2,3")
