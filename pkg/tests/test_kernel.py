"""Ball-side kernel machinery: closed-form oracles at n = 3, weight
asymptotics, the scaling group, and quadrature cross-checks."""

import math

import numpy as np
import pytest
from scipy.integrate import simpson

from hardyball.grids import RadialFunction, RadialGrid
from hardyball.kernel import (DomainError, green_density, green_G,
                              green_G_inverse, hyperbolic_dirichlet_energy,
                              hyperbolic_integral, hyperbolic_scaling,
                              sphere_area, weight_V_p)


def closed_form_G3(r):
    # antiderivative of (1 - t^2)/t^2 evaluated between r and 1
    return (1.0 - r) ** 2 / r


def test_density_closed_values():
    assert green_density(0.5, 3) == pytest.approx(3.0, rel=1e-15)
    assert green_density(0.5, 4) == pytest.approx(4.5, rel=1e-15)
    r = np.linspace(0.9, 0.999999, 50)
    vals = green_density(r, 5)
    assert np.all(np.diff(vals) < 0)


def test_density_domain_errors():
    with pytest.raises(DomainError):
        green_density(0.0, 5)
    with pytest.raises(DomainError):
        green_density(1.5, 5)
    with pytest.raises(DomainError):
        green_density(0.5, 2)


def test_G_matches_n3_closed_form():
    radii = np.geomspace(1e-4, 0.999, 20)
    for r in radii:
        assert green_G(float(r), 3) == pytest.approx(closed_form_G3(r),
                                                     rel=1e-10)
    # vectorized path agrees with the scalar path
    vec = green_G(radii, 3)
    assert np.max(np.abs(vec - closed_form_G3(radii))
                  / closed_form_G3(radii)) < 1e-9


def test_G_monotone_and_inverse_roundtrip():
    radii = np.geomspace(1e-4, 0.9, 30)
    G = green_G(radii, 5)
    assert np.all(np.diff(G) < 0)
    for r in (1e-4, 1e-2, 0.3, 0.9):
        g = green_G(r, 5)
        assert green_G_inverse(g, 5) == pytest.approx(r, rel=1e-10)
    back = green_G_inverse(G, 5)
    assert np.max(np.abs(back - radii) / radii) < 1e-8


def test_inverse_rejects_nonpositive():
    with pytest.raises(DomainError):
        green_G_inverse(0.0, 5)
    with pytest.raises(DomainError):
        green_G_inverse(-1.0, 5)


def test_weight_positive_and_origin_asymptotics():
    for n in (3, 5, 7):
        prev = math.inf
        for r in (1e-3, 1e-4, 1e-5):
            val = weight_V_p(r, n, 2.0) * 4.0 * r * r
            err = abs(val - 1.0)
            assert err < abs(prev) or err < 1e-6
            prev = err
            assert 0.999 <= val <= 1.001 or r == 1e-3
    # critical-weight asymptotics: V_q r^s tends to a positive constant
    q = 2.0 * (5 - 1.0) / 3.0
    vals = [weight_V_p(r, 5, q) * r ** 1.0 for r in (1e-3, 1e-4, 1e-5)]
    assert all(v > 0 for v in vals)
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])


def test_weight_closed_value_n3():
    # independent arithmetic from the two closed forms at n = 3
    f = green_density(0.5, 3)
    G = closed_form_G3(0.5)
    expect = f * f * 0.75 ** 2 / (4.0 * G ** 2)
    assert weight_V_p(0.5, 3, 2.0) == pytest.approx(expect, rel=1e-9)
    assert expect == pytest.approx(5.0625, rel=1e-12)


def test_sphere_area_values():
    assert sphere_area(3) == pytest.approx(4.0 * math.pi, rel=1e-14)
    assert sphere_area(4) == pytest.approx(2.0 * math.pi ** 2, rel=1e-14)


def _bump(grid, center, width, seed_amp=1.0):
    vals = seed_amp * np.exp(-((grid.log_nodes - math.log(center)) / width) ** 2)
    vals[vals < 1e-14 * seed_amp] = 0.0
    return RadialFunction(grid, vals)


@pytest.fixture(scope="module")
def dense_grid():
    return RadialGrid.geometric(1e-8, 1.0 - 1e-6, 1500)


@pytest.mark.parametrize("lam", [0.5, 2.0, 5.0])
def test_scaling_invariance_gradient_and_weight(dense_grid, lam):
    n, s = 5, 1.0
    q = 2.0 * (n - s) / (n - 2.0)
    u = _bump(dense_grid, 0.02, 0.5)
    ul = hyperbolic_scaling(u, lam, n)
    e0 = hyperbolic_dirichlet_energy(u, n, method="nodal")
    e1 = hyperbolic_dirichlet_energy(ul, n, method="nodal")
    assert abs(e1 - e0) / e0 < 1e-6
    for p in (2.0, q):
        w = lambda r: weight_V_p(r, n, p)
        i0 = hyperbolic_integral(w, u, p, n, method="nodal")
        i1 = hyperbolic_integral(w, ul, p, n, method="nodal")
        assert abs(i1 - i0) / i0 < 1e-6


def test_scaling_identity_at_lambda_one(dense_grid):
    u = _bump(dense_grid, 0.05, 0.4)
    same = hyperbolic_scaling(u, 1.0, 5)
    assert np.array_equal(same.values, u.values)


def test_gradient_invariance_fails_off_exponent_two(dense_grid):
    # the gradient integral is scale-invariant only at exponent 2: the
    # q = 8/3 gradient integral must move under scaling
    u = _bump(dense_grid, 0.02, 0.5)
    ul = hyperbolic_scaling(u, 2.0, 5)
    q = 8.0 / 3.0
    e0 = hyperbolic_dirichlet_energy(u, 5, q=q, method="nodal")
    e1 = hyperbolic_dirichlet_energy(ul, 5, q=q, method="nodal")
    assert abs(e1 - e0) / e0 > 1e-3


def test_hyperbolic_integral_trivial_and_oracle():
    grid = RadialGrid.geometric(1e-6, 0.5, 400)
    zero = RadialFunction(grid, np.zeros(len(grid)))
    assert hyperbolic_integral(None, zero, 2.0, 5) == 0.0
    # small-ball volume: conformal factor tends to 2 at the origin
    rho = 1e-3
    small = RadialGrid.geometric(1e-9, rho, 400)
    one = RadialFunction(small, np.ones(len(small)))
    vol = hyperbolic_integral(None, one, 1.0, 3)
    euclid = 4.0 / 3.0 * math.pi * rho ** 3
    assert vol == pytest.approx(euclid * 2.0 ** 3, rel=1e-4)


def test_hyperbolic_integral_matches_dense_trapezoid():
    n = 5
    grid = RadialGrid.geometric(1e-5, 0.6, 300)
    u = RadialFunction(grid, grid.nodes ** -1.0 *
                       np.exp(-((grid.log_nodes + 4.0) / 1.0) ** 2))
    val = hyperbolic_integral(lambda r: weight_V_p(r, n, 2.0), u, 2.0, n)
    # brute-force oracle at 10x resolution
    t = np.linspace(grid.log_nodes[0], grid.log_nodes[-1], 3000)
    r = np.exp(t)
    w = weight_V_p(r, n, 2.0)
    conf = 2.0 / (1.0 - r * r)
    integ = w * np.abs(u.spline()(t)) ** 2 * r ** n * conf ** n
    oracle = sphere_area(n) * simpson(integ, x=t)
    assert val == pytest.approx(oracle, rel=1e-6)


def test_dirichlet_energy_constant_and_linear():
    grid = RadialGrid.geometric(1e-6, 0.5, 2000)
    const = RadialFunction(grid, np.ones(len(grid)))
    assert abs(hyperbolic_dirichlet_energy(const, 5)) < 1e-12
    t = np.linspace(grid.log_nodes[0], grid.log_nodes[-1], 5000)
    r = np.exp(t)
    gradB = 0.5 * (1.0 - r * r)  # |u'| = 1
    conf = 2.0 / (1.0 - r * r)
    oracle = sphere_area(3) * simpson(gradB ** 2 * r ** 3 * conf ** 3, x=t)
    got = hyperbolic_dirichlet_energy(
        RadialFunction(grid, grid.nodes.copy()), 3)
    assert got == pytest.approx(oracle, rel=1e-8)


def test_nodal_quadrature_agrees_with_adaptive(dense_grid):
    u = _bump(dense_grid, 0.03, 0.4)
    for fn in (lambda m: hyperbolic_dirichlet_energy(u, 5, method=m),
               lambda m: hyperbolic_integral(
                   lambda r: weight_V_p(r, 5, 2.0), u, 2.0, 5, method=m)):
        assert fn("nodal") == pytest.approx(fn("adaptive"), rel=1e-6)
