"""Identity audits: the annulus momentum balance, the two hyperbolic
inequalities, exponent extraction, and the energy table."""

import math
from dataclasses import dataclass

import numpy as np
import pytest

from hardyball.bridge import EuclideanProblem
from hardyball.constants import ProblemParams, alpha_minus, beta_pm
from hardyball.grids import RadialFunction, RadialGrid
from hardyball.kernel import green_G, hyperbolic_scaling
from hardyball.solver import ProfileData, SolutionProfile, shoot
from hardyball.verify import (PohozaevBreakdown, VerificationError,
                              VerificationReport, asymptotic_exponent,
                              energy_levels, hardy_check,
                              hardy_sobolev_check, pohozaev_residual)


# ---------------------------------------------------------------- Pohozaev

def test_breakdown_bookkeeping():
    br = PohozaevBreakdown(h_term=1.0, grad_h_term=2.0, p_defect_term=3.0,
                           grad_b_term=4.0, gamma_offset_term=0.0,
                           s_offset_term=0.0, flux_outer=7.0, flux_inner=2.0,
                           total=5.0, relative=0.1)
    assert br.volume_total() == pytest.approx(10.0)
    assert br.total == pytest.approx(br.volume_total()
                                     - (br.flux_outer - br.flux_inner))


def test_constant_profile_balances_exactly():
    # gamma = 0, h = 0, b = 0, v = 1: every term vanishes identically
    params = ProblemParams(n=5, s=1.0, gamma=0.0, lam=0.0)
    prob = EuclideanProblem(params, domain_radius=0.5,
                            h_spec=lambda r: 0.0 * np.asarray(r),
                            b_spec=0.0)
    r = np.geomspace(1e-4, 0.5, 600)
    prof = SolutionProfile(
        data=ProfileData(r=r, v=np.ones_like(r), dv=np.zeros_like(r)),
        params=params, p_defect=0.2, K0=1.0, node_count=0, energy=0.0,
        residual_norm=0.0, boundary_value=1.0)
    br = pohozaev_residual(prof, prob, (1e-3, 0.4), use_jet=False)
    for name in ("h_term", "grad_h_term", "p_defect_term", "grad_b_term",
                 "flux_outer", "flux_inner", "total"):
        assert getattr(br, name) == 0.0


def test_ground_state_residual_and_refinement(ref_params, ref_problem,
                                              ground_shoot):
    K = ground_shoot.meta["K_shoot"]
    rels = []
    for num in (400, 800, 1600):
        prof = shoot(ref_params, ref_problem, K, 0.2, num=num,
                     rtol=1e-13, atol_scale=1e-15)
        br = pohozaev_residual(prof, ref_problem, (5e-4, 0.5))
        rels.append(br.relative)
    assert rels[0] <= 1e-4
    assert rels[0] / rels[1] >= 8.0
    assert rels[1] / rels[2] >= 8.0


@dataclass
class _ConstStub:
    """Whole-space problem with a flat weight and no linear potential."""
    b0: float
    params: ProblemParams

    def h(self, r):
        return 0.0 * np.asarray(r)

    def h_radial_slope(self, r):
        return 0.0 * np.asarray(r)

    def b(self, r):
        return self.b0 + 0.0 * np.asarray(r)

    def b_radial_slope(self, r):
        return 0.0 * np.asarray(r)


def test_bubble_residual_small(bubble):
    params = ProblemParams(n=5, s=1.0, gamma=-2.0)
    prof = SolutionProfile(data=bubble.data, params=params, p_defect=0.0,
                           K0=bubble.K_minus, node_count=0, energy=1.0,
                           residual_norm=0.0, boundary_value=bubble.data.v[-1])
    br = pohozaev_residual(prof, _ConstStub(bubble.b0, params), (1e-2, 1e2),
                           use_jet=False)
    assert br.relative <= 1e-4
    assert br.grad_h_term == 0.0 and br.grad_b_term == 0.0


def test_pohozaev_annulus_validation(ref_problem, ground_shoot):
    with pytest.raises(VerificationError):
        pohozaev_residual(ground_shoot, ref_problem, (0.4, 0.3))
    with pytest.raises(VerificationError):
        pohozaev_residual(ground_shoot, ref_problem, (1e-12, 0.4))
    with pytest.raises(VerificationError):
        # snapped endpoints leave fewer than eight nodes in between
        r0 = ground_shoot.data.r[100]
        pohozaev_residual(ground_shoot, ref_problem,
                          (r0, r0 * 1.0001))


# ------------------------------------------------------------ inequalities

GRID = RadialGrid.geometric(1e-8, 1.0 - 1e-6, 1500)


def _bump(rng):
    center = rng.uniform(math.log(1e-3), math.log(0.05))
    width = rng.uniform(0.2, 0.5)
    vals = np.exp(-((GRID.log_nodes - center) / width) ** 2)
    vals[vals < 1e-14] = 0.0
    return RadialFunction(GRID, vals)


def test_hardy_margin_nonnegative(rng):
    from hardyball.kernel import hyperbolic_dirichlet_energy
    for _ in range(20):
        u = _bump(rng)
        rhs = hyperbolic_dirichlet_energy(u, 5, method="nodal")
        assert hardy_check(u, 5, method="nodal") >= -1e-8 * rhs


def test_hardy_zero_function():
    u = RadialFunction(GRID, np.zeros(len(GRID)))
    assert hardy_check(u, 5) == 0.0


def test_hardy_sobolev_positive_and_scale_invariant(rng):
    u = _bump(rng)
    base = hardy_sobolev_check(u, 5, 1.0, -2.0, method="nodal")
    assert base > 0.0
    for lam in (0.5, 2.0, 5.0):
        moved = hyperbolic_scaling(u, lam, 5)
        q = hardy_sobolev_check(moved, 5, 1.0, -2.0, method="nodal")
        assert q == pytest.approx(base, rel=1e-5)


def test_hardy_sobolev_guards(rng):
    u = _bump(rng)
    with pytest.raises(VerificationError):
        hardy_sobolev_check(u, 5, 1.0, 2.25)   # threshold (n-2)^2/4
    zero = RadialFunction(GRID, np.zeros(len(GRID)))
    with pytest.raises(VerificationError):
        hardy_sobolev_check(zero, 5, 1.0, -2.0)


# --------------------------------------------------------------- exponents

def _power_profile(expo):
    r = np.geomspace(1e-6, 0.4, 800)
    params = ProblemParams(n=5, s=1.0, gamma=-2.0)
    return SolutionProfile(
        data=ProfileData(r=r, v=r ** expo, dv=expo * r ** (expo - 1.0)),
        params=params, p_defect=0.0, K0=1.0, node_count=0, energy=1.0,
        residual_norm=0.0, boundary_value=r[-1] ** expo)


@pytest.mark.parametrize("expo", [-1.3, -0.5616, 0.0, 0.7])
def test_exponent_recovers_pure_powers(expo):
    slope, err = asymptotic_exponent(_power_profile(expo), (1e-5, 1e-2))
    assert slope == pytest.approx(expo, abs=1e-10)
    assert err <= 1e-10


def test_exponent_hyperbolic_mode():
    # v = G(r)^a has slope a against log G
    n, a = 5, 0.25
    r = np.geomspace(1e-6, 1e-3, 500)
    g = green_G(r, n)
    params = ProblemParams(n=n, s=1.0, gamma=-2.0)
    prof = SolutionProfile(
        data=ProfileData(r=r, v=g ** a, dv=np.gradient(g ** a, r)),
        params=params, p_defect=0.0, K0=1.0, node_count=0, energy=1.0,
        residual_norm=0.0, boundary_value=0.0)
    slope, _ = asymptotic_exponent(prof, (2e-6, 5e-4), mode="hyperbolic")
    assert slope == pytest.approx(a, rel=1e-6)


def test_exponent_on_ground_state(ground_shoot):
    bm, _ = beta_pm(5, -2.0)
    am = alpha_minus(5, -2.0)
    sl_e, _ = asymptotic_exponent(ground_shoot, (1e-5, 1e-3))
    assert sl_e == pytest.approx(-bm, rel=2e-2)
    sl_h, _ = asymptotic_exponent(ground_shoot, (1e-5, 1e-3),
                                  mode="hyperbolic")
    # near zero G ~ c r^{-(n-2)} so the two slopes are proportional
    assert sl_h == pytest.approx(am, rel=2e-2)


def test_exponent_guards():
    prof = _power_profile(-1.0)
    with pytest.raises(VerificationError):
        asymptotic_exponent(prof, (1e-6, 1.03e-6))  # too few nodes
    with pytest.raises(VerificationError):
        asymptotic_exponent(prof, (1e-5, 1e-2), mode="spherical")
    sign_flip = _power_profile(0.0)
    sign_flip.data.v[:] = np.sin(np.log(sign_flip.data.r))
    with pytest.raises(VerificationError):
        asymptotic_exponent(sign_flip, (1e-5, 1e-2))


# ------------------------------------------------------------ reports etc.

def test_energy_levels_table(ground_shoot):
    @dataclass
    class Lite:
        node_count: int
        p_defect: float
        energy: float

    table = energy_levels([Lite(1, 0.2, 5.0), ground_shoot])
    assert table["all_positive"]
    assert [row["node_count"] for row in table["rows"]] == [0, 1]
    assert table["monotone_in_node_count"] == \
        (table["rows"][0]["energy"] <= 5.0)
    empty = energy_levels([])
    assert empty["rows"] == [] and empty["all_positive"]


def test_verification_report():
    rep = VerificationReport(provenance={"case": "unit"})
    rep.add("small", 1e-9, 1e-6)
    rep.add("flagged", 2.0, 1.0)
    assert not rep.passed
    d = rep.as_dict()
    assert d["provenance"] == {"case": "unit"}
    assert [c["passed"] for c in d["checks"]] == [True, False]
    rep2 = VerificationReport()
    rep2.add("forced", 5.0, 1.0, passed=True)
    assert rep2.passed
