"""Dictionary between the ball problem and its flat singular reduction:
conformal factor, induced potential and weight, solution transport, the
coercivity constant, and an exactness check of the correspondence."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.sparse import diags

from .constants import ProblemParams, critical_exponent
from .grids import RadialFunction, log_derivative_matrix_apply
from .kernel import DomainError, green_density, green_G, weight_V_p


@dataclass(frozen=True)
class LowDimConstants:
    """Free additive constants of the low-dimension potential branches."""
    c3: float = 0.0
    c4: float = 0.0


def phi(r, n: int):
    r = np.asarray(r, dtype=float)
    if np.any(r >= 1.0) or np.any(r < 0.0):
        raise DomainError("radius must lie in [0, 1)")
    out = (2.0 / (1.0 - r * r)) ** ((n - 2.0) / 2.0)
    return float(out) if out.ndim == 0 else out


def h_gamma_lambda(r, params: ProblemParams,
                   lowdim: LowDimConstants = LowDimConstants()):
    """Leading behavior of the induced linear potential.

    For n >= 5 this is an exact constant; for n = 3, 4 only the leading
    singular term plus a free constant is known, so those runs are
    qualitative."""
    n, gamma, lam = params.n, params.gamma, params.lam
    r = np.asarray(r, dtype=float)
    if n >= 5:
        val = 4.0 * (n - 2.0) / (n - 4.0) * gamma + 4.0 * lam - n * (n - 2.0)
        out = np.full_like(r, val, dtype=float)
    elif n == 3:
        out = 4.0 * gamma / r + lowdim.c3
    else:  # n == 4
        out = 8.0 * gamma * np.log(1.0 / r) + lowdim.c4
    return float(out) if out.ndim == 0 else out


def euclidean_potential(r, n: int, gamma: float, lam: float):
    """Exact flat-side potential gamma/r^2 + h(r) induced by the conformal
    substitution (all dimensions, no truncation)."""
    r = np.asarray(r, dtype=float)
    conf2 = (2.0 / (1.0 - r * r)) ** 2
    V2 = weight_V_p(r, n, 2.0)
    out = (gamma * V2 + lam - n * (n - 2.0) / 4.0) * conf2
    return float(out) if np.ndim(out) == 0 else out


def h_conformal(r, n: int, gamma: float, lam: float):
    """Exact induced h: the full flat potential minus the Hardy part."""
    r = np.asarray(r, dtype=float)
    out = euclidean_potential(r, n, gamma, lam) - gamma / r ** 2
    return float(out) if np.ndim(out) == 0 else out


def b_weight(r, n: int, s: float):
    """Flat-side nonlinearity weight induced by the conformal substitution:
    b(r) = V_q(r) r^s phi(r)^{2* - q} with q the critical exponent for s.

    Continuous and positive on (0, 1) with the closed-form value
    (n-2)^{(2-s)/(n-2)} / 2^{2-s} at the origin."""
    q = critical_exponent(n, s)
    two_star = critical_exponent(n, 0.0)
    r = np.asarray(r, dtype=float)
    out = weight_V_p(r, n, q) * r ** s * phi(r, n) ** (two_star - q)
    return float(out) if np.ndim(out) == 0 else out


def b_origin(n: int, s: float) -> float:
    return (n - 2.0) ** ((2.0 - s) / (n - 2.0)) / 2.0 ** (2.0 - s)


def to_euclidean(u: RadialFunction, n: int) -> RadialFunction:
    return u.with_values(u.values * phi(u.grid.nodes, n))


def to_hyperbolic(v: RadialFunction, n: int) -> RadialFunction:
    return v.with_values(v.values / phi(v.grid.nodes, n))


@dataclass
class EuclideanProblem:
    """Flat Dirichlet problem on the centered ball of radius R < 1."""

    params: ProblemParams
    domain_radius: float = 0.5
    h_spec: object = "paper"     # "paper" | callable h(r)
    b_spec: object = "paper"     # "paper" | positive float | callable b(r)
    lowdim: LowDimConstants = field(default_factory=LowDimConstants)

    _b_spline: CubicSpline = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not (0.0 < self.domain_radius < 1.0):
            raise DomainError("domain radius must lie in (0, 1)")

    def h(self, r):
        if self.h_spec == "paper":
            return h_gamma_lambda(r, self.params, self.lowdim)
        return self.h_spec(r)

    def h_radial_slope(self, r):
        """r -> dh/dr; zero for the constant (n >= 5) branch."""
        r = np.asarray(r, dtype=float)
        if self.h_spec == "paper":
            n = self.params.n
            if n >= 5:
                out = np.zeros_like(r)
            elif n == 3:
                out = -4.0 * self.params.gamma / r ** 2
            else:
                out = -8.0 * self.params.gamma / r
            return float(out) if out.ndim == 0 else out
        # centered difference for user-supplied tables
        dr = 1e-6 * r
        return (self.h(r + dr) - self.h(r - dr)) / (2.0 * dr)

    def _ensure_b_spline(self):
        if self._b_spline is None:
            t = np.linspace(math.log(1e-8), math.log(self.domain_radius), 400)
            vals = b_weight(np.exp(t), self.params.n, self.params.s)
            self._b_spline = CubicSpline(t, vals)

    def b(self, r):
        if self.b_spec == "paper":
            self._ensure_b_spline()
            out = self._b_spline(np.log(np.asarray(r, dtype=float)))
            return float(out) if np.ndim(out) == 0 else out
        if callable(self.b_spec):
            return self.b_spec(r)
        r = np.asarray(r, dtype=float)
        out = np.full_like(r, float(self.b_spec), dtype=float)
        return float(out) if out.ndim == 0 else out

    def b_radial_slope(self, r):
        r = np.asarray(r, dtype=float)
        if self.b_spec == "paper":
            self._ensure_b_spline()
            out = self._b_spline(np.log(r), 1) / r
            return float(out) if np.ndim(out) == 0 else out
        if callable(self.b_spec):
            dr = 1e-6 * r
            return (self.b(r + dr) - self.b(r - dr)) / (2.0 * dr)
        out = np.zeros_like(r)
        return float(out) if out.ndim == 0 else out


class CoercivityFailure(RuntimeError):
    def __init__(self, message, last_quotient=None):
        super().__init__(message)
        self.last_quotient = last_quotient


def _quadratic_form_matrices(problem: EuclideanProblem, r0: float, num: int):
    """Tridiagonal P1 discretization (in log radius) of the quadratic form
    and of the Dirichlet energy, with the radial measure lumped at nodes.

    Dirichlet condition at the outer boundary, natural at the inner cutoff."""
    n = problem.params.n
    gamma = problem.params.gamma
    t = np.linspace(math.log(r0), math.log(problem.domain_radius), num)
    ht = t[1] - t[0]
    r = np.exp(t)
    # stiffness and Hardy mass share the weight r^{n-2} dt
    w_mid = np.exp((n - 2.0) * 0.5 * (t[:-1] + t[1:]))
    main = np.zeros(num)
    main[:-1] += w_mid / ht
    main[1:] += w_mid / ht
    off = -w_mid / ht
    S = diags([off, main, off], [-1, 0, 1], format="csc")
    # lumped masses
    lump = np.zeros(num)
    lump[:-1] += 0.5 * ht
    lump[1:] += 0.5 * ht
    M_hardy = diags(lump * r ** (n - 2.0), format="csc")
    M_h = diags(lump * problem.h(r) * r ** float(n), format="csc")
    A = S - gamma * M_hardy - M_h
    # Dirichlet row at the outer end
    keep = np.arange(num - 1)
    return A[np.ix_(keep, keep)].tocsc(), S[np.ix_(keep, keep)].tocsc()


def _count_eigs_below(lam: float, ad, ae, md, me) -> int:
    """Number of pencil eigenvalues strictly below lam, from the inertia
    of the tridiagonal A - lam * M (Sturm sequence of the LDL^T pivots)."""
    d = ad - lam * md
    e = ae - lam * me
    count = 0
    prev = d[0]
    if prev == 0.0:
        prev = -1e-300
    if prev < 0.0:
        count += 1
    for k in range(1, len(d)):
        piv = d[k] - e[k - 1] ** 2 / prev
        if piv == 0.0:
            piv = -1e-300
        if piv < 0.0:
            count += 1
        prev = piv
    return count


def coercivity_lambda0(problem: EuclideanProblem, r0: float = 1e-6,
                       num: int = 2000, tol: float = 1e-11,
                       max_iter: int = 200) -> float:
    """Smallest generalized eigenvalue of the quadratic form against the
    Dirichlet energy.  Coercive iff the returned value is positive.

    Both discretized forms are tridiagonal, so the eigenvalue is located
    by bisection on the pencil inertia (Sturm-sequence pivot counts);
    unlike vector iteration this is immune to the tight clustering these
    pencils exhibit."""
    A, M = _quadratic_form_matrices(problem, r0, num)
    ad, ae = A.diagonal(0).copy(), A.diagonal(1).copy()
    md, me = M.diagonal(0).copy(), M.diagonal(1).copy()
    if not (np.all(np.isfinite(ad)) and np.all(np.isfinite(md))):
        raise CoercivityFailure("non-finite discretized form")
    x = np.ones(A.shape[0])
    hi = float((x @ (A @ x)) / (x @ (M @ x)))  # >= lambda_min
    step = max(1.0, abs(hi))
    for _ in range(max_iter):
        if _count_eigs_below(hi, ad, ae, md, me) >= 1:
            break
        hi += step
        step *= 2.0
    else:
        raise CoercivityFailure("no eigenvalue bracketed from above",
                                last_quotient=hi)
    lo, step = hi, max(1.0, abs(hi))
    for _ in range(max_iter):
        lo -= step
        step *= 2.0
        if _count_eigs_below(lo, ad, ae, md, me) == 0:
            break
    else:
        raise CoercivityFailure("no eigenvalue bracketed from below",
                                last_quotient=lo)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if _count_eigs_below(mid, ad, ae, md, me) >= 1:
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def residual_equivalence_check(u: RadialFunction, problem: EuclideanProblem,
                               critical_weight: str = "paper") -> dict:
    """Compare the ball-side residual of u with the flat-side residual of
    the transported profile, after the conformal weight factor.

    Uses the exact induced potential and weight, so for smooth profiles the
    weighted difference vanishes at the differentiation order."""
    params = problem.params
    n, gamma, lam, s = params.n, params.gamma, params.lam, params.s
    q = critical_exponent(n, s)
    t = u.grid.log_nodes
    r = u.grid.nodes
    rho = 2.0 / (1.0 - r * r)

    # ball-side Laplacian: rho^-n r^{1-n} d/dr (rho^{n-2} r^{n-1} u')
    du_dt = log_derivative_matrix_apply(t, u.values)
    flux = rho ** (n - 2.0) * r ** (n - 1.0) * du_dt / r
    dflux_dt = log_derivative_matrix_apply(t, flux)
    lap_ball = dflux_dt / r / (rho ** float(n) * r ** (n - 1.0))
    V2 = weight_V_p(r, n, 2.0)
    Vq = weight_V_p(r, n, q)
    res_ball = (-lap_ball - gamma * V2 * u.values - lam * u.values
                - Vq * np.abs(u.values) ** (q - 2.0) * u.values)

    v = u.values * phi(r, n)
    dv_dt = log_derivative_matrix_apply(t, v)
    d2v_dt = log_derivative_matrix_apply(t, dv_dt)
    lap_flat = (d2v_dt + (n - 2.0) * dv_dt) / r ** 2
    W = euclidean_potential(r, n, gamma, lam)
    bw = b_weight(r, n, s)
    res_flat = (-lap_flat - W * v
                - bw * np.abs(v) ** (q - 2.0) * v / r ** s)

    weight = phi(r, n) ** ((n + 2.0) / (n - 2.0))
    diff = res_flat - weight * res_ball
    scale = max(np.max(np.abs(res_flat)), np.max(np.abs(weight * res_ball)),
                1e-300)
    return {
        "max_difference": float(np.max(np.abs(diff))),
        "relative_difference": float(np.max(np.abs(diff)) / scale),
        "ball_residual_max": float(np.max(np.abs(res_ball))),
        "flat_residual_max": float(np.max(np.abs(res_flat))),
    }
