"""Radial solvers for the flat singular Dirichlet problem: outward shooting
with a singular-endpoint jet, nodal targeting, a variational cross-check,
subcritical continuation, the entire-space limit profile, and the linear
comparison pair."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.sparse import diags
from scipy.sparse.linalg import splu

from .bridge import EuclideanProblem, _quadratic_form_matrices
from .constants import ProblemParams, beta_pm, critical_exponent
from .kernel import sphere_area


class SolverError(RuntimeError):
    pass


class BracketNotFound(SolverError):
    def __init__(self, message, node_counts=None):
        super().__init__(message)
        self.node_counts = node_counts or {}


@dataclass
class ProfileData:
    """Radial samples (log-uniform) with derivative, free of ball bounds."""
    r: np.ndarray
    v: np.ndarray
    dv: np.ndarray

    def spline(self):
        return CubicSpline(np.log(self.r), self.v)

    def dspline(self):
        return CubicSpline(np.log(self.r), self.dv)

    def node_count(self) -> int:
        interior = self.v[:-1]
        s = np.sign(interior[np.abs(interior) > 1e-13 * np.max(np.abs(self.v))])
        if len(s) == 0:
            return 0
        return int(np.count_nonzero(np.diff(s) != 0))


@dataclass
class SolutionProfile:
    data: ProfileData
    params: ProblemParams
    p_defect: float
    K0: float
    node_count: int
    energy: float
    residual_norm: float
    boundary_value: float
    diverged: bool = False
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ContinuationSchedule:
    p_values: tuple
    warm_start: bool = True

    def __post_init__(self):
        ps = tuple(float(p) for p in self.p_values)
        object.__setattr__(self, "p_values", ps)
        if any(b >= a for a, b in zip(ps, ps[1:])):
            raise ValueError("schedule must be strictly decreasing")


@dataclass
class ComparisonPair:
    H_profile: ProfileData
    eigen_profile: ProfileData
    eigenvalue: float
    gamma_prime: float


def frobenius_init(params: ProblemParams, problem: EuclideanProblem,
                   K: float, r0: float, p: float):
    """Leading jet v = K r^{-beta_minus} (1 + a1 r^2) at the singular end;
    the first correction balances the (locally constant) linear potential."""
    n, gamma = params.n, params.gamma
    bm, _ = beta_pm(n, gamma)
    sigma = -bm
    h0 = float(problem.h(r0))
    denom = (sigma + 2.0) * (sigma + n) + gamma
    a1 = -h0 / denom if abs(denom) > 1e-12 else 0.0
    v = K * r0 ** sigma * (1.0 + a1 * r0 ** 2)
    dv = K * (sigma * r0 ** (sigma - 1.0) + a1 * (sigma + 2.0) * r0 ** (sigma + 1.0))
    return v, dv


def _rhs_factory(params: ProblemParams, problem: EuclideanProblem, p: float,
                 guard: float):
    """ODE in log radius t: v_tt = -(n-2) v_t - (gamma + h r^2) v - b |v|^{q-2-p} v r^{2-s}."""
    n, gamma, s = params.n, params.gamma, params.s
    q = critical_exponent(n, s)
    expo = q - 2.0 - p
    nm2 = n - 2.0
    h_fun = problem.h
    b_fun = problem.b
    h_const = None
    if problem.h_spec == "paper" and n >= 5:
        h_const = float(problem.h(0.1))

    def rhs(t, y):
        v, vt = y
        r = math.exp(t)
        h = h_const if h_const is not None else float(h_fun(r))
        b = float(b_fun(r))
        nonlin = b * abs(v) ** expo * v * r ** (2.0 - s)
        return (vt, -nm2 * vt - (gamma + h * r * r) * v - nonlin)

    def blow_event(t, y):
        return guard - abs(y[0])
    blow_event.terminal = True

    return rhs, blow_event


def shoot(params: ProblemParams, problem: EuclideanProblem, K: float,
          p: float, r0: float = None, num: int = 3000,
          rtol: float = 1e-11, atol_scale: float = 1e-13) -> SolutionProfile:
    """Integrate the radial equation outward from the singular-end jet and
    return the (un-matched) trajectory."""
    R = problem.domain_radius
    if r0 is None:
        r0 = 1e-5 * R
    v0, dv0 = frobenius_init(params, problem, K, r0, p)
    guard = 1e12 * max(abs(K), abs(v0), 1.0)
    rhs, blow_event = _rhs_factory(params, problem, p, guard)
    t0, t1 = math.log(r0), math.log(R)
    y0 = (v0, dv0 * r0)  # v_t = r v'
    scale = max(abs(v0), abs(K))
    sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853", rtol=rtol,
                    atol=atol_scale * scale, events=blow_event,
                    dense_output=True)
    diverged = sol.status == 1
    t_end = sol.t[-1]
    t = np.linspace(t0, t_end, num)
    vals = sol.sol(t)
    r = np.exp(t)
    data = ProfileData(r=r, v=vals[0], dv=vals[1] / r)
    return SolutionProfile(
        data=data, params=params, p_defect=p, K0=K,
        node_count=data.node_count(), energy=math.nan,
        residual_norm=math.nan, boundary_value=float(vals[0][-1]),
        diverged=diverged, meta={"r0": r0, "R": R})


def _count_nodes_and_boundary(profile: SolutionProfile):
    return profile.node_count, profile.boundary_value, profile.diverged


def euclidean_energy(profile: SolutionProfile,
                     problem: EuclideanProblem) -> float:
    """Value of the action functional (quadratic part minus the weighted
    power term) at the profile, by spline quadrature."""
    params = profile.params
    n, gamma, s = params.n, params.gamma, params.s
    pf = critical_exponent(n, s) - profile.p_defect
    d = profile.data
    t = np.log(d.r)
    r = d.r
    omega = sphere_area(n)
    quad_part = (d.dv ** 2 - gamma * d.v ** 2 / r ** 2
                 - problem.h(r) * d.v ** 2) * r ** float(n)
    nl_part = problem.b(r) * np.abs(d.v) ** pf * r ** (n - s)
    I_quad = CubicSpline(t, quad_part).integrate(t[0], t[-1])
    I_nl = CubicSpline(t, nl_part).integrate(t[0], t[-1])
    return omega * (0.5 * I_quad - I_nl / pf)


def dirichlet_norm_sq(profile: SolutionProfile) -> float:
    d = profile.data
    t = np.log(d.r)
    integ = d.dv ** 2 * d.r ** profile.params.n
    return sphere_area(profile.params.n) * CubicSpline(t, integ).integrate(
        t[0], t[-1])


def fit_K0(profile: SolutionProfile) -> float:
    """Hopf coefficient lim r^{beta_-} v, averaged over the inner decade."""
    bm, _ = beta_pm(profile.params.n, profile.params.gamma)
    r = profile.data.r
    mask = r <= r[0] * 10.0
    return float(np.mean(profile.data.v[mask] * r[mask] ** bm))


def _pde_residual_norm(profile: SolutionProfile,
                       problem: EuclideanProblem) -> float:
    """Relative sup of the strong-form residual, recomputed by finite
    differences from the stored samples (independent of the integrator)."""
    params = profile.params
    n, gamma, s = params.n, params.gamma, params.s
    q = critical_exponent(n, s)
    d = profile.data
    t = np.log(d.r)
    from .grids import log_derivative_matrix_apply
    vt = log_derivative_matrix_apply(t, d.v)
    vtt = log_derivative_matrix_apply(t, vt)
    r = d.r
    lap = (vtt + (n - 2.0) * vt) / r ** 2
    res = (-lap - (gamma / r ** 2 + problem.h(r)) * d.v
           - problem.b(r) * np.abs(d.v) ** (q - 2.0 - profile.p_defect)
           * d.v / r ** s)
    scale = np.max(np.abs(lap)) + 1e-300
    # skip a few nodes at each end (one-sided stencils)
    return float(np.max(np.abs(res[4:-4])) / scale)


def solve_dirichlet_shooting(params: ProblemParams, problem: EuclideanProblem,
                             p: float, node_target: int = 0,
                             K_range: tuple = (1e-4, 1e6),
                             scan_points: int = 61,
                             boundary_tol: float = 1e-8,
                             r0: float = None,
                             rtol: float = 1e-11) -> SolutionProfile:
    """Find K > 0 with v(R) = 0 and exactly node_target interior sign
    changes, by monotone bracketing of the node count in K."""
    lo, hi = K_range
    Ks = np.geomspace(lo, hi, scan_points)
    counts = {}

    def nodes_at(K):
        # sign changes including the boundary sample: the count jumps
        # exactly when a zero crosses the outer boundary, which is the
        # shooting condition
        prof = shoot(params, problem, K, p, r0=r0, num=1200, rtol=rtol)
        v = prof.data.v
        s = np.sign(v[np.abs(v) > 1e-13 * np.max(np.abs(v))])
        nc = int(np.count_nonzero(np.diff(s) != 0)) if len(s) else 0
        counts[K] = nc
        return nc, prof

    K_lo = K_hi = None
    prev_K, prev_nc = None, None
    for K in Ks:
        nc, _ = nodes_at(K)
        if prev_K is not None and prev_nc <= node_target and nc > node_target:
            K_lo, K_hi = prev_K, K
            break
        prev_K, prev_nc = K, nc
    if K_lo is None:
        raise BracketNotFound(
            f"no node-count transition through {node_target} on the scan "
            f"range", node_counts=counts)

    # bisect on the transition; at the jump the new zero sits at the boundary
    for _ in range(200):
        mid = math.sqrt(K_lo * K_hi)
        if not (K_lo < mid < K_hi):
            break
        nc, _ = nodes_at(mid)
        if nc > node_target:
            K_hi = mid
        else:
            K_lo = mid
        if (K_hi - K_lo) < 1e-15 * K_hi:
            break

    best = shoot(params, problem, K_lo, p, r0=r0, num=3000, rtol=rtol)
    sup = np.max(np.abs(best.data.v))
    if abs(best.boundary_value) > boundary_tol * sup:
        alt = shoot(params, problem, K_hi, p, r0=r0, num=3000, rtol=rtol)
        if abs(alt.boundary_value) < abs(best.boundary_value) and \
                alt.node_count == node_target:
            best = alt
        sup = np.max(np.abs(best.data.v))
        if abs(best.boundary_value) > boundary_tol * sup:
            raise SolverError(
                f"boundary value {best.boundary_value:.3e} above tolerance "
                f"{boundary_tol:g} * sup {sup:.3e}")
    best.energy = euclidean_energy(best, problem)
    best.K0 = fit_K0(best)
    best.node_count = node_target
    best.residual_norm = _pde_residual_norm(best, problem)
    best.meta.update({"K_shoot": K_lo, "boundary_tol": boundary_tol})
    return best


def solve_variational(params: ProblemParams, problem: EuclideanProblem,
                      p: float, r0: float = None, num: int = 1600,
                      max_iter: int = 4000, gtol: float = 1e-10,
                      seed: int = 7) -> SolutionProfile:
    """Ground-state candidate by projected gradient descent constrained to
    the zero set of the radial fibering derivative."""
    n, gamma, s = params.n, params.gamma, params.s
    pf = critical_exponent(n, s) - p
    R = problem.domain_radius
    if r0 is None:
        r0 = 1e-5 * R
    A, _ = _quadratic_form_matrices(problem, r0, num)
    t = np.linspace(math.log(r0), math.log(R), num)
    ht = t[1] - t[0]
    r = np.exp(t)
    lump = np.zeros(num)
    lump[:-1] += 0.5 * ht
    lump[1:] += 0.5 * ht
    w_nl = (lump * problem.b(r) * r ** (n - s))[:-1]  # Dirichlet end dropped
    r_in = r[:-1]
    omega = sphere_area(n)

    def B(u):
        return float(w_nl @ np.abs(u) ** pf)

    def project(u):
        qa = float(u @ (A @ u))
        bb = B(u)
        if bb <= 0 or qa <= 0:
            raise SolverError("degenerate iterate on the constraint set")
        return (qa / bb) ** (1.0 / (pf - 2.0)) * u

    def energy(u):
        return omega * (0.5 * float(u @ (A @ u)) - B(u) / pf)

    lu = splu(A.tocsc())

    def grad(u):
        # descent direction preconditioned by the quadratic form (descent
        # in the energy inner product); cures the stiffness of the raw
        # Euclidean gradient
        raw = A @ u - w_nl * np.abs(u) ** (pf - 2.0) * u
        return lu.solve(raw), raw

    # positive bump initial guess
    u = np.exp(-((t[:-1] - math.log(0.3 * R)) / 0.8) ** 2)
    u = project(u)
    e = energy(u)
    step = 1.0
    stalled = False
    flat_runs = 0
    for it in range(max_iter):
        g, raw = grad(u)
        gn = math.sqrt(abs(float(raw @ g))) * omega  # energy norm of I'
        if gn < gtol * max(1.0, abs(e)):
            break
        trial_step = step * 2.0
        while True:
            cand = project(u - trial_step * g)
            e_cand = energy(cand)
            if e_cand < e - 1e-14 * abs(e) or trial_step < 1e-14:
                break
            trial_step *= 0.5
        if trial_step < 1e-14:
            stalled = True
            break
        # stop once the energy decrease sits at the round-off floor
        if e - e_cand < 1e-13 * abs(e):
            flat_runs += 1
            if flat_runs >= 8:
                u, e = cand, e_cand
                break
        else:
            flat_runs = 0
        u, e, step = cand, e_cand, trial_step
    v = np.concatenate([u, [0.0]])
    from .grids import log_derivative_matrix_apply
    dv = log_derivative_matrix_apply(t, v) / r
    data = ProfileData(r=r, v=v, dv=dv)
    prof = SolutionProfile(
        data=data, params=params, p_defect=p, K0=0.0,
        node_count=data.node_count(), energy=e,
        residual_norm=math.nan, boundary_value=0.0,
        meta={"iterations": it, "stalled": stalled, "grad_norm": gn})
    prof.K0 = fit_K0(prof)
    return prof


def continuation_to_critical(params: ProblemParams, problem: EuclideanProblem,
                             schedule: ContinuationSchedule,
                             node_target: int = 0,
                             K_range: tuple = (1e-4, 1e6)) -> list:
    """Warm-started solves along the decreasing defect schedule; records the
    Cauchy increments and the weighted sup norms used by the blow-up lab."""
    out = []
    k_range = K_range
    prev = None
    for idx, p in enumerate(schedule.p_values):
        try:
            try:
                prof = solve_dirichlet_shooting(params, problem, p,
                                                node_target=node_target,
                                                K_range=k_range)
            except SolverError:
                if k_range == K_range:
                    raise
                # warm bracket missed: fall back to the full scan range
                prof = solve_dirichlet_shooting(params, problem, p,
                                                node_target=node_target,
                                                K_range=K_range)
        except SolverError as exc:
            for sp in out:
                sp.meta["truncated_at"] = idx
                sp.meta["failure"] = str(exc)
            return out
        if schedule.warm_start:
            # the matched amplitude moves by orders of magnitude per step,
            # so the warm bracket must stay generous
            K = prof.meta["K_shoot"]
            k_range = (K / 1e4, K * 1e4)
        n = params.n
        q = critical_exponent(n, params.s)
        w = prof.data.r ** ((n - 2.0) / 2.0) * \
            np.abs(prof.data.v) ** (1.0 - p / (q - 2.0))
        prof.meta["weighted_sup"] = float(np.max(w))
        prof.meta["h1_norm_sq"] = dirichlet_norm_sq(prof)
        prof.meta["nonlinear_mass"] = nonlinear_mass(prof, problem)
        if prev is not None:
            sup_inc = _sup_diff(prev, prof)
            prof.meta["sup_increment"] = sup_inc
        prev = prof
        out.append(prof)
    return out


def nonlinear_mass(profile: SolutionProfile,
                   problem: EuclideanProblem) -> float:
    """integral of b |v|^{q-p} / |x|^s over the ball."""
    params = profile.params
    n, s = params.n, params.s
    pf = critical_exponent(n, s) - profile.p_defect
    d = profile.data
    t = np.log(d.r)
    integ = problem.b(d.r) * np.abs(d.v) ** pf * d.r ** (n - s)
    return sphere_area(n) * CubicSpline(t, integ).integrate(t[0], t[-1])


def _sup_diff(a: SolutionProfile, b: SolutionProfile) -> float:
    ra = a.data.r
    sa = a.data.spline()
    sb = b.data.spline()
    t = np.log(ra)
    diff = np.abs(sa(t) - sb(t))
    return float(np.max(diff) / max(np.max(np.abs(a.data.v)),
                                    np.max(np.abs(b.data.v))))


@dataclass
class EntireBubble:
    """Positive entire radial solution of the limit equation on (0, inf)."""
    data: ProfileData
    n: int
    s: float
    gamma: float
    b0: float
    K_minus: float
    K_plus: float
    psi_peak: float
    meta: dict = field(default_factory=dict)


def bubble_closed_form(n: int, s: float, gamma: float, b0: float,
                       r) -> np.ndarray:
    """Explicit connecting profile of the autonomous reduction; used as an
    independent cross-check of the integrated bubble."""
    bm, bp = beta_pm(n, gamma)
    q = critical_exponent(n, s)
    nu = (n - 2.0) / 2.0
    a = nu * nu - gamma
    psi_max = (a * q / (2.0 * b0)) ** (1.0 / (q - 2.0))
    alpha = math.sqrt(a) * (q - 2.0) / 2.0
    t = np.log(np.asarray(r, dtype=float))
    psi = psi_max * np.cosh(alpha * t) ** (-2.0 / (q - 2.0))
    return np.asarray(r, dtype=float) ** (-nu) * psi


def solve_limit_equation(n: int, s: float, gamma: float, b0: float,
                         decades: float = 6.0, num: int = 4001,
                         rtol: float = 1e-12,
                         tail_switch: float = 1e-5) -> EntireBubble:
    """Entire positive radial profile connecting the two indicial branches.

    The autonomous (log-radius) reduction makes the connecting orbit the
    symmetric trajectory through its turning point, so the two-sided
    shooting is integrated once from the turning point and reflected;
    beyond the reliable range the matched indicial tails take over."""
    bm, bp = beta_pm(n, gamma)
    q = critical_exponent(n, s)
    nu = (n - 2.0) / 2.0
    a = nu * nu - gamma
    psi_max = (a * q / (2.0 * b0)) ** (1.0 / (q - 2.0))

    def rhs(t, y):
        psi, dpsi = y
        return (dpsi, a * psi - b0 * abs(psi) ** (q - 2.0) * psi)

    T_half = decades * math.log(10.0) / 2.0
    t_half = np.linspace(0.0, T_half, (num + 1) // 2)
    sol = solve_ivp(rhs, (0.0, T_half), (psi_max, 0.0), method="DOP853",
                    rtol=rtol, atol=1e-14 * psi_max, dense_output=True)
    psi_half = sol.sol(t_half)[0]

    # matched exponential tail past the switch amplitude
    sq = math.sqrt(a)
    cut = psi_half > tail_switch * psi_max
    if not cut.all():
        i_cut = int(np.argmin(cut))
        t_cut = t_half[i_cut]
        amp = psi_half[i_cut] * math.exp(sq * t_cut)
        psi_half = np.where(cut, psi_half, amp * np.exp(-sq * t_half))
    t = np.concatenate([-t_half[::-1][:-1], t_half])
    psi = np.concatenate([psi_half[::-1][:-1], psi_half])
    r = np.exp(t)
    w = r ** (-nu) * psi
    from .grids import log_derivative_matrix_apply
    dw = log_derivative_matrix_apply(t, w) / r
    data = ProfileData(r=r, v=w, dv=dw)
    # indicial coefficients from the tails: w ~ K_- r^{-bm} at 0 and
    # w ~ K_+ r^{-bp} at infinity
    K_minus = float(w[0] * r[0] ** bm)
    K_plus = float(w[-1] * r[-1] ** bp)
    return EntireBubble(data=data, n=n, s=s, gamma=gamma, b0=b0,
                        K_minus=K_minus, K_plus=K_plus, psi_peak=psi_max,
                        meta={"decades": decades})


def bubble_nehari_gap(bubble: EntireBubble) -> float:
    """Relative gap in the integral identity obtained by testing the limit
    equation with its own solution."""
    n, s, gamma, b0 = bubble.n, bubble.s, bubble.gamma, bubble.b0
    q = critical_exponent(n, s)
    d = bubble.data
    t = np.log(d.r)
    grad = CubicSpline(t, d.dv ** 2 * d.r ** float(n)).integrate(t[0], t[-1])
    hardy = CubicSpline(t, d.v ** 2 * d.r ** (n - 2.0)).integrate(t[0], t[-1])
    nl = CubicSpline(t, np.abs(d.v) ** q * d.r ** (n - s)).integrate(
        t[0], t[-1])
    lhs = grad - gamma * hardy
    rhs = b0 * nl
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs))


def comparison_pair(params: ProblemParams, problem: EuclideanProblem,
                    gamma_prime: float, r0: float = 1e-6,
                    num: int = 3000) -> ComparisonPair:
    """Singular positive supersolution (backward sweep from the boundary)
    and the principal eigen-pair of the shifted linear operator."""
    n = params.n
    bm, bp = beta_pm(n, params.gamma)
    if not (params.gamma < gamma_prime < (n - 2.0) ** 2 / 4.0):
        raise ValueError("gamma' must lie strictly between gamma and the "
                         "Hardy threshold")
    R = problem.domain_radius
    nm2 = n - 2.0

    def rhs(t, y):
        v, vt = y
        r = math.exp(t)
        h = float(problem.h(r))
        return (vt, -nm2 * vt - (gamma_prime + h * r * r) * v)

    t0, t1 = math.log(r0), math.log(R)
    sol = solve_ivp(rhs, (t1, t0), (0.0, -1.0), method="DOP853",
                    rtol=1e-11, atol=1e-14, dense_output=True)
    t = np.linspace(t0, t1, num)
    vals = sol.sol(t)
    r = np.exp(t)
    H = ProfileData(r=r, v=vals[0], dv=vals[1] / r)

    # principal eigen-pair of -Lap - gamma'/r^2 - h against the plain mass
    shifted = EuclideanProblem(
        params=ProblemParams(n=n, s=params.s, gamma=gamma_prime,
                             lam=params.lam, theta=params.theta,
                             c=params.c),
        domain_radius=R, h_spec=problem.h_spec, b_spec=problem.b_spec,
        lowdim=problem.lowdim)
    A, _ = _quadratic_form_matrices(shifted, r0, num)
    tg = np.linspace(t0, t1, num)
    ht = tg[1] - tg[0]
    rg = np.exp(tg)
    lump = np.zeros(num)
    lump[:-1] += 0.5 * ht
    lump[1:] += 0.5 * ht
    M = diags((lump * rg ** float(n))[:-1], format="csc")
    lam, x = _smallest_pencil_eig(A, M)
    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    phi1 = np.concatenate([x, [0.0]])
    from .grids import log_derivative_matrix_apply
    dphi = log_derivative_matrix_apply(tg, phi1) / rg
    eig = ProfileData(r=rg, v=phi1, dv=dphi)
    return ComparisonPair(H_profile=H, eigen_profile=eig,
                          eigenvalue=float(lam), gamma_prime=gamma_prime)


def _smallest_pencil_eig(A, M, tol: float = 1e-12, max_iter: int = 300):
    rng = np.random.default_rng(2024)
    x = rng.standard_normal(A.shape[0])
    x /= math.sqrt(abs(x @ (M @ x)))
    sigma = 0.0
    lam = x @ (A @ x)
    for _ in range(max_iter):
        lu = splu((A - sigma * M).tocsc())
        for _ in range(3):
            y = lu.solve(M @ x)
            ny = math.sqrt(abs(y @ (M @ y)))
            x = y / ny
        new_lam = (x @ (A @ x)) / (x @ (M @ x))
        if abs(new_lam - lam) <= tol * max(1.0, abs(new_lam)):
            return new_lam, x
        lam = new_lam
        sigma = lam * (1.0 - 1e-8) - 1e-12
    return lam, x
