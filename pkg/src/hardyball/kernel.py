"""Radial machinery of the Poincare ball: singular kernel, weights,
scaling, and weighted radial integrals."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .grids import RadialFunction, log_derivative_matrix_apply

_QUAD_EPS = 1e-12


class DomainError(ValueError):
    pass


class QuadratureError(RuntimeError):
    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


def sphere_area(n: int) -> float:
    """Area of the unit sphere in R^n (computed from the Gamma function)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True)
class HyperbolicMeasureContext:
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise DomainError("dimension must be >= 3")

    @property
    def surface_constant(self) -> float:
        return sphere_area(self.n)

    def conformal_factor(self, r) -> np.ndarray:
        return 2.0 / (1.0 - np.asarray(r, dtype=float) ** 2)


def green_density(r, n: int):
    """Radial density of the fundamental solution on the ball."""
    if n < 3:
        raise DomainError("dimension must be >= 3")
    r = np.asarray(r, dtype=float)
    # r = 1 is admitted as the (zero) limit so that quadrature panels may
    # touch the outer endpoint
    if np.any(r <= 0.0) or np.any(r > 1.0):
        raise DomainError("radius must lie in (0, 1)")
    out = (1.0 - r * r) ** (n - 2) / r ** (n - 1)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=200_000)
def _green_G_scalar(r: float, n: int) -> float:
    # Split at 1/2 and integrate the singular inner part in log coordinates,
    # where the integrand is a smooth decaying exponential.
    c = 0.5
    if 1.0 - r < 1e-9:
        # leading behavior of the vanishing tail; avoids a degenerate panel
        return (2.0 * (1.0 - r)) ** (n - 1) / (2.0 * (n - 1))
    if r >= c:
        val, err = quad(lambda t: green_density(t, n), r, 1.0,
                        epsabs=_QUAD_EPS, epsrel=_QUAD_EPS, limit=200)
        _check_quad(val, err)
        return val
    inner, ierr = quad(lambda x: green_density(math.exp(x), n) * math.exp(x),
                       math.log(r), math.log(c),
                       epsabs=_QUAD_EPS, epsrel=_QUAD_EPS, limit=400)
    outer, oerr = quad(lambda t: green_density(t, n), c, 1.0,
                       epsabs=_QUAD_EPS, epsrel=_QUAD_EPS, limit=200)
    val = inner + outer
    _check_quad(val, ierr + oerr)
    return val


def _check_quad(val, err):
    if not np.isfinite(val) or err > max(1e-9, 1e-8 * abs(val)):
        raise QuadratureError("quadrature did not converge",
                              estimate=val, error=err)


_green_G_array_cache: dict = {}


def green_G(r, n: int):
    """G(r): integral of the kernel density from r to 1.  Strictly
    decreasing, blows up at 0, vanishes at 1.  Array results are memoized
    per grid (profiles are repeatedly evaluated on shared grids)."""
    if np.ndim(r) == 0:
        if not (0.0 < r < 1.0):
            raise DomainError("radius must lie in (0, 1)")
        return _green_G_scalar(float(r), n)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0) or np.any(r >= 1.0):
        raise DomainError("radius must lie in (0, 1)")
    key = (n, hashlib.sha1(r.tobytes()).hexdigest())
    hit = _green_G_array_cache.get(key)
    if hit is not None:
        return hit.copy()
    # cumulative panels from the largest radius down: one adaptive panel
    # per gap, summed in decreasing order
    order = np.argsort(r)[::-1]
    out = np.empty_like(r)
    prev_r, prev_G = None, None
    for idx in order:
        ri = r[idx]
        if prev_r is None:
            prev_G = _green_G_scalar(float(ri), n)
        elif ri < prev_r:
            panel, err = quad(lambda x: green_density(math.exp(x), n) * math.exp(x),
                              math.log(ri), math.log(prev_r),
                              epsabs=_QUAD_EPS, epsrel=_QUAD_EPS, limit=200)
            _check_quad(panel + prev_G, err)
            prev_G = prev_G + panel
        out[idx] = prev_G
        prev_r = ri
    if len(_green_G_array_cache) < 64:
        _green_G_array_cache[key] = out.copy()
    return out


_TABLE_POINTS_PER_DECADE = 300
_table_cache: dict = {}


def _green_table(n: int, r_lo: float, r_hi: float):
    """Dense cached samples of log G on a log-radius grid covering
    [r_lo, r_hi]; rebuilt (and re-cached) only when the requested range
    grows.  Interpolation error is far below the quadrature tolerance."""
    r_hi = min(r_hi, 1.0 - 1e-9)
    cached = _table_cache.get(n)
    if cached is not None and cached[0] <= r_lo and cached[1] >= r_hi:
        return cached[2], cached[3]
    lo = min(r_lo, 1e-6, cached[0] if cached else 1e-6)
    hi = max(r_hi, 0.9, cached[1] if cached else 0.9)
    decades = math.log10(hi / lo)
    num = max(int(decades * _TABLE_POINTS_PER_DECADE), 400)
    t = np.linspace(math.log(lo), math.log(hi), num)
    G = green_G(np.exp(t), n)
    logG = np.log(G)
    _table_cache[n] = (lo, hi, t, logG)
    return t, logG


def green_G_inverse(g, n: int, tol: float = 1e-12):
    """Invert the monotone G.

    Scalar inputs use bracketed root finding on the exact quadrature;
    array inputs interpolate a dense cached table of log G against log r
    (the table is accurate to well below 1e-9 relative)."""
    scalar = np.ndim(g) == 0
    g_arr = np.atleast_1d(np.asarray(g, dtype=float))
    if np.any(g_arr <= 0.0):
        raise DomainError("G value must be positive")
    if scalar:
        gi = float(g_arr[0])
        lo, hi = 1e-3, 1.0 - 1e-14
        while _green_G_scalar(lo, n) < gi:
            lo *= 0.1
            if lo < 1e-300:
                raise DomainError("G value too large to invert")
        return brentq(lambda r: _green_G_scalar(r, n) - gi, lo, hi,
                      xtol=1e-300, rtol=1e-15, maxiter=200)
    # coverage radii from the asymptotic slopes, padded by a decade
    r_lo = 1e-3
    while _green_G_scalar(r_lo, n) < np.max(g_arr):
        r_lo *= 0.1
        if r_lo < 1e-300:
            raise DomainError("G value too large to invert")
    r_hi = 1.0 - 1e-9
    t, logG = _green_table(n, 0.1 * r_lo, r_hi)
    # logG is strictly decreasing in t
    target = np.log(g_arr)
    if np.any(target < logG[-1]) or np.any(target > logG[0]):
        raise DomainError("G value outside the invertible table range")
    spline = CubicSpline(logG[::-1], t[::-1])
    return np.exp(spline(target))


def weight_V_p(r, n: int, p: float):
    """Singular weight attached to the exponent-p integral on the ball."""
    if p < 1:
        raise DomainError("exponent p must be >= 1")
    f = green_density(r, n)
    G = green_G(r, n)
    r = np.asarray(r, dtype=float)
    out = f ** 2 * (1.0 - r * r) ** 2 / (4.0 * (n - 2) ** 2 * G ** ((p + 2.0) / 2.0))
    return float(out) if np.ndim(out) == 0 else out


def hyperbolic_scaling(u: RadialFunction, lam: float, n: int) -> RadialFunction:
    """u_lam(r) = lam^{-1/2} u(G^{-1}(lam G(r))), sampled on u's grid.

    Radii pulled back outside the grid are allowed only where the profile
    has decayed to (numerical) zero at the corresponding end.
    """
    if lam <= 0:
        raise DomainError("scaling parameter must be positive")
    if lam == 1.0:
        return u.with_values(u.values.copy())
    r = u.grid.nodes
    g = green_G(r, n)
    rho = green_G_inverse(lam * g, n)
    atol = 1e-12 * np.max(np.abs(u.values))
    vals = lam ** -0.5 * u(rho, atol=atol)
    return u.with_values(vals)


def hyperbolic_integral(w, u: RadialFunction, q: float, n: int,
                        rtol: float = 1e-10,
                        method: str = "adaptive") -> float:
    """Integral of w(r)|u|^q over the ball in the hyperbolic volume,
    reduced to a radial quadrature on the sample support.

    w is a callable weight (or None for weight 1).  method "adaptive" uses
    Gauss-Kronrod panels on the interpolant; "nodal" integrates the spline
    of the node-sampled integrand (vectorized weight, much faster on
    shared grids, accurate at the interpolation order)."""
    t = u.grid.log_nodes
    if method == "nodal":
        r = u.grid.nodes
        wi = np.ones_like(r) if w is None else np.asarray(w(r), dtype=float)
        conf = 2.0 / (1.0 - r * r)
        vals = wi * np.abs(u.values) ** q * r ** n * conf ** n
        return sphere_area(n) * CubicSpline(t, vals).integrate(t[0], t[-1])
    if method != "adaptive":
        raise DomainError(f"unknown quadrature method {method!r}")
    spline = u.spline()

    def integrand(ti):
        ri = math.exp(ti)
        ui = spline(ti)
        wq = 1.0 if w is None else w(ri)
        conf = 2.0 / (1.0 - ri * ri)
        # dr = r dt
        return wq * abs(ui) ** q * ri ** (n - 1) * conf ** n * ri

    val, err = quad(integrand, t[0], t[-1], epsabs=1e-300, epsrel=rtol,
                    limit=800)
    if err > max(1e-12, 1e-6 * abs(val)):
        raise QuadratureError("hyperbolic integral did not converge",
                              estimate=val, error=err)
    return sphere_area(n) * val


def hyperbolic_dirichlet_energy(u: RadialFunction, n: int, q: float = 2.0,
                                rtol: float = 1e-10,
                                method: str = "adaptive") -> float:
    """integral of |grad_B u|^q in the hyperbolic volume; for q=2 this is
    the squared energy norm."""
    t = u.grid.log_nodes
    du_dt = log_derivative_matrix_apply(t, u.values)
    if method == "nodal":
        r = u.grid.nodes
        gradB = 0.5 * (1.0 - r * r) * np.abs(du_dt / r)
        conf = 2.0 / (1.0 - r * r)
        vals = gradB ** q * r ** n * conf ** n
        return sphere_area(n) * CubicSpline(t, vals).integrate(t[0], t[-1])
    if method != "adaptive":
        raise DomainError(f"unknown quadrature method {method!r}")
    dspline = CubicSpline(t, du_dt)

    def integrand(ti):
        ri = math.exp(ti)
        du_dr = dspline(ti) / ri
        gradB = 0.5 * (1.0 - ri * ri) * abs(du_dr)
        conf = 2.0 / (1.0 - ri * ri)
        return gradB ** q * ri ** (n - 1) * conf ** n * ri

    val, err = quad(integrand, t[0], t[-1], epsabs=1e-300, epsrel=rtol,
                    limit=800)
    if err > max(1e-12, 1e-6 * abs(val)):
        raise QuadratureError("dirichlet energy quadrature did not converge",
                              estimate=val, error=err)
    return sphere_area(n) * val
