"""Polar Levy density of the process family and its radial calculus.

For direction s and radius r > 0 the density against dr/r and surface measure,
restricted to the open orthant part of the Thorin measure, is

    h_s(r) = c_n int exp{r E(s,u)} kappa_{n/2}{r A(s,u)} dU(u) / D(s,u),

with c_n = 2 / (2 pi)^(n/2).  Its radial derivative moves under the integral
(one E-term minus an r A^2 kappa_{(n-2)/2} term), and when the A/D integral is
finite the derivative has the finite right limit

    c_n 2^((n-2)/2) Gamma(n/2) int E(s,u) dU(u) / D(s,u)   at r -> 0+.

Per measure component the u-integral collapses:

* atoms: plain sums of kernel evaluations;
* rays u = v * alpha: E and D are invariant along the ray while
  A(s, v alpha)^2 = (aa v + mm) qs, so a single radial quadrature remains
  (graded against density poles via a power substitution, truncated where the
  Bessel kernel is spent);
* curves: the parameter quadrature nodes are r-independent, so the geometric
  quantities are cached per direction.

Every term is assembled as exp(r E + ln kappa - ln D) to dodge overflow in
either factor.  Evaluations require n >= 2; n = 1 is not applicable here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel import kappa_log_grid
from .linalg import CovMatrix, as_vector, diamond_mat_raw
from .measures import Atom, Curve, Ray, ThorinMeasure, WvggParams
from .quadrature import IntegralResult, _leggauss, improper_integral

BESSEL_CUT = 80.0
_GRADE_DECADES = 10
_PANELS_PER_DECADE = 4
_GL_ORDER = 10
_KAPPA_H = 0.125   # kernel-grid step inside component quadratures


class NotApplicableError(Exception):
    """Raised when the polar-density machinery does not apply (n = 1)."""


def c_n(n: int) -> float:
    return 2.0 / (2.0 * math.pi) ** (n / 2.0)


# -- per-direction geometry ---------------------------------------------------

@dataclass
class _AtomGeom:
    mass: np.ndarray
    e: np.ndarray
    a: np.ndarray
    logd: np.ndarray


@dataclass
class _RayGeom:
    e: float
    logd: float
    qs: float
    aa: float
    mm: float
    density: object

    def a_of_v(self, v: np.ndarray) -> np.ndarray:
        return np.sqrt((self.aa * v + self.mm) * self.qs)


@dataclass
class _CurveGeom:
    nodes: np.ndarray
    weights: np.ndarray
    e: np.ndarray
    a: np.ndarray
    logd: np.ndarray


def _quantities_at(mu, sigma, s, us: np.ndarray):
    """(E, A, log D, qs) for a batch of orthant points us, shape (m, n)."""
    n = s.size
    mins = np.minimum(us[:, :, None], us[:, None, :])
    mats = mins * sigma[None, :, :]
    rhs = np.stack([np.broadcast_to(s, us.shape), us * mu[None, :]], axis=2)
    sols = np.linalg.solve(mats, rhs)
    qs = np.einsum("mk,mk->m", np.broadcast_to(s, us.shape), sols[:, :, 0])
    e = np.einsum("mk,mk->m", np.broadcast_to(s, us.shape), sols[:, :, 1])
    drift = np.einsum("mk,mk->m", us * mu[None, :], sols[:, :, 1])
    a = np.sqrt((2.0 * np.einsum("mk,mk->m", us, us) + drift) * qs)
    dets = np.linalg.det(mats)
    logd = (n / 2.0) * np.log(qs) + 0.5 * np.log(dets)
    return e, a, logd, qs


def _curve_breakpoints(c: Curve, samples: int = 2001) -> list[float]:
    """Parameter values where the coordinate ordering of c(theta) changes.

    The pairwise-min matrix in the diamond product switches branch there, so
    the integrand has a derivative kink and panels must not straddle it.
    """
    lo, hi = c.interval
    ts = np.linspace(lo, hi, samples)
    pts = c.points(ts)
    n = pts.shape[1]
    brks = []
    for i in range(n):
        for j in range(i + 1, n):
            diff = pts[:, i] - pts[:, j]
            flips = np.nonzero(np.sign(diff[:-1]) * np.sign(diff[1:]) < 0)[0]
            for k in flips:
                a, b = float(ts[k]), float(ts[k + 1])
                fa = float(diff[k])
                for _ in range(80):
                    m = 0.5 * (a + b)
                    pm = c.points(np.array([m]))[0]
                    fm = float(pm[i] - pm[j])
                    if fa * fm <= 0:
                        b = m
                    else:
                        a, fa = m, fm
                    if b - a < 1e-14 * max(1.0, abs(b)):
                        break
                brks.append(0.5 * (a + b))
    return sorted(brks)


def _curve_param_nodes(c: Curve, halves: int = 30):
    """Panel nodes for a curve component: log-graded toward the interval
    endpoints, split exactly at ordering kinks, smooth segments GL-composite."""
    lo, hi = c.interval
    span = hi - lo
    seg_edges = [lo] + [b for b in _curve_breakpoints(c) if lo < b < hi] + [hi]
    edges_list = []
    for a, b in zip(seg_edges[:-1], seg_edges[1:]):
        inner = np.linspace(a, b, 13)[1:-1]
        if a == lo:
            left = a + (b - a) * np.geomspace(1e-12, 0.5, halves)
        else:
            left = a + (b - a) * np.geomspace(1e-8, 0.5, 12)
        if b == hi:
            right = b - (b - a) * np.geomspace(1e-12, 0.5, halves)[::-1]
        else:
            right = b - (b - a) * np.geomspace(1e-8, 0.5, 12)[::-1]
        edges_list.append(np.unique(np.concatenate([[a], left, inner, right, [b]])))
    x, w = _leggauss(_GL_ORDER)
    nodes_all, weights_all = [], []
    for edges in edges_list:
        a, b = edges[:-1], edges[1:]
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        nodes_all.append((mid[:, None] + half[:, None] * x[None, :]).ravel())
        weights_all.append((half[:, None] * w[None, :]).ravel())
    return np.concatenate(nodes_all), np.concatenate(weights_all)


class _DirectionGeometry:
    """Cached component geometry for one direction s."""

    def __init__(self, params: WvggParams, s):
        if params.n < 2:
            raise NotApplicableError("polar density needs n >= 2")
        self.params = params
        self.s = as_vector(s, params.n)
        if not np.any(self.s):
            raise ValueError("direction must be nonzero")
        if not params.sigma.invertible:
            raise ValueError("Sigma must be invertible")
        mu, sigma = params.mu, params.sigma.entries
        self.atoms: _AtomGeom | None = None
        self.rays: list[_RayGeom] = []
        self.curve_geoms: list[_CurveGeom] = []

        atom_pts = [c for c in params.U.positive_part() if isinstance(c, Atom)]
        if atom_pts:
            pts = np.stack([c.point for c in atom_pts])
            e, a, logd, _ = _quantities_at(mu, sigma, self.s, pts)
            self.atoms = _AtomGeom(np.array([c.mass for c in atom_pts]), e, a, logd)

        for c in params.U.positive_part():
            if isinstance(c, Ray):
                al = c.direction
                m = diamond_mat_raw(al, sigma)
                sol = np.linalg.solve(m, np.stack([self.s, al * mu], axis=1))
                qs = float(self.s @ sol[:, 0])
                e = float(self.s @ sol[:, 1])
                mm = float((al * mu) @ sol[:, 1])
                det = float(np.linalg.det(m))
                logd = (params.n / 2.0) * math.log(qs) + 0.5 * math.log(det)
                self.rays.append(_RayGeom(e, logd, qs, 2.0 * float(al @ al), mm,
                                          c.density))
            elif isinstance(c, Curve):
                nodes, weights = _curve_param_nodes(c)
                pts = c.points(nodes)
                e, a, logd, _ = _quantities_at(mu, sigma, self.s, pts)
                self.curve_geoms.append(_CurveGeom(nodes, weights, e, a, logd))


def _ray_vgrid(geo: _RayGeom, r: float):
    """Graded radial nodes (v, y-jacobian weights) truncated at Bessel cutoff."""
    lo = geo.density.support_lo
    x_lo = r * geo.a_of_v(np.array([lo]))[0]
    x_hi = max(x_lo + BESSEL_CUT, BESSEL_CUT)
    v_cut = ((x_hi / r) ** 2 / geo.qs - geo.mm) / geo.aa
    v_cut = min(v_cut, geo.density.support_hi)
    if v_cut <= lo:
        return None
    q = 1.0 + min(getattr(geo.density, "pole_at_0", 0.0), 0.0)
    y_hi = (v_cut - lo) ** q
    # low end anchored absolutely (not to the r-dependent cutoff), so the
    # truncated tail mass cannot drift with r and pollute finite differences
    y_lo = max(y_hi * 1e-22, min(y_hi * 10.0 ** (-_GRADE_DECADES), 1e-12))
    decades = math.log10(y_hi / y_lo)
    panels = max(8, int(math.ceil(decades * _PANELS_PER_DECADE)))
    edges = np.geomspace(y_lo, y_hi, panels + 1)
    x, w = _leggauss(_GL_ORDER)
    a, b = edges[:-1], edges[1:]
    half, mid = 0.5 * (b - a), 0.5 * (a + b)
    y = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    v = lo + y ** (1.0 / q)
    jac = (1.0 / q) * y ** (1.0 / q - 1.0)
    return v, wts * jac


def _h_terms(geom: _DirectionGeometry, r: float, *, derivative: bool) -> float:
    """h_s(r) or its radial derivative, component sums in exp-assembled form."""
    n = geom.params.n
    nu = n / 2.0
    rho = (n - 2) / 2.0
    total = 0.0
    at = geom.atoms
    if at is not None:
        logk = kappa_log_grid(nu, r * at.a, h=_KAPPA_H)
        expo = np.exp(r * at.e - at.logd + logk)
        if derivative:
            logk2 = kappa_log_grid(rho, r * at.a, h=_KAPPA_H)
            expo2 = np.exp(r * at.e - at.logd + logk2)
            total += float(np.sum(at.mass * (at.e * expo - r * at.a ** 2 * expo2)))
        else:
            total += float(np.sum(at.mass * expo))
    for geo in geom.rays:
        grid = _ray_vgrid(geo, r)
        if grid is None:
            continue
        v, wts = grid
        a_v = geo.a_of_v(v)
        dens = geo.density(v)
        logk = kappa_log_grid(nu, r * a_v, h=_KAPPA_H)
        base = np.exp(r * geo.e - geo.logd + logk) * dens
        if derivative:
            logk2 = kappa_log_grid(rho, r * a_v, h=_KAPPA_H)
            base2 = np.exp(r * geo.e - geo.logd + logk2) * dens
            total += float(np.sum(wts * (geo.e * base - r * a_v ** 2 * base2)))
        else:
            total += float(np.sum(wts * base))
    for cg in geom.curve_geoms:
        logk = kappa_log_grid(nu, r * cg.a, h=_KAPPA_H)
        base = np.exp(r * cg.e - cg.logd + logk)
        if derivative:
            logk2 = kappa_log_grid(rho, r * cg.a, h=_KAPPA_H)
            base2 = np.exp(r * cg.e - cg.logd + logk2)
            total += float(np.sum(cg.weights * (cg.e * base - r * cg.a ** 2 * base2)))
        else:
            total += float(np.sum(cg.weights * base))
    if not math.isfinite(total):
        raise ArithmeticError("component integral overflowed; parameters too extreme")
    return c_n(n) * total


def h_density(params: WvggParams, s, r: float) -> float:
    """Polar density h_s(r); nonnegative, n >= 2."""
    if r <= 0:
        raise ValueError("radius must be positive")
    return _h_terms(_DirectionGeometry(params, s), r, derivative=False)


def h_derivative(params: WvggParams, s, r: float) -> float:
    """Radial derivative of h_s at r, computed under the integral."""
    if r <= 0:
        raise ValueError("radius must be positive")
    return _h_terms(_DirectionGeometry(params, s), r, derivative=True)


def h_many(params: WvggParams, s, rs: np.ndarray, *, derivative: bool = False) -> np.ndarray:
    geom = _DirectionGeometry(params, s)
    return np.array([_h_terms(geom, float(r), derivative=derivative) for r in rs])


# -- moment integrals against the measure -------------------------------------

def a_over_d_integral(U: ThorinMeasure, mu, sigma: CovMatrix, s) -> IntegralResult:
    """int A(s,u) dU(u) / D(s,u) over the open orthant, with divergence detection."""
    mu = as_vector(mu, sigma.n)
    sv = as_vector(s, sigma.n)
    total, err = 0.0, 0.0
    for c in U.positive_part():
        if isinstance(c, Atom):
            e, a, logd, _ = _quantities_at(mu, sigma.entries, sv, c.point[None, :])
            total += c.mass * float(a[0]) * math.exp(-float(logd[0]))
        elif isinstance(c, Ray):
            m = diamond_mat_raw(c.direction, sigma.entries)
            sol = np.linalg.solve(m, np.stack([sv, c.direction * mu], axis=1))
            qs = float(sv @ sol[:, 0])
            mm = float((c.direction * mu) @ sol[:, 1])
            aa = 2.0 * float(c.direction @ c.direction)
            det = float(np.linalg.det(m))
            d_ray = qs ** (sigma.n / 2.0) * math.sqrt(det)

            def f(v):
                return np.sqrt((aa * v + mm) * qs) / d_ray * c.density(v)

            res = improper_integral(f, lo=c.density.support_lo,
                                    hi=c.density.support_hi, open_lo=True, open_hi=True)
            if not res.finite:
                return res
            total += res.value
            err += res.error
        else:
            lo, hi = c.interval

            def f(thetas):
                pts = c.points(np.asarray(thetas))
                e, a, logd, _ = _quantities_at(mu, sigma.entries, sv, pts)
                return a * np.exp(-logd)

            res = improper_integral(f, lo=lo, hi=hi, open_lo=True, open_hi=True)
            if not res.finite:
                return res
            total += res.value
            err += res.error
    return IntegralResult(total, err, False)


def e_over_d_integral(U: ThorinMeasure, mu, sigma: CovMatrix, s) -> IntegralResult:
    """int E(s,u) dU(u) / D(s,u) over the open orthant."""
    mu = as_vector(mu, sigma.n)
    sv = as_vector(s, sigma.n)
    total, err = 0.0, 0.0
    for c in U.positive_part():
        if isinstance(c, Atom):
            e, a, logd, _ = _quantities_at(mu, sigma.entries, sv, c.point[None, :])
            total += c.mass * float(e[0]) * math.exp(-float(logd[0]))
        elif isinstance(c, Ray):
            m = diamond_mat_raw(c.direction, sigma.entries)
            sol = np.linalg.solve(m, np.stack([sv, c.direction * mu], axis=1))
            qs = float(sv @ sol[:, 0])
            e_ray = float(sv @ sol[:, 1])
            det = float(np.linalg.det(m))
            d_ray = qs ** (sigma.n / 2.0) * math.sqrt(det)

            def f(v):
                return np.full_like(np.asarray(v, dtype=float), e_ray / d_ray) * c.density(v)

            res = improper_integral(f, lo=c.density.support_lo,
                                    hi=c.density.support_hi, open_lo=True, open_hi=True)
            if not res.finite:
                return res
            total += res.value
            err += res.error
        else:
            lo, hi = c.interval

            def f(thetas):
                pts = c.points(np.asarray(thetas))
                e, a, logd, _ = _quantities_at(mu, sigma.entries, sv, pts)
                return e * np.exp(-logd)

            res = improper_integral(f, lo=lo, hi=hi, open_lo=True, open_hi=True)
            if not res.finite:
                return res
            total += res.value
            err += res.error
    return IntegralResult(total, err, False)


@dataclass
class DerivativeAtZero:
    applicable: bool
    value: float | None
    a_integral: IntegralResult
    e_integral: IntegralResult | None = None


def h_derivative_at_zero(params: WvggParams, s) -> DerivativeAtZero:
    """Right-hand limit of the radial derivative at 0.

    The finiteness of the A/D integral is the standing hypothesis; when it
    fails the limit is not extrapolated and the result is marked inapplicable.
    """
    if params.n < 2:
        raise NotApplicableError("polar density needs n >= 2")
    a_res = a_over_d_integral(params.U, params.mu, params.sigma, s)
    if not a_res.finite:
        return DerivativeAtZero(False, None, a_res)
    e_res = e_over_d_integral(params.U, params.mu, params.sigma, s)
    n = params.n
    value = c_n(n) * 2.0 ** ((n - 2) / 2.0) * math.gamma(n / 2.0) * e_res.value
    return DerivativeAtZero(True, value, a_res, e_res)


# -- characteristic exponent ---------------------------------------------------

def char_exponent(params: WvggParams, theta) -> complex:
    """Characteristic exponent: Brownian part for drift d plus the principal-
    branch log integral against the full Thorin measure."""
    th = as_vector(theta, params.n)
    mu, sigma = params.mu, params.sigma.entries
    dmu = params.d * mu
    dsig = diamond_mat_raw(params.d, sigma)
    val = 1j * float(dmu @ th) - 0.5 * float(th @ dsig @ th)
    for c in params.U.components:
        if isinstance(c, Atom):
            p = c.point
            num = (float(p @ p) - 1j * float((p * mu) @ th)
                   + 0.5 * float(th @ diamond_mat_raw(p, sigma) @ th))
            assert num.real > 0.0, "log argument must have positive real part"
            val -= c.mass * np.log(num / float(p @ p))
        elif isinstance(c, Ray):
            al = c.direction
            a2 = float(al @ al)
            z = (-1j * float((al * mu) @ th)
                 + 0.5 * float(th @ diamond_mat_raw(al, sigma) @ th))

            def f_re(v):
                return np.log(np.abs(1.0 + z / (v * a2))) * c.density(v)

            def f_im(v):
                return np.angle(1.0 + z / (v * a2)) * c.density(v)

            re = improper_integral(f_re, lo=c.density.support_lo,
                                   hi=c.density.support_hi, open_lo=True, open_hi=True)
            im = improper_integral(f_im, lo=c.density.support_lo,
                                   hi=c.density.support_hi, open_lo=True, open_hi=True)
            re.require_finite("characteristic-exponent integral")
            im.require_finite("characteristic-exponent integral")
            val -= re.value + 1j * im.value
        else:
            lo, hi = c.interval

            def f_c(thetas):
                pts = c.points(np.asarray(thetas))
                norms2 = np.einsum("mk,mk->m", pts, pts)
                cross = np.einsum("mk,k->m", pts * mu[None, :], th)
                quads = np.array([float(th @ diamond_mat_raw(p, sigma) @ th) for p in pts])
                return np.log((norms2 - 1j * cross + 0.5 * quads) / norms2)

            re = improper_integral(lambda t: np.real(f_c(t)), lo=lo, hi=hi,
                                   open_lo=True, open_hi=True)
            im = improper_integral(lambda t: np.imag(f_c(t)), lo=lo, hi=hi,
                                   open_lo=True, open_hi=True)
            re.require_finite("characteristic-exponent integral")
            im.require_finite("characteristic-exponent integral")
            val -= re.value + 1j * im.value
    return complex(val)


def vg_char_exponent_closed_form(b: float, sigma: CovMatrix, theta) -> complex:
    """Closed form for the driftless single-gamma case: -b ln{(b + ||theta||^2_Sigma/2)/b}."""
    th = as_vector(theta, sigma.n)
    return complex(-b * math.log((b + 0.5 * float(th @ sigma.entries @ th)) / b))


def vg_levy_density(b: float, mu, sigma: CovMatrix, y) -> float:
    """Levy density of the variance-gamma process with rate b, drift mu and
    invertible covariance Sigma, at y != 0."""
    if b <= 0:
        raise ValueError("rate must be positive")
    if not sigma.invertible:
        raise ValueError("Sigma must be invertible")
    yv = as_vector(y, sigma.n)
    if not np.any(yv):
        raise ValueError("y must be nonzero")
    mu = as_vector(mu, sigma.n)
    n = sigma.n
    sol = np.linalg.solve(sigma.entries, np.stack([yv, mu], axis=1))
    qy = float(yv @ sol[:, 0])
    cross = float(yv @ sol[:, 1])
    qmu = float(mu @ sol[:, 1])
    norm_y = math.sqrt(qy)
    logk = float(kappa_log_grid(n / 2.0, np.array([math.sqrt(2.0 * b + qmu) * norm_y]))[0])
    log_val = (math.log(c_n(n) * b) - 0.5 * math.log(sigma.det)
               - n * math.log(norm_y) + cross + logk)
    return math.exp(log_val)


# -- curves, CSV, monotonicity -------------------------------------------------

@dataclass
class DensityCurve:
    s: np.ndarray
    r_grid: np.ndarray
    values: np.ndarray
    deriv: np.ndarray
    quadrature_err: np.ndarray


def default_r_grid(r_min: float = 1e-4, r_max: float = 50.0, count: int = 200) -> np.ndarray:
    return np.geomspace(r_min, r_max, count)


def density_curve(params: WvggParams, s, r_grid=None) -> DensityCurve:
    rs = default_r_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    geom = _DirectionGeometry(params, s)
    values = np.array([_h_terms(geom, float(r), derivative=False) for r in rs])
    deriv = np.array([_h_terms(geom, float(r), derivative=True) for r in rs])
    err = np.abs(values) * 1e-7
    return DensityCurve(as_vector(s, params.n), rs, values, deriv, err)


def write_density_csv(curve: DensityCurve, path: str) -> None:
    n = curve.s.size
    header = ",".join(f"s_{k+1}" for k in range(n)) + ",r,h,dh,err"
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for i in range(curve.r_grid.size):
            fields = [f"{v:.17g}" for v in curve.s]
            fields += [f"{curve.r_grid[i]:.17g}", f"{curve.values[i]:.17g}",
                       f"{curve.deriv[i]:.17g}", f"{curve.quadrature_err[i]:.17g}"]
            fh.write(",".join(fields) + "\n")


def read_density_csv(path: str) -> DensityCurve:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        n = sum(1 for h in header if h.startswith("s_"))
        rows = [list(map(float, line.strip().split(","))) for line in fh if line.strip()]
    arr = np.asarray(rows)
    return DensityCurve(arr[0, :n], arr[:, n], arr[:, n + 1], arr[:, n + 2], arr[:, n + 3])


@dataclass
class MonotonicityVerdict:
    s: np.ndarray
    nonincreasing: bool
    r0: float | None
    margin: float


def monotonicity_scan(params: WvggParams, s_samples, r_grid=None,
                      *, tol: float = 1e-6) -> list[MonotonicityVerdict]:
    """Flag directions whose radial density strictly increases somewhere on the
    grid: h(r_{i+1}) > h(r_i) (1 + tol)."""
    rs = default_r_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    out = []
    for s in s_samples:
        geom = _DirectionGeometry(params, s)
        vals = np.array([_h_terms(geom, float(r), derivative=False) for r in rs])
        ratios = vals[1:] / np.maximum(vals[:-1], 1e-300)
        # pairs this deep in the underflow floor carry no signal
        meaningful = vals[1:] > 1e-250
        bad = np.nonzero((ratios > 1.0 + tol) & meaningful)[0]
        if bad.size:
            i = int(bad[0])
            out.append(MonotonicityVerdict(as_vector(s), False, float(rs[i + 1]),
                                           float(ratios.max() - 1.0)))
        else:
            out.append(MonotonicityVerdict(as_vector(s), True, None,
                                           float(ratios.max() - 1.0)))
    return out
