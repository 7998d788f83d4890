"""Laplace exponent of the tagged-fragment subordinator and related
special-function utilities.

For a dislocation measure nu the exponent is

    phi(x) = integral of (1 - sum_i s_i**(x+1)) nu(ds),  x >= 0.

phi is increasing and concave, phi(x)/x is decreasing, and the whole tail
machinery downstream consumes only phi and its derivative.  Atomic measures
are evaluated by exact weighted sums, density measures by endpoint-aware
tanh-sinh quadrature or by their log-gamma closed forms, and the
infinite-rate tree families only by closed forms (their defining integrals
do not converge against 1 - u**x without the gamma-function decomposition
implemented in :func:`beta_gap_integral`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, gamma as gamma_fn, gammaln, rgamma

from .errors import DomainError, NumericalFailure, UnsupportedSampling
from .measures import ANALYTIC, ATOMIC, BINARY_DENSITY, atom_arrays, split_density
from .quadrature import tanh_sinh, tanh_sinh_01

# ---------------------------------------------------------------------------
# gamma-function helpers

_STIRLING_SWITCH = 50.0


def _stirling_tail(z):
    # remainder J(z) of log Gamma(z) = (z-1/2)log z - z + log(2 pi)/2 + J(z);
    # truncation below 1e-18 for z >= 50
    w = 1.0 / (z * z)
    return ((((1.0 / 1188.0) * w - 1.0 / 1680.0) * w + 1.0 / 1260.0) * w
            - 1.0 / 360.0) * w / z + 1.0 / (12.0 * z)


def gammaln_diff(y, c):
    """log Gamma(y+c) - log Gamma(y) without large-argument cancellation.

    The direct difference of two log-gamma values of size O(y log y) loses
    absolute accuracy ~ y log(y) * eps, which poisons exp() of the result at
    y beyond ~1e4.  For y >= 50 the difference is assembled from terms that
    are each O(c log y).  Requires y > 0 and y + c > 0.
    """
    y = np.asarray(y, dtype=float)
    c = np.asarray(c, dtype=float)
    y_b, c_b = np.broadcast_arrays(y, c)
    out = np.empty(y_b.shape)
    small = (y_b < _STIRLING_SWITCH) | (y_b + c_b < _STIRLING_SWITCH)
    out[small] = gammaln(y_b[small] + c_b[small]) - gammaln(y_b[small])
    big = ~small
    if big.any():
        yy, cc = y_b[big], c_b[big]
        out[big] = (cc * np.log(yy)
                    + (yy + cc - 0.5) * np.log1p(cc / yy) - cc
                    + _stirling_tail(yy + cc) - _stirling_tail(yy))
    if np.ndim(y) == 0 and np.ndim(c) == 0:
        return float(out)
    return out


def digamma_diff(y, c):
    """digamma(y+c) - digamma(y) without large-argument cancellation.

    Both digamma values grow like log y while their difference decays like
    c/y, so the direct difference loses all accuracy at large y; for
    y >= 50 the difference of the asymptotic expansions is summed term by
    term instead.  Requires y > 0 and y + c > 0.
    """
    y = np.asarray(y, dtype=float)
    c = np.asarray(c, dtype=float)
    y_b, c_b = np.broadcast_arrays(y, c)
    out = np.empty(y_b.shape)
    small = (y_b < _STIRLING_SWITCH) | (y_b + c_b < _STIRLING_SWITCH)
    out[small] = digamma(y_b[small] + c_b[small]) - digamma(y_b[small])
    big = ~small
    if big.any():
        yy, cc = y_b[big], c_b[big]
        zz = yy + cc

        def jp(z):  # derivative of the Stirling remainder
            w = 1.0 / (z * z)
            return ((-1.0 / 252.0 * w + 1.0 / 120.0) * w - 1.0 / 12.0) * w

        out[big] = (np.log1p(cc / yy) + cc / (2.0 * yy * zz)
                    + jp(zz) - jp(yy))
    if np.ndim(y) == 0 and np.ndim(c) == 0:
        return float(out)
    return out


def _gamma_ratio(base, c):
    """Gamma(base + c)/Gamma(base), valid through zeros and poles of the
    denominator.

    The offset c is taken exactly (never reconstructed from rounded sums,
    which would destroy it for base beyond ~1e13).  The log-gamma difference
    is used when both arguments are safely positive; otherwise
    Gamma(base+c) * (1/Gamma(base)) is formed directly, which is finite
    because 1/Gamma is entire.  Callers keep |c| small, so the direct branch
    never overflows.
    """
    base = np.asarray(base, dtype=float)
    c = np.asarray(c, dtype=float)
    bb, cb = np.broadcast_arrays(base, c)
    out = np.empty(bb.shape)
    safe = (bb > 0.5) & (bb + cb > 0.5)
    out[safe] = np.exp(gammaln_diff(bb[safe], cb[safe]))
    rest = ~safe
    out[rest] = gamma_fn(bb[rest] + cb[rest]) * rgamma(bb[rest])
    if np.ndim(base) == 0 and np.ndim(c) == 0:
        return float(out)
    return out


_RGP_H = 3e-5


def _rgamma_psi(z):
    """digamma(z) / Gamma(z), an entire function.

    Away from the poles of Gamma the product digamma * rgamma is used; near
    a pole both factors blow up while the product stays finite, so there the
    identity d/dz rgamma(z) = -digamma(z) rgamma(z) is exploited through a
    central difference of the entire function rgamma.
    """
    z = np.asarray(z, dtype=float)
    near_pole = (z < 0.25) & (np.abs(z - np.round(z)) < 0.05)
    out = np.empty(z.shape if z.ndim else (1,))
    zb = np.atleast_1d(z)
    near_pole = np.atleast_1d(near_pole)
    ok = ~near_pole
    out[ok] = digamma(zb[ok]) * rgamma(zb[ok])
    if near_pole.any():
        zp = zb[near_pole]
        out[near_pole] = -(rgamma(zp + _RGP_H) - rgamma(zp - _RGP_H)) / (2 * _RGP_H)
    if z.ndim == 0:
        return float(out[0])
    return out


def _gamma_ratio_deriv(base, c):
    """d/dx [Gamma(x + c0 + c)/Gamma(x + c0)] at base = x + c0."""
    base = np.asarray(base, dtype=float)
    c = np.asarray(c, dtype=float)
    bb, cb = np.broadcast_arrays(base, c)
    out = np.empty(bb.shape)
    safe = (bb > 0.5) & (bb + cb > 0.5)
    out[safe] = (np.exp(gammaln_diff(bb[safe], cb[safe]))
                 * digamma_diff(bb[safe], cb[safe]))
    rest = ~safe
    if rest.any():
        br, cr = bb[rest], cb[rest]
        pr = br + cr
        out[rest] = gamma_fn(pr) * (digamma(pr) * rgamma(br) - _rgamma_psi(br))
    if np.ndim(base) == 0 and np.ndim(c) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class GammaQuotient:
    """Gamma(x+c)/Gamma(x) evaluated exactly and by its two-term large-x
    expansion x**c (1 - c(1-c)/(2x)); the difference is O(x**(c-2))."""

    exact: float
    expansion2: float


def gamma_quotient(x, c):
    if not x > max(0.0, -c):
        raise DomainError(f"gamma_quotient requires x > max(0, -c), got x={x}")
    exact = math.exp(gammaln_diff(x, c))
    expansion2 = x ** c * (1.0 - c * (1.0 - c) / (2.0 * x))
    return GammaQuotient(exact=exact, expansion2=expansion2)


@dataclass(frozen=True)
class BetaGapIntegral:
    """The weighted moment gap (1/Gamma(b)) * int_0^1 (1-u^x) u^(a-1) (1-u)^(b-1) du.

    ``gamma_form`` is the exact gamma-function value
    Gamma(a)/Gamma(a+b) - Gamma(x+a)/Gamma(x+a+b), valid for all b > -1
    through analytic continuation of 1/Gamma.  ``quadrature`` evaluates the
    defining integral directly; it only converges for b > 0 and is None
    otherwise.
    """

    gamma_form: float
    quadrature: float
    quad_error: float


def beta_gap_integral(a, b, x, rel_tol=1e-10):
    if a <= 0.0 or b <= -1.0 or x < 0.0:
        raise DomainError(
            f"beta_gap_integral requires a>0, b>-1, x>=0, got {(a, b, x)}")
    gamma_form = float(_gamma_ratio(a + b, -b) - _gamma_ratio(x + a + b, -b))
    if x == 0.0:  # integrand vanishes identically
        return BetaGapIntegral(gamma_form=gamma_form,
                               quadrature=0.0 if b > 0.0 else None,
                               quad_error=0.0 if b > 0.0 else None)
    quad = None
    err = None
    if b > 0.0:
        inv_gamma_b = float(rgamma(b))

        def integrand(u, uma, bmx):
            with np.errstate(divide="ignore", invalid="ignore"):
                one_minus_ux = -np.expm1(x * np.log1p(-bmx))
                one_minus_ux = np.where(bmx >= 1.0, 1.0, one_minus_ux)
            return (one_minus_ux * np.exp((a - 1.0) * np.log(u)
                                          + (b - 1.0) * np.log(bmx))
                    * inv_gamma_b)

        quad, err, _ = tanh_sinh_01(integrand, rel_tol=rel_tol)
    return BetaGapIntegral(gamma_form=gamma_form, quadrature=quad,
                           quad_error=err)


# ---------------------------------------------------------------------------
# closed-form exponents per registry family (unscaled measures)


def _phi_uniform(k, x):
    e = np.exp(gammaln(k + 1.0) - gammaln_diff(x + 2.0, k - 1.0))
    return 1.0 - e


def _dphi_uniform(k, x):
    e = np.exp(gammaln(k + 1.0) - gammaln_diff(x + 2.0, k - 1.0))
    return e * digamma_diff(x + 2.0, k - 1.0)


def _phi_beta(a, b, x):
    eb = np.exp(gammaln(a + b) - gammaln(a) - gammaln_diff(x + 1.0 + a, b))
    ec = np.exp(gammaln(a + b) - gammaln(b) - gammaln_diff(x + 1.0 + b, a))
    return 1.0 - eb - ec


def _dphi_beta(a, b, x):
    eb = np.exp(gammaln(a + b) - gammaln(a) - gammaln_diff(x + 1.0 + a, b))
    ec = np.exp(gammaln(a + b) - gammaln(b) - gammaln_diff(x + 1.0 + b, a))
    return (eb * digamma_diff(x + 1.0 + a, b)
            + ec * digamma_diff(x + 1.0 + b, a))


def _phi_stable(g, x):
    # gamma(x + 1 - 1/g)/gamma(x) written pole-free as x * ratio(.., x+1)
    return g * x * np.exp(gammaln_diff(x + 1.0, -1.0 / g))


def _dphi_stable(g, x):
    ratio = np.exp(gammaln_diff(x + 1.0, -1.0 / g))
    return g * ratio * (1.0 - x * digamma_diff(x + 1.0 - 1.0 / g, 1.0 / g))


def _phi_ford(a, x):
    g1 = _gamma_ratio(x + (1.0 - 2.0 * a), a)
    g1_0 = _gamma_ratio(1.0 - 2.0 * a, a)
    g2 = np.exp(-gammaln_diff(x + 2.0 - a, 1.0 - a))
    g2_0 = math.exp(gammaln(2.0 - a) - gammaln(3.0 - 2.0 * a))
    return (g1 - g1_0) + (2.0 - 4.0 * a) * (g2_0 - g2)


def _dphi_ford(a, x):
    d1 = _gamma_ratio_deriv(x + (1.0 - 2.0 * a), a)
    g2 = np.exp(-gammaln_diff(x + 2.0 - a, 1.0 - a))
    d2 = -g2 * digamma_diff(x + 2.0 - a, 1.0 - a)
    return d1 - (2.0 - 4.0 * a) * d2


def _phi_beta_splitting(beta, x):
    g = _gamma_ratio(x + (2.0 * beta + 3.0), -beta - 1.0)
    g0 = _gamma_ratio(2.0 * beta + 3.0, -beta - 1.0)
    return g - g0


def _dphi_beta_splitting(beta, x):
    return _gamma_ratio_deriv(x + (2.0 * beta + 3.0), -beta - 1.0)


def _closed_forms(spec):
    """(phi, phi') callables for the unscaled measure, or None."""
    fam = spec.family
    if fam == "uniform-k":
        k = spec.param("k")
        return (lambda x: _phi_uniform(k, x)), (lambda x: _dphi_uniform(k, x))
    if fam == "beta":
        a, b = spec.param("a"), spec.param("b")
        return (lambda x: _phi_beta(a, b, x)), (lambda x: _dphi_beta(a, b, x))
    if fam == "stable":
        g = spec.param("gamma")
        return (lambda x: _phi_stable(g, x)), (lambda x: _dphi_stable(g, x))
    if fam == "ford":
        a = spec.param("a")
        return (lambda x: _phi_ford(a, x)), (lambda x: _dphi_ford(a, x))
    if fam == "beta-splitting":
        b = spec.param("beta")
        return (lambda x: _phi_beta_splitting(b, x)), \
               (lambda x: _dphi_beta_splitting(b, x))
    return None


def _analytic_dphi0(spec):
    """phi'(0+) of the unscaled measure, where a stable closed form exists."""
    fam = spec.family
    if fam == "uniform-k":
        return float(_dphi_uniform(spec.param("k"), 0.0))
    if fam == "beta":
        return float(_dphi_beta(spec.param("a"), spec.param("b"), 0.0))
    if fam == "stable":
        g = spec.param("gamma")
        return g * math.exp(gammaln(1.0 - 1.0 / g))
    return None  # ford / beta-splitting hit Gamma poles at 0 for some params


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RatioBoundReport:
    """Diagnostic for the growth condition sup_x phi'(x) x / phi(x) < 1.

    The ratio equals the local log-log slope of phi; staying below 1 - delta
    on the tail bounds phi by x**c and the inverse function psi by
    x**(1/(1-c)) with c = tail_sup.
    """

    grid: np.ndarray
    ratio: np.ndarray
    tail_sup: float
    passed: bool
    delta: float


class PhiEvaluator:
    """Evaluates phi, phi', and derived quantities for one measure.

    Immutable and shareable: all methods are pure functions of their
    arguments.  ``method`` is one of ``atomic-sum``, ``closed-form``,
    ``quadrature`` (the latter only for binary-density specs, mainly as an
    independent cross-check of the closed forms).
    """

    def __init__(self, spec, method="auto", quad_rtol=1e-10):
        self.spec = spec
        self.quad_rtol = quad_rtol
        if method == "auto":
            if spec.variant == ATOMIC:
                method = "atomic-sum"
            else:
                method = "closed-form"
        if method == "atomic-sum" and spec.variant != ATOMIC:
            raise DomainError("atomic-sum method needs an atomic spec")
        if method == "quadrature" and spec.variant != BINARY_DENSITY:
            raise DomainError("quadrature method needs a binary-density spec")
        if method == "closed-form":
            forms = _closed_forms(spec)
            if forms is None:
                if spec.variant == BINARY_DENSITY:
                    method = "quadrature"
                else:
                    raise DomainError(
                        f"no closed form registered for {spec.family!r}")
            else:
                self._phi_base, self._dphi_base = forms
        self.method = method
        if method == "atomic-sum":
            _, parts_flat, _, sizes, _ = atom_arrays(spec)
            weights = np.repeat(
                np.array([w for w, _ in spec.atoms]), sizes)
            self._log_parts = np.log(parts_flat)
            self._part_weights = weights
            self._weight_total = math.fsum(w for w, _ in spec.atoms)
        self._x_psi_cache = None

    # -- core evaluations ---------------------------------------------------

    def phi(self, x):
        """phi(x) for scalar or array x >= 0."""
        x = np.asarray(x, dtype=float)
        if np.any(x < 0.0):
            raise DomainError("phi requires x >= 0")
        scale = self.spec.scale
        if self.method == "atomic-sum":
            powered = np.exp(np.multiply.outer(x + 1.0, self._log_parts))
            val = scale * (self._weight_total - powered @ self._part_weights)
            return float(val) if x.ndim == 0 else val
        if self.method == "closed-form":
            val = scale * self._phi_base(x)
            return float(val) if x.ndim == 0 else val
        return self._quad_phi(x)

    def phi_prime(self, x):
        """phi'(x); analytic for atomic and closed-form specs, differentiated
        under the integral for density specs."""
        x = np.asarray(x, dtype=float)
        if np.any(x < 0.0):
            raise DomainError("phi_prime requires x >= 0")
        scale = self.spec.scale
        if self.method == "atomic-sum":
            powered = np.exp(np.multiply.outer(x + 1.0, self._log_parts))
            val = -scale * (powered @ (self._part_weights * self._log_parts))
            return float(val) if x.ndim == 0 else val
        if self.method == "closed-form":
            val = scale * self._dphi_base(x)
            return float(val) if x.ndim == 0 else val
        return self._quad_phi(x, derivative=True)

    def _quad_phi(self, x, derivative=False):
        spec = self.spec

        def one(xv):
            def integrand(u, uma, bmx):
                log_u = np.log1p(-bmx)
                log_1mu = np.log(bmx)
                f = split_density(spec, u, bmx)
                if derivative:
                    return -(np.exp((xv + 1.0) * log_u) * log_u
                             + np.exp((xv + 1.0) * log_1mu) * log_1mu) * f
                return (-np.expm1((xv + 1.0) * log_u)
                        - np.exp((xv + 1.0) * log_1mu)) * f

            val, err, _ = tanh_sinh(integrand, 0.5, 1.0,
                                    rel_tol=self.quad_rtol)
            return spec.scale * val

        if np.ndim(x) == 0:
            return one(float(x))
        return np.array([one(float(v)) for v in np.ravel(x)]).reshape(np.shape(x))

    def phi_largest(self, x):
        """Largest-piece-only exponent: integral of (1 - s1**(x+1)) nu(ds).

        For binary conservative measures it tracks phi within (1/2)**x.
        """
        x = np.asarray(x, dtype=float)
        scale = self.spec.scale
        if self.spec.variant == ATOMIC:
            s1 = np.array([parts[0] for _, parts in self.spec.atoms])
            w = np.array([wt for wt, _ in self.spec.atoms])
            powered = np.exp(np.multiply.outer(x + 1.0, np.log(s1)))
            val = scale * ((1.0 - powered) @ w)
            return float(val) if x.ndim == 0 else val
        if self.spec.variant == BINARY_DENSITY:
            spec = self.spec

            def one(xv):
                def integrand(u, uma, bmx):
                    return (-np.expm1((xv + 1.0) * np.log1p(-bmx))
                            * split_density(spec, u, bmx))
                val, _, _ = tanh_sinh(integrand, 0.5, 1.0,
                                      rel_tol=self.quad_rtol)
                return scale * val

            if np.ndim(x) == 0:
                return one(float(x))
            return np.array([one(float(v)) for v in np.ravel(x)])
        raise UnsupportedSampling(
            "largest-piece exponent needs an explicit split law")

    # -- derived quantities --------------------------------------------------

    def x_psi(self):
        """Left edge of the domain of the inverse function psi.

        Equals lim_{x->0+} x/phi(x): the reciprocal of phi'(0+) for
        conservative measures (phi(0) = 0), and 0 when phi(0) > 0.
        """
        if self._x_psi_cache is not None:
            return self._x_psi_cache
        phi0 = self.phi(1e-12)  # phi(0) for conservative specs is exactly 0
        if self.phi(0.0) > 1e-12 * max(1.0, phi0):
            value = 0.0
        else:
            dphi0 = None
            if self.method == "atomic-sum":
                dphi0 = self.phi_prime(0.0)
            elif self.method == "closed-form":
                base = _analytic_dphi0(self.spec)
                if base is not None:
                    dphi0 = self.spec.scale * base
            if dphi0 is not None:
                value = 1.0 / dphi0
            else:
                # Richardson limit of x/phi(x); error O(h^2)
                h = 1e-6
                r1 = h / self.phi(h)
                r2 = 2.0 * h / self.phi(2.0 * h)
                value = 2.0 * r1 - r2
        self._x_psi_cache = value
        return value

    def check_hypothesis(self, x_max=1e4, n_grid=200, delta=0.01):
        """Growth-ratio diagnostic over a log grid on [1, x_max].

        Reports sup of phi'(x) x / phi(x) over the upper half of the grid;
        a diagnostic only, downstream operations proceed (with the caller
        free to warn) when it fails.
        """
        if x_max < 100.0:
            raise DomainError("check_hypothesis requires x_max >= 100")
        grid = np.geomspace(1.0, x_max, int(n_grid))
        ratio = self.phi_prime(grid) * grid / self.phi(grid)
        tail = ratio[len(grid) // 2:]
        tail_sup = float(np.max(tail))
        return RatioBoundReport(grid=grid, ratio=ratio, tail_sup=tail_sup,
                                passed=bool(tail_sup < 1.0 - delta),
                                delta=delta)

    def error_estimate(self):
        """Crude per-call relative error of phi under the active method."""
        if self.method == "quadrature":
            return self.quad_rtol
        return 5e-15


def phi_at(spec, x, method="auto"):
    """Convenience scalar phi evaluation."""
    return PhiEvaluator(spec, method=method).phi(x)
