import math

import numpy as np
import pytest
from scipy.special import digamma, gammaln

from fragtail import measures as M
from fragtail.errors import DomainError
from fragtail.laplace import (PhiEvaluator, beta_gap_integral, digamma_diff,
                              gamma_quotient, gammaln_diff)

ALL_FAMILIES = [
    M.make_identical(2),
    M.make_identical(3),
    M.make_uniform(2),
    M.make_uniform(5),
    M.make_beta(2.0, 3.0),
    M.make_beta(0.8, 0.9),
    M.make_stable(1.25),
    M.make_stable(2.0),
    M.make_ford(0.5),
    M.make_ford(0.7),
    M.make_beta_splitting(-1.9),
    M.make_beta_splitting(-1.5),
    M.make_atomic([(0.5, (0.6, 0.2)), (1.5, (0.9, 0.1))]),
]


def test_uniform_two_closed_form():
    ev = PhiEvaluator(M.make_uniform(2))
    x = np.array([0.5, 1.0, 2.0, 10.0])
    assert np.allclose(ev.phi(x), x / (x + 2.0), rtol=1e-13)
    assert abs(ev.phi(2.0) - 0.5) < 1e-13
    assert abs(ev.phi_prime(2.0) - 0.125) < 1e-13


def test_conservative_phi_vanishes_at_zero():
    for spec in (M.make_identical(2), M.make_uniform(2), M.make_beta(2, 3),
                 M.make_stable(1.5), M.make_ford(0.5),
                 M.make_beta_splitting(-1.6)):
        assert abs(PhiEvaluator(spec).phi(0.0)) < 1e-12


def test_stable_special_value():
    ev = PhiEvaluator(M.make_stable(2.0))
    assert abs(ev.phi(1.0) - math.sqrt(math.pi)) < 1e-12


def test_identical_two_derivative():
    ev = PhiEvaluator(M.make_identical(2))
    # phi(x) = 1 - 2**-x, phi'(1) = ln2 / 2
    assert abs(ev.phi(1.0) - 0.5) < 1e-15
    assert abs(ev.phi_prime(1.0) - math.log(2.0) / 2.0) < 1e-14


@pytest.mark.parametrize("spec", [M.make_beta(2.0, 3.0),
                                  M.make_beta(0.8, 0.9),
                                  M.make_uniform(2)])
def test_closed_form_matches_quadrature(spec):
    closed = PhiEvaluator(spec, method="closed-form")
    quad = PhiEvaluator(spec, method="quadrature")
    for x in np.geomspace(0.1, 1e3, 25):
        c, q = closed.phi(float(x)), quad.phi(float(x))
        assert abs(c - q) / c < 1e-8
    for x in (0.5, 3.0, 50.0):
        c, q = closed.phi_prime(x), quad.phi_prime(x)
        assert abs(c - q) / abs(c) < 1e-7


@pytest.mark.parametrize("spec", ALL_FAMILIES)
def test_monotonicity_and_concavity_ratio(spec):
    # atomic exponents saturate at the total rate once the largest part to
    # the power x underflows eps, so strict monotonicity is asserted below
    ev = PhiEvaluator(spec)
    grid = np.geomspace(0.05, 30.0, 220)
    vals = ev.phi(grid)
    assert np.all(np.diff(vals) > 0.0)                # phi increasing
    assert np.all(np.diff(vals / grid) < 0.0)          # phi(x)/x decreasing
    ratio = ev.phi_prime(grid) * grid / vals
    assert np.all(ratio <= 1.0 + 1e-9)
    assert np.all(ratio > 0.0)


@pytest.mark.parametrize("spec", ALL_FAMILIES)
def test_phi_prime_finite_differences(spec):
    ev = PhiEvaluator(spec)
    for x in (0.3, 1.7, 23.0, 400.0):
        h = 1e-6 * max(1.0, x)
        lo, hi = ev.phi(x - h), ev.phi(x + h)
        if hi - lo < 1e-11 * hi:
            continue  # saturated in double precision, difference is noise
        fd = (hi - lo) / (2.0 * h)
        assert abs(fd - ev.phi_prime(x)) / abs(fd) < 1e-6


def test_x_psi_values():
    assert abs(PhiEvaluator(M.make_uniform(2)).x_psi() - 2.0) < 1e-12
    assert abs(PhiEvaluator(M.make_identical(2)).x_psi()
               - 1.0 / math.log(2.0)) < 1e-12
    # dust at every split: phi(0) > 0, domain edge collapses to 0
    assert PhiEvaluator(M.make_atomic([(1.0, (0.5,))])).x_psi() == 0.0
    g = 2.0
    assert abs(PhiEvaluator(M.make_stable(g)).x_psi()
               - 1.0 / (g * math.gamma(1.0 - 1.0 / g))) < 1e-12


def test_hypothesis_check():
    for g in (1.25, 1.5, 2.0):
        rep = PhiEvaluator(M.make_stable(g)).check_hypothesis(x_max=1e5)
        assert rep.passed
        assert abs(rep.tail_sup - (1.0 - 1.0 / g)) < 0.02
    rep1 = PhiEvaluator(M.make_identical(2)).check_hypothesis()
    assert rep1.passed and rep1.tail_sup < 0.05
    ev2 = PhiEvaluator(M.make_uniform(2))
    rep2 = ev2.check_hypothesis()
    expected = 2.0 / (rep2.grid + 2.0)
    assert np.allclose(rep2.ratio, expected, rtol=1e-10)
    with pytest.raises(DomainError):
        ev2.check_hypothesis(x_max=50.0)


def test_gamma_quotient_examples():
    q = gamma_quotient(100.0, 0.5)
    assert abs(q.expansion2 - 10.0 * (1.0 - 0.00125)) < 1e-13
    assert abs(q.exact - math.exp(gammaln(100.5) - gammaln(100.0))) < 1e-12
    q0 = gamma_quotient(7.0, 0.0)
    assert q0.exact == 1.0 and q0.expansion2 == 1.0
    q1 = gamma_quotient(7.0, 1.0)
    assert abs(q1.exact - 7.0) < 1e-12 and q1.expansion2 == 7.0
    with pytest.raises(DomainError):
        gamma_quotient(0.3, -0.5)


@pytest.mark.parametrize("c", [-0.5, 0.3, 0.5])
def test_gamma_quotient_remainder_order(c):
    # |exact - expansion2| * x^(2-c) must stay bounded as x grows
    scaled = []
    for x in (1e2, 1e3, 1e4):
        q = gamma_quotient(x, c)
        scaled.append(abs(q.exact - q.expansion2) * x ** (2.0 - c))
    assert max(scaled) / min(scaled) < 3.0


def test_beta_gap_examples():
    r = beta_gap_integral(1.0, 1.0, 3.0)
    assert abs(r.gamma_form - 0.75) < 1e-14
    assert abs(r.quadrature - 0.75) < 1e-12
    r = beta_gap_integral(1.0, 0.5, 10.0)
    expected = 1.0 / math.gamma(1.5) - math.exp(gammaln(11.0) - gammaln(11.5))
    assert abs(r.gamma_form - expected) < 1e-13
    assert abs(r.gamma_form - r.quadrature) / abs(r.gamma_form) < 1e-8
    assert beta_gap_integral(1.0, 0.5, 0.0).gamma_form == 0.0
    assert beta_gap_integral(0.7, -0.4, 5.0).quadrature is None


def test_beta_gap_grid_agreement():
    for a in (0.5, 1.0, 2.0):
        for b in (0.25, 0.5, 1.0):
            for x in (1.0, 10.0, 100.0):
                r = beta_gap_integral(a, b, x)
                assert abs(r.gamma_form - r.quadrature) \
                    / abs(r.gamma_form) < 1e-8


@pytest.mark.parametrize("spec", [M.make_identical(2), M.make_uniform(2),
                                  M.make_beta(2.0, 3.0)])
def test_largest_piece_exponent_tracks_phi(spec):
    # binary conservative: |phi - phi_largest| <= (1/2)**x on [1, 60]
    ev = PhiEvaluator(spec)
    for x in np.linspace(1.0, 60.0, 13):
        diff = abs(ev.phi(float(x)) - ev.phi_largest(float(x)))
        assert diff <= 0.5 ** x + 1e-15


def test_gammaln_diff_integer_offsets():
    # Gamma(y+2)/Gamma(y) = y (y+1) exactly
    for y in (0.3, 7.0, 49.0, 51.0, 1e6, 1e12):
        want = math.log(y) + math.log1p(y) if y > 1 else math.log(y * (y + 1))
        got = gammaln_diff(y, 2.0)
        assert abs(got - want) < 1e-12 * max(1.0, abs(want))
        assert abs(gammaln_diff(y, 1.0) - math.log(y)) < 1e-13 * max(
            1.0, abs(math.log(y)))


def test_digamma_diff_unit_offset():
    # digamma(y+1) - digamma(y) = 1/y exactly
    for y in (0.2, 3.0, 49.5, 50.5, 1e7, 1e13):
        assert abs(digamma_diff(y, 1.0) - 1.0 / y) < 1e-14 * max(1.0, 1.0 / y)
    y = 123.0
    assert abs(digamma_diff(y, 0.7)
               - (digamma(y + 0.7) - digamma(y))) < 1e-12
