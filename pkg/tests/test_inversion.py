import math

import numpy as np
import pytest

from fragtail import measures as M
from fragtail.errors import DomainError
from fragtail.inversion import PsiSolver
from fragtail.laplace import PhiEvaluator

FAMILIES = [
    M.make_identical(2),
    M.make_uniform(2),
    M.make_beta(2.0, 3.0),
    M.make_stable(1.5),
    M.make_stable(2.0),
    M.make_ford(0.5),
    M.make_beta_splitting(-1.6),
]


def solver_for(spec):
    return PsiSolver(PhiEvaluator(spec))


def test_uniform_two_closed_form():
    s = solver_for(M.make_uniform(2))
    assert abs(s.psi(4.0) - 2.0) < 1e-9
    assert abs(s.psi(10.0) - 8.0) < 1e-9
    for x in (2.5, 7.0, 300.0):
        assert abs(s.psi_prime(x) - 1.0) < 1e-8


def test_identical_two_against_bisection_oracle():
    # root of y / (1 - 2**-y) = 5, solved independently by plain bisection
    def g(y):
        return y / (1.0 - 2.0 ** (-y)) - 5.0

    lo, hi = 0.1, 10.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    oracle = 0.5 * (lo + hi)
    s = solver_for(M.make_identical(2))
    assert abs(s.psi(5.0) - oracle) < 1e-8


@pytest.mark.parametrize("spec", FAMILIES)
def test_round_trip_residual(spec):
    s = solver_for(spec)
    grid = np.geomspace(1.0, 1e3, 60) * 1.02 + s.x_psi
    for x in grid:
        y = s.psi(float(x))
        assert abs(y / s.evaluator.phi(y) - x) <= 1e-10 * x


@pytest.mark.parametrize("spec", FAMILIES)
def test_monotonicity(spec):
    s = solver_for(spec)
    grid = np.geomspace(1.0, 500.0, 80) * 1.05 + s.x_psi
    vals = np.array([s.psi(float(x)) for x in grid])
    assert np.all(np.diff(vals) > 0.0)
    # psi(x)/x is strictly increasing; allow float flatness where phi
    # saturates at its total rate
    assert np.all(np.diff(vals / grid) > -1e-14 * (vals / grid)[:-1])


@pytest.mark.parametrize("spec", FAMILIES)
def test_psi_prime_against_finite_differences(spec):
    s = solver_for(spec)
    for x in np.geomspace(4.0, 800.0, 9) + s.x_psi:
        h = 1e-4 * x
        fd = (s.psi(float(x + h)) - s.psi(float(x - h))) / (2.0 * h)
        assert abs(s.psi_prime(float(x)) - fd) / fd < 1e-5


@pytest.mark.parametrize("spec", FAMILIES)
def test_psi_prime_growth_ratio_bounded(spec):
    # psi'(x) <= K psi(x)/x for one constant over the tail grid
    s = solver_for(spec)
    grid = np.geomspace(20.0, 2e3, 25) + s.x_psi
    ratios = [s.psi_prime(float(x)) * x / s.psi(float(x)) for x in grid]
    assert max(ratios) < 10.0


def test_domain_guard():
    s = solver_for(M.make_uniform(2))
    with pytest.raises(DomainError):
        s.psi(2.0)
    with pytest.raises(DomainError):
        s.psi(2.0 * (1.0 + 1e-9))
    s.psi(2.0 * (1.0 + 1e-5))  # just outside the guard band works


def test_growth_exponents():
    assert abs(solver_for(M.make_identical(2)).growth_exponent(1e4) - 1.0) \
        < 0.05
    assert abs(solver_for(M.make_uniform(2)).growth_exponent(1e4) - 1.0) \
        < 0.05
    assert abs(solver_for(M.make_stable(2.0)).growth_exponent(1e5) - 2.0) \
        < 0.05


@pytest.mark.parametrize("spec", [M.make_identical(2), M.make_uniform(2),
                                  M.make_stable(2.0)])
def test_growth_exponent_respects_ratio_bound(spec):
    ev = PhiEvaluator(spec)
    rep = ev.check_hypothesis(x_max=1e5)
    kappa = PsiSolver(ev).growth_exponent(1e5)
    assert kappa <= 1.0 / (1.0 - rep.tail_sup) + 0.05


def test_interleaving_independent_values():
    # same inputs give bit-identical psi regardless of evaluation order
    spec = M.make_stable(1.5)
    xs = np.geomspace(1.0, 200.0, 25) + 0.3
    a = PsiSolver(PhiEvaluator(spec))
    b = PsiSolver(PhiEvaluator(spec))
    vals_a = [a.psi(float(x)) for x in xs]
    vals_b = [b.psi(float(x)) for x in reversed(xs)][::-1]
    assert vals_a == vals_b


def test_solved_pair_table_is_monotone():
    s = solver_for(M.make_beta(2.0, 3.0))
    for x in (40.0, 3.0, 17.0, 90.0, 5.5):
        s.psi(x)
    pairs = s.solved_pairs()
    xs = [p[0] for p in pairs]
    ys = [p[1] for p in pairs]
    assert xs == sorted(xs)
    assert ys == sorted(ys)
    ratio = [y / x for x, y in pairs]
    assert ratio == sorted(ratio)  # psi(x)/x increasing in the table
