"""Inversion of x -> x/phi(x): the function psi driving every tail exponent.

psi is defined on (x_psi, infinity) by psi(x)/phi(psi(x)) = x.  Both psi and
psi(x)/x are strictly increasing because phi is increasing with phi(x)/x
decreasing, so the defining equation is solved by safeguarded bracketing on
the strictly increasing map y -> y/phi(y).

Determinism contract: a solve for a given x always starts from the same
deterministic bracket and runs the same safeguarded iteration, so concurrent
callers observe identical values regardless of interleaving; the solved-pair
table only memoizes exact repeats (cheap, and the tail integrals revisit
grid points constantly), it never influences a fresh solve.
"""

from __future__ import annotations

import bisect

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NumericalFailure

_EDGE_GUARD = 1e-6   # refuse x within this relative margin of x_psi
_BRENT_RTOL = 4.0 * np.finfo(float).eps


class PsiSolver:
    """Inverts y -> y/phi(y) for one measure.

    Parameters
    ----------
    evaluator : PhiEvaluator
    rtol : float
        Residual tolerance: each returned y satisfies
        |y/phi(y) - x| <= rtol * x.
    """

    def __init__(self, evaluator, rtol=1e-10):
        self.evaluator = evaluator
        self.rtol = rtol
        self.x_psi = evaluator.x_psi()
        self._memo = {}
        self._keys = []  # sorted memo keys, the solved-pair table

    def _ratio(self, y):
        return y / self.evaluator.phi(y)

    def psi(self, x):
        """psi(x) for scalar x > x_psi."""
        x = float(x)
        if x <= self.x_psi * (1.0 + _EDGE_GUARD) or x <= 0.0:
            raise DomainError(
                f"psi is defined for x > x_psi = {self.x_psi:.6g}, got {x}")
        cached = self._memo.get(x)
        if cached is not None:
            return cached

        # deterministic bracket: double up from max(1, x) until the ratio
        # exceeds x, halve down until it falls below
        hi = max(1.0, x)
        for _ in range(200):
            if self._ratio(hi) >= x:
                break
            hi *= 2.0
        else:
            raise NumericalFailure(f"no upper bracket for psi({x})")
        lo = 0.5 * hi
        for _ in range(400):
            if self._ratio(lo) <= x:
                break
            lo *= 0.5
        else:
            raise NumericalFailure(f"no lower bracket for psi({x})")

        y = brentq(lambda v: self._ratio(v) - x, lo, hi,
                   xtol=1e-300, rtol=_BRENT_RTOL, maxiter=300)
        residual = abs(self._ratio(y) - x)
        if residual > self.rtol * x:
            raise NumericalFailure(
                f"psi({x}) residual {residual:.3e} exceeds {self.rtol:.1e}*x",
                achieved=residual / x)
        self._memo[x] = y
        bisect.insort(self._keys, x)
        return y

    def psi_values(self, xs):
        """Vector convenience wrapper."""
        return np.array([self.psi(float(v)) for v in np.asarray(xs).ravel()])

    def psi_prime(self, x):
        """Derivative of psi by implicit differentiation:
        psi'(x) = phi(y)^2 / (phi(y) - y phi'(y)) at y = psi(x)."""
        y = self.psi(x)
        phi_y = self.evaluator.phi(y)
        dphi_y = self.evaluator.phi_prime(y)
        denom = phi_y - y * dphi_y
        if denom <= 0.0:
            raise NumericalFailure(
                f"psi'({x}): nonpositive denominator {denom:.3e} violates "
                "strict monotonicity of x/phi(x); evaluator inconsistency")
        return phi_y * phi_y / denom

    def solved_pairs(self):
        """Monotone table of (x, psi(x)) pairs solved so far."""
        return [(x, self._memo[x]) for x in self._keys]

    def growth_exponent(self, x_max, octaves=8):
        """Empirical growth exponent of psi near x_max.

        Takes the supremum of log2 psi(2x)/psi(x) over the top ``octaves``
        doubling steps below x_max.  Under a passing ratio-bound report with
        tail supremum c this must not exceed 1/(1-c) by more than a whisker.
        """
        x_lo_floor = max(4.0 * (self.x_psi + 1.0), 8.0)
        n = int(octaves)
        while n > 1 and x_max / 2.0 ** n < x_lo_floor:
            n -= 1
        if x_max / 2.0 < x_lo_floor:
            raise DomainError("x_max too small for a growth estimate")
        kappa = -np.inf
        x = x_max / 2.0 ** n
        for _ in range(n):
            ratio = self.psi(2.0 * x) / self.psi(x)
            kappa = max(kappa, np.log2(ratio))
            x *= 2.0
        return float(kappa)
