"""End-to-end verification suite.

Thirteen numbered criteria cover the whole pipeline: exact closed-form
checks (1-6), exact-in-law Monte Carlo identities (7-10), and
bounded-residual shape fits at desk scale (11-13).  Each criterion pins its
tolerance here; nothing is deferred to later calibration.  ``run_all``
executes them in order and returns one result per criterion;
``fragtail verify`` prints them as a table.

The statistical criteria use fixed seeds, so a verify run is reproducible
bit for bit.  ``fast=True`` cuts the Monte Carlo sizes for a quick smoke
pass with tolerances unchanged; the tight shape-fit criteria are only
meaningful at full size.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass

import numpy as np

from . import measures as M
from .asymptotics import (TailShape, brownian_excursion_max_tail,
                          extinction_log_tail, family_tail_shape,
                          log_tail_grid, phi_expansion, tagged_log_tail,
                          tail_ratio)
from .inversion import PsiSolver
from .laplace import PhiEvaluator, beta_gap_integral, gamma_quotient
from .measures import intrinsic_alpha
from .simulate import CascadeConfig, run_ensemble, sample_zeta_tag, _generator
from .stats import (ks_two_sample, paired_mean_diff, shape_fit,
                    survival_curve, synthetic_tail_samples)


@dataclass
class CriterionResult:
    cid: int
    title: str
    passed: bool
    detail: str
    seconds: float


def _workers(workers):
    if workers is not None:
        return workers
    env = os.environ.get("FRAGTAIL_THREADS")
    if env is not None:
        return max(1, int(env))
    return min(2, os.cpu_count() or 1)


def _registry_specs():
    return [
        M.make_identical(2),
        M.make_uniform(2),
        M.make_beta(2.0, 3.0),
        M.make_beta(0.8, 0.9),
        M.make_stable(1.5),
        M.make_ford(0.5),
        M.make_beta_splitting(-1.6),
        M.make_atomic([(1.0, (0.6, 0.3))]),
    ]


# --- 1 ----------------------------------------------------------------------

def criterion_1(ctx):
    """psi inversion residual and the uniform-2 closed form."""
    worst = 0.0
    for spec in _registry_specs():
        solver = PsiSolver(PhiEvaluator(spec))
        grid = np.geomspace(1.0, 1e3, 200) * 1.05 + solver.x_psi
        for x in grid:
            y = solver.psi(float(x))
            worst = max(worst, abs(y / solver.evaluator.phi(y) - x) / x)
    ok_resid = worst <= 1e-10
    solver2 = PsiSolver(PhiEvaluator(M.make_uniform(2)))
    grid2 = np.geomspace(2.1, 1e3, 200)
    worst2 = max(abs(solver2.psi(float(x)) - (x - 2.0)) for x in grid2)
    ok_closed = worst2 <= 1e-9
    return (ok_resid and ok_closed,
            f"max residual {worst:.2e} (<=1e-10); "
            f"uniform-2 |psi(x)-(x-2)| max {worst2:.2e} (<=1e-9)")


# --- 2 ----------------------------------------------------------------------

def criterion_2(ctx):
    """gamma-form vs quadrature of the weighted beta moment gap."""
    worst = 0.0
    for a in (0.5, 1.0, 2.0):
        for b in (0.25, 0.5, 1.0):
            for x in (1.0, 10.0, 100.0):
                res = beta_gap_integral(a, b, x)
                rel = abs(res.gamma_form - res.quadrature) \
                    / max(abs(res.gamma_form), 1e-300)
                worst = max(worst, rel)
    return worst <= 1e-8, f"max relative gap {worst:.2e} (<=1e-8)"


# --- 3 ----------------------------------------------------------------------

def criterion_3(ctx):
    """Second-order gamma-quotient remainder is O(x**-2)."""
    detail = []
    ok = True
    for c in (-0.5, 0.3, 0.5):
        rs = []
        for x in (1e2, 1e4):
            q = gamma_quotient(x, c)
            rs.append(abs(q.exact - q.expansion2) * x ** (2.0 - c))
        ratio = max(rs) / min(rs)
        ok &= ratio <= 3.0
        detail.append(f"c={c}: ratio {ratio:.3f}")
    return ok, "; ".join(detail) + " (each <= 3)"


# --- 4 ----------------------------------------------------------------------

def criterion_4(ctx):
    """Mutual consistency of the two tail formulas with the exact ratio."""
    cases = [(M.make_uniform(2), -1.0), (M.make_stable(1.5), None),
             (M.make_ford(0.5), None)]
    worst = 0.0
    for spec, alpha in cases:
        if alpha is None:
            alpha = intrinsic_alpha(spec)
        solver = PsiSolver(PhiEvaluator(spec))
        for t in np.linspace(30.0, 400.0, 20):
            d = (extinction_log_tail(solver, alpha, float(t)).log_value
                 - tagged_log_tail(solver, alpha, float(t)).log_value)
            target = math.log(tail_ratio(solver, alpha, float(t)))
            worst = max(worst, abs(d - target) / max(1.0, abs(target)))
    return worst <= 1e-12, f"worst ratio mismatch {worst:.2e} (<=1e-12)"


# --- 5 ----------------------------------------------------------------------

def criterion_5(ctx):
    """The exact functional route and the expansion route compute the same
    class: their log difference is constant in t."""
    specs = [M.make_stable(1.25), M.make_stable(1.5), M.make_stable(2.0),
             M.make_ford(0.5), M.make_beta_splitting(-1.6)]
    t_grid = np.geomspace(50.0, 500.0, 13)
    detail = []
    ok = True
    for spec in specs:
        alpha = intrinsic_alpha(spec)
        solver = PsiSolver(PhiEvaluator(spec))
        log_ext, _ = log_tail_grid(solver, alpha, t_grid)
        shape = family_tail_shape(spec)
        drift = log_ext - shape.log_value(t_grid)
        span = float(drift.max() - drift.min())
        ok &= span <= 0.2
        label = f"{spec.family}{dict(spec.params)}"
        detail.append(f"{label}: span {span:.3f}")
    return ok, "; ".join(detail) + " (each <= 0.2 i.e. within +-0.1)"


# --- 6 ----------------------------------------------------------------------

def criterion_6(ctx):
    """Index-2 closed shape equals t^2 exp(-t^2) and matches the scaled
    excursion-maximum tail exactly in power and exponent."""
    shape = family_tail_shape(M.make_stable(2.0))
    ok_shape = (shape.poly_exponent == 2.0
                and shape.exp_terms == ((1.0, 2.0),))
    root2 = math.sqrt(2.0)
    consts = []
    ok_sub = True
    for t in (3.0, 5.0, 9.0):
        lhs = brownian_excursion_max_tail(t / root2)
        rhs = t ** 2 * math.exp(-t ** 2)
        consts.append(lhs / rhs)
        ok_sub &= abs(math.log(lhs) - math.log(4.0 * rhs)) <= 1e-12
    return (ok_shape and ok_sub,
            f"shape poly={shape.poly_exponent}, terms={shape.exp_terms}; "
            f"substitution constant {consts[0]:.12f} (recorded, 4 expected)")


# --- 7 ----------------------------------------------------------------------

def criterion_7(ctx):
    """Mean tagged extinction time equals 1/phi(|alpha|)."""
    n = 2000 if ctx.fast else 100000
    detail = []
    ok = True
    for spec, target, seed in [(M.make_identical(2), 2.0, 101),
                               (M.make_uniform(2), 3.0, 102)]:
        out = sample_zeta_tag(spec, -1.0, 5e-4, n, _generator(seed))
        mean = out["value"].mean()
        se = out["value"].std(ddof=1) / math.sqrt(n)
        bound = out["bound"].max()
        ok &= abs(mean - target) <= 4.0 * se and bound < 1e-3
        detail.append(f"target {target}: mean {mean:.4f} "
                      f"({(mean - target) / se:+.2f} se), bound {bound:.1e}")
    return ok, "; ".join(detail)


# --- 8 ----------------------------------------------------------------------

def criterion_8(ctx):
    """Cascade tagged death times and the direct lineage simulator realize
    the same law."""
    n = 2000 if ctx.fast else 10000
    spec = M.make_uniform(2)
    cutoff = 2.0 ** -12
    cfg = CascadeConfig(alpha=-1.0, cutoff=cutoff, seed=810, tags=1,
                        record_sums=False, record_largest=False)
    ens = run_ensemble(spec, cfg, n, workers=ctx.workers)
    tol = cutoff / PhiEvaluator(spec).phi(1.0)
    direct = sample_zeta_tag(spec, -1.0, tol, n, _generator(811))
    ks = ks_two_sample(ens.tag_death[0], direct["value"])
    return (ks.pass_1pct,
            f"KS {ks.statistic:.4f} vs 1% threshold {ks.threshold_1pct:.4f}")


# --- 9 ----------------------------------------------------------------------

def criterion_9(ctx):
    """Exact-in-law identities on common runs at checkpoints 1, 2, 4, 6."""
    n = 4000 if ctx.fast else 100000
    spec = M.make_uniform(2)
    cps = (1.0, 2.0, 4.0, 6.0)
    # identities (a) and (c) hold exactly in the truncated system at any
    # cutoff; only (b) picks up a bias of order cutoff, far below 4 stderr
    cfg = CascadeConfig(alpha=-1.0, cutoff=2.0 ** -11, checkpoints=cps,
                        seed=900, tags=2, record_largest=False)
    ens = run_ensemble(spec, cfg, n, workers=ctx.workers)
    detail = []
    ok = True
    for j, t in enumerate(cps):
        a = paired_mean_diff(ens.tag_mass[0][:, j], ens.sum_squares[:, j])
        b = paired_mean_diff((ens.separation_time > t).astype(float),
                             ens.tag_mass[0][:, j])
        c = paired_mean_diff(ens.tag_mass[0][:, j] * ens.tag_mass[1][:, j],
                             ens.sum_squares[:, j] ** 2)
        zs = [est.mean / est.stderr for est in (a, b, c)]
        ok &= all(abs(z) <= 4.0 for z in zs)
        detail.append(f"t={t:g}: {zs[0]:+.2f}/{zs[1]:+.2f}/{zs[2]:+.2f} se")
    return ok, "tag-vs-S2 / separation / joint z-scores: " + "; ".join(detail)


# --- 10 ---------------------------------------------------------------------

def criterion_10(ctx):
    """Distributional recursion: (zeta - t)+ equals the best rescaled
    restart over the fragments alive at t."""
    n = 2000 if ctx.fast else 10000
    spec = M.make_uniform(2)
    base = dict(alpha=-1.0, cutoff=2.0 ** -10, record_sums=False,
                record_largest=False)
    pilot = run_ensemble(spec, CascadeConfig(seed=1000, **base),
                         max(n, 20000) if not ctx.fast else n,
                         workers=ctx.workers)
    t_star = float(np.quantile(pilot.zeta, 0.7))
    ens_a = run_ensemble(spec, CascadeConfig(seed=1001, **base), n,
                         workers=ctx.workers)
    side_a = np.maximum(ens_a.zeta - t_star, 0.0)
    ens_b = run_ensemble(spec, CascadeConfig(seed=1002, snapshot_time=t_star,
                                             **base), n, workers=ctx.workers)
    pool = run_ensemble(spec, CascadeConfig(seed=1003, **base),
                        max(len(ens_b.snapshot_mass), 1000),
                        workers=ctx.workers)
    vals = ens_b.snapshot_mass * pool.zeta[:len(ens_b.snapshot_mass)]
    side_b = np.zeros(n)
    np.maximum.at(side_b, ens_b.snapshot_run, vals)
    ks = ks_two_sample(side_a, side_b)
    return (ks.pass_1pct,
            f"t*={t_star:.3f} (survival approx 0.3); KS {ks.statistic:.4f} "
            f"vs {ks.threshold_1pct:.4f}")


# --- 11-13: shared big batches ----------------------------------------------

_EX1_SHAPE = TailShape(0.0, ((1.0, 1.0),))
_EX2_SHAPE = TailShape(2.0, ((1.0, 1.0),))


def _grid_from_samples(z, n_levels=16, lo=1.3e-3, hi=0.2):
    levels = np.geomspace(hi, lo, n_levels)
    return np.unique(np.quantile(z, 1.0 - levels))


def _big_ex1(ctx):
    if "ex1" not in ctx.cache:
        n = 20000 if ctx.fast else 1000000
        # cutoff 2^-9 shifts each extinction estimate down by ~1e-2; the
        # shift is constant across the fit window at this family's nearly
        # constant hazard, so the fitted constant absorbs it
        cfg = CascadeConfig(alpha=-1.0, cutoff=2.0 ** -9, seed=1100,
                            record_sums=False, record_largest=False)
        ctx.cache["ex1"] = run_ensemble(M.make_identical(2), cfg, n,
                                        workers=ctx.workers)
    return ctx.cache["ex1"]


def _big_ex2(ctx):
    if "ex2" not in ctx.cache:
        n = 20000 if ctx.fast else 1000000
        pilot = run_ensemble(
            M.make_uniform(2),
            CascadeConfig(alpha=-1.0, cutoff=2.0 ** -9, seed=1199,
                          record_sums=False, record_largest=False),
            20000, workers=ctx.workers)
        levels = np.array([0.15, 0.08, 0.04, 0.02, 0.009, 0.004, 0.0018])
        cps = tuple(np.quantile(pilot.zeta, 1.0 - levels))
        cfg = CascadeConfig(alpha=-1.0, cutoff=2.0 ** -9, seed=1200,
                            checkpoints=cps, record_sums=False,
                            record_largest=True)
        ctx.cache["ex2"] = run_ensemble(M.make_uniform(2), cfg, n,
                                        workers=ctx.workers)
    return ctx.cache["ex2"]


def criterion_11(ctx):
    """Survival-shape fits for the two finite families plus the synthetic
    discrimination control."""
    ens1 = _big_ex1(ctx)
    curve1 = survival_curve(ens1.zeta, _grid_from_samples(ens1.zeta))
    fit1 = shape_fit(curve1, _EX1_SHAPE)
    ens2 = _big_ex2(ctx)
    curve2 = survival_curve(ens2.zeta, _grid_from_samples(ens2.zeta))
    fit2 = shape_fit(curve2, _EX2_SHAPE)
    n_syn = len(ens2.zeta)
    syn = synthetic_tail_samples(_EX2_SHAPE, 3.0, n_syn, _generator(1111))
    curve_s = survival_curve(syn, _grid_from_samples(syn))
    fit_good = shape_fit(curve_s, _EX2_SHAPE)
    fit_bad = shape_fit(curve_s, _EX1_SHAPE)
    ok = (fit1.max_abs_residual < 0.1 and fit2.max_abs_residual < 0.1
          and fit_good.max_abs_residual < 0.05
          and fit_bad.max_abs_residual > 0.3)
    return ok, (
        f"identical-2 resid {fit1.max_abs_residual:.3f}, uniform-2 resid "
        f"{fit2.max_abs_residual:.3f} (<0.1); synthetic control good "
        f"{fit_good.max_abs_residual:.3f} (<0.05) / wrong "
        f"{fit_bad.max_abs_residual:.3f} (>0.3)")


def criterion_12(ctx):
    """exp(t) * survival is nondecreasing within 95% bands and its plateau
    clears 1."""
    ens1 = _big_ex1(ctx)
    curve = survival_curve(ens1.zeta, _grid_from_samples(ens1.zeta))
    sel = (curve.p_hat >= 1e-3) & (curve.p_hat <= 0.2)
    t = curve.t_grid[sel]
    scaled = np.exp(t) * curve.p_hat[sel]
    band = np.exp(t) * curve.ci_half[sel]
    mono = bool(np.all(scaled[1:] + band[1:] >= scaled[:-1] - band[:-1]))
    plateau_ok = bool(scaled[-1] >= 1.0 - 2.0 * band[-1])
    return (mono and plateau_ok,
            f"monotone within bands: {mono}; plateau {scaled[-1]:.3f} "
            f">= 1 - 2ci ({1.0 - 2.0 * band[-1]:.3f})")


def criterion_13(ctx):
    """Largest-fragment moment tracks (t/psi(|a|t))**(1/|a|) * survival
    within a factor-2 band across the window."""
    ens2 = _big_ex2(ctx)
    solver = PsiSolver(PhiEvaluator(M.make_uniform(2)))
    ratios = []
    used = []
    for j, t in enumerate(ens2.checkpoints):
        p = float((ens2.zeta > t).mean())
        if not 1e-3 <= p <= 0.2:
            continue
        pred = (t / solver.psi(t)) * p
        ratios.append(float(ens2.largest[:, j].mean()) / pred)
        used.append(t)
    if len(ratios) < 3:
        return False, "fewer than 3 checkpoints landed in the fit window"
    spread = max(ratios) / min(ratios)
    return (spread < 2.0,
            f"{len(ratios)} checkpoints in window, ratio spread "
            f"{spread:.3f} (< 2)")


# ---------------------------------------------------------------------------

_CRITERIA = [
    (1, "psi inversion residual and uniform-2 closed form", criterion_1),
    (2, "gamma-form vs quadrature moment-gap identity", criterion_2),
    (3, "gamma-quotient remainder is second order", criterion_3),
    (4, "extinction/tagged tail formulas consistent with exact ratio",
     criterion_4),
    (5, "functional route matches closed shapes up to a constant",
     criterion_5),
    (6, "index-2 shape vs scaled excursion-maximum tail", criterion_6),
    (7, "mean tagged extinction equals 1/phi(|alpha|)", criterion_7),
    (8, "cascade tag deaths match direct lineage law (KS)", criterion_8),
    (9, "paired identities: tag mass, separation, joint moment",
     criterion_9),
    (10, "distributional restart recursion (KS)", criterion_10),
    (11, "survival shape fits with discrimination control", criterion_11),
    (12, "scaled survival monotone with plateau above 1", criterion_12),
    (13, "largest-fragment ratio band", criterion_13),
]


class _Context:
    def __init__(self, fast, workers):
        self.fast = fast
        self.workers = _workers(workers)
        self.cache = {}


def run_criterion(cid, ctx=None, fast=False, workers=None):
    if ctx is None:
        ctx = _Context(fast, workers)
    for num, title, fn in _CRITERIA:
        if num == cid:
            start = time.time()
            passed, detail = fn(ctx)
            return CriterionResult(cid=num, title=title, passed=passed,
                                   detail=detail,
                                   seconds=time.time() - start)
    raise ValueError(f"no criterion {cid}")


def run_all(fast=False, workers=None, only=None):
    ctx = _Context(fast, workers)
    results = []
    for num, title, fn in _CRITERIA:
        if only and num not in only:
            continue
        results.append(run_criterion(num, ctx=ctx))
    return results


def format_table(results):
    lines = []
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        lines.append(f"[{mark}] {r.cid:>2}. {r.title} ({r.seconds:.1f}s)")
        lines.append(f"        {r.detail}")
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} criteria passed")
    return "\n".join(lines)
