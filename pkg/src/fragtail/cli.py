"""Command-line interface.

One verb per capability; every run echoes its fully resolved configuration
(including defaulted values) into the output, floats are serialized with 17
significant digits so replays diff byte for byte, and errors exit with code
1 (numerical/domain) or 2 (configuration) carrying a machine-readable JSON
object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from .errors import (ConfigError, DomainError, FragtailError,
                     InsufficientWindow, NumericalFailure, UncoveredRegion,
                     UnsupportedExpansion, UnsupportedSampling)
from .measures import from_config, intrinsic_alpha, load_measure
from .laplace import PhiEvaluator
from .inversion import PsiSolver
from .asymptotics import (TailShape, default_t0, extinction_log_tail,
                          family_tail_shape, phi_expansion, tagged_log_tail,
                          tail_shape_from_expansion)
from .simulate import (CascadeConfig, default_workers, run_ensemble,
                       sample_zeta_tag, _generator)
from .stats import shape_fit, survival_curve

_CONFIG_EXIT = (ConfigError, UnsupportedSampling, OSError)
_NUMERIC_EXIT = (DomainError, NumericalFailure, UncoveredRegion,
                 UnsupportedExpansion, InsufficientWindow)


def _fmt(value):
    if isinstance(value, float):
        if math.isfinite(value):
            return format(value, ".17g")
        return json.dumps(value if value == value else None)
    if isinstance(value, (np.floating,)):
        return _fmt(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int,)):
        return str(value)
    if value is None:
        return "null"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, np.ndarray):
        return _fmt(list(value))
    if isinstance(value, dict):
        inner = ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}"
                          for k, v in value.items())
        return "{" + inner + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return json.dumps(value)


def dumps17(obj):
    """JSON text with floats at 17 significant digits (replay-exact)."""
    return _fmt(obj)


def _emit(obj, out_path=None):
    text = dumps17(obj)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _measure(args):
    spec = load_measure(args.measure)
    return spec


def _alpha_for(spec, args):
    builtin = intrinsic_alpha(spec)
    alpha = getattr(args, "alpha", None)
    if alpha is None:
        if builtin is None:
            raise ConfigError("this family needs --alpha")
        return builtin
    if builtin is not None and abs(alpha - builtin) > 1e-9:
        raise ConfigError(
            f"family {spec.family!r} has intrinsic index {builtin:.6g}; "
            f"--alpha {alpha} conflicts")
    return float(alpha)


def _shape_json(shape):
    return {"poly_exponent": shape.poly_exponent,
            "exp_terms": [[c, p] for c, p in shape.exp_terms],
            "validity": shape.validity}


# -- verbs -------------------------------------------------------------------

def cmd_phi(args):
    spec = _measure(args)
    ev = PhiEvaluator(spec, method=args.method)
    value = ev.phi(args.x)
    _emit({"value": value, "method": ev.method,
           "achieved_error": ev.error_estimate(),
           "config": {"measure": args.measure, "x": args.x,
                      "method": args.method}}, args.out)
    return 0


def cmd_psi(args):
    spec = _measure(args)
    solver = PsiSolver(PhiEvaluator(spec))
    y = solver.psi(args.x)
    residual = abs(y / solver.evaluator.phi(y) - args.x) / args.x
    _emit({"psi": y, "psi_prime": solver.psi_prime(args.x),
           "residual": residual, "x_psi": solver.x_psi,
           "config": {"measure": args.measure, "x": args.x}}, args.out)
    return 0


def cmd_hcheck(args):
    spec = _measure(args)
    report = PhiEvaluator(spec).check_hypothesis(x_max=args.xmax,
                                                 n_grid=args.ngrid)
    _emit({"tail_sup": report.tail_sup, "pass": report.passed,
           "delta": report.delta,
           "grid": list(report.grid), "ratio": list(report.ratio),
           "config": {"measure": args.measure, "xmax": args.xmax,
                      "ngrid": args.ngrid}}, args.out)
    return 0


_TAIL_MODES = {"theorem1": "exact", "exact": "exact",
               "lemma9": "expansion", "expansion": "expansion",
               "example": "family", "family": "family"}


def cmd_tail(args):
    spec = _measure(args)
    alpha = _alpha_for(spec, args)
    mode = _TAIL_MODES[args.mode]
    shape = None
    if mode == "exact":
        solver = PsiSolver(PhiEvaluator(spec))
        t0 = args.t0 if args.t0 is not None else default_t0(solver, alpha)
        est = extinction_log_tail(solver, alpha, args.t, t0=t0)
        tagged = tagged_log_tail(solver, alpha, args.t, t0=t0)
        out = {"log_value": est.log_value, "value_or_null": est.value,
               "tagged_log_value": tagged.log_value, "t0": t0}
    else:
        if mode == "expansion":
            shape = tail_shape_from_expansion(phi_expansion(spec), alpha)
        else:
            shape = family_tail_shape(spec, alpha)
        log_value = float(shape.log_value(args.t))
        out = {"log_value": log_value,
               "value_or_null": math.exp(log_value)
               if log_value > -745.0 else None,
               "t0": None}
    out["shape"] = _shape_json(shape) if shape is not None else None
    out["config"] = {"measure": args.measure, "alpha": alpha, "t": args.t,
                     "mode": args.mode, "t0": args.t0}
    _emit(out, args.out)
    return 0


def cmd_shape(args):
    spec = _measure(args)
    alpha = _alpha_for(spec, args)
    shape = family_tail_shape(spec, alpha)
    _emit({"shape": _shape_json(shape),
           "config": {"measure": args.measure, "alpha": alpha}}, args.out)
    return 0


def cmd_simulate(args):
    spec = _measure(args)
    checkpoints = tuple(float(v) for v in args.checkpoints.split(",")) \
        if args.checkpoints else ()
    cfg = CascadeConfig(alpha=args.alpha, cutoff=args.cutoff,
                        checkpoints=checkpoints, max_events=args.max_events,
                        seed=args.seed, tags=args.tags)
    ens = run_ensemble(spec, cfg, args.runs, workers=args.workers)
    header = {"measure": args.measure, "alpha": args.alpha,
              "runs": args.runs, "cutoff": args.cutoff,
              "checkpoints": list(checkpoints), "seed": args.seed,
              "tags": args.tags, "max_events": args.max_events,
              "workers": args.workers or default_workers()}
    out = args.out or "-"
    fh = sys.stdout if out == "-" else open(out, "w", newline="")
    try:
        fh.write("# " + dumps17(header) + "\n")
        writer = csv.writer(fh)
        cols = ["run_id", "extinction_est", "trunc_error_bound", "truncated",
                "first_event"]
        for t in checkpoints:
            cols += [f"F1_t{t:g}", f"S1_t{t:g}", f"S2_t{t:g}"]
            for k in range(args.tags):
                cols.append(f"tag{k + 1}_t{t:g}")
        if args.tags == 2:
            cols.append("t_sep")
        for k in range(args.tags):
            cols += [f"tag{k + 1}_death", f"tag{k + 1}_killed"]
        writer.writerow(cols)
        for i in range(ens.n_runs):
            row = [i, _fmt(float(ens.zeta[i])),
                   _fmt(float(ens.trunc_error_bound[i])),
                   int(ens.truncated[i]), _fmt(float(ens.first_event[i]))]
            for j in range(len(checkpoints)):
                row.append(_fmt(float(ens.largest[i, j])))
                row.append(_fmt(float(ens.sum_masses[i, j])))
                row.append(_fmt(float(ens.sum_squares[i, j])))
                for k in range(args.tags):
                    row.append(_fmt(float(ens.tag_mass[k, i, j])))
            if args.tags == 2:
                row.append(_fmt(float(ens.separation_time[i])))
            for k in range(args.tags):
                row.append(_fmt(float(ens.tag_death[k, i])))
                row.append(int(ens.tag_killed[k, i]))
            writer.writerow(row)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_zeta_tag(args):
    spec = _measure(args)
    out = sample_zeta_tag(spec, args.alpha, args.tol, args.n,
                          _generator(args.seed))
    header = {"measure": args.measure, "alpha": args.alpha, "n": args.n,
              "tol": args.tol, "seed": args.seed}
    dest = args.out or "-"
    fh = sys.stdout if dest == "-" else open(dest, "w", newline="")
    try:
        fh.write("# " + dumps17(header) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "value", "trunc_bound", "killed"])
        for i in range(args.n):
            writer.writerow([i, _fmt(float(out["value"][i])),
                             _fmt(float(out["bound"][i])),
                             int(out["killed"][i])])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def _read_samples(path, column):
    with open(path) as fh:
        first = fh.readline()
        has_header_comment = first.startswith("#")
        if not has_header_comment:
            fh.seek(0)
        reader = csv.reader(fh)
        header = next(reader)
        if column not in header:
            raise ConfigError(
                f"column {column!r} not in {path!r} (have {header})")
        idx = header.index(column)
        return np.array([float(row[idx]) for row in reader if row])


def cmd_fit(args):
    samples = _read_samples(args.samples, args.column)
    with open(args.shape) as fh:
        shape_doc = json.load(fh)
    shape = TailShape(
        poly_exponent=float(shape_doc["poly_exponent"]),
        exp_terms=tuple((float(c), float(p))
                        for c, p in shape_doc["exp_terms"]))
    lo, hi = (float(v) for v in args.window.split(","))
    levels = np.geomspace(hi, lo * 1.3, args.levels)
    t_grid = np.unique(np.quantile(samples, 1.0 - levels))
    curve = survival_curve(samples, t_grid)
    fit = shape_fit(curve, shape, window=(lo, hi))
    _emit({"fitted_constant": fit.fitted_constant,
           "max_abs_residual": fit.max_abs_residual,
           "t_window": list(fit.t_window),
           "residuals": list(fit.residuals),
           "shape": _shape_json(shape),
           "config": {"samples": args.samples, "column": args.column,
                      "window": [lo, hi], "levels": args.levels}}, args.out)
    return 0


_IDENTITY_ALIASES = {"eq10": "separation", "separation": "separation",
                     "eq13": "restart", "restart": "restart",
                     "s2": "tagmass", "tagmass": "tagmass",
                     "joint": "joint"}


def cmd_identity(args):
    from . import acceptance as acc
    spec = _measure(args)
    suite = _IDENTITY_ALIASES[args.suite]
    checkpoints = tuple(float(v) for v in args.checkpoints.split(",")) \
        if args.checkpoints else (1.0, 2.0, 4.0, 6.0)
    if suite in ("separation", "tagmass", "joint"):
        cfg = CascadeConfig(alpha=args.alpha, cutoff=args.cutoff,
                            checkpoints=checkpoints, seed=args.seed, tags=2,
                            record_largest=False)
        ens = run_ensemble(spec, cfg, args.runs, workers=args.workers)
        from .stats import paired_mean_diff
        rows = []
        ok = True
        for j, t in enumerate(checkpoints):
            if suite == "tagmass":
                est = paired_mean_diff(ens.tag_mass[0][:, j],
                                       ens.sum_squares[:, j])
            elif suite == "separation":
                est = paired_mean_diff(
                    (ens.separation_time > t).astype(float),
                    ens.tag_mass[0][:, j])
            else:
                est = paired_mean_diff(
                    ens.tag_mass[0][:, j] * ens.tag_mass[1][:, j],
                    ens.sum_squares[:, j] ** 2)
            z = est.mean / est.stderr
            ok &= abs(z) <= 4.0
            rows.append({"t": t, "mean_diff": est.mean,
                         "stderr": est.stderr, "z": z})
        out = {"suite": args.suite, "pass": ok, "rows": rows}
    else:  # restart recursion via two-sample KS
        from .stats import ks_two_sample
        base = dict(alpha=args.alpha, cutoff=args.cutoff,
                    record_sums=False, record_largest=False)
        pilot = run_ensemble(spec, CascadeConfig(seed=args.seed, **base),
                             args.runs, workers=args.workers)
        t_star = float(np.quantile(pilot.zeta, 0.7))
        ens_a = run_ensemble(spec, CascadeConfig(seed=args.seed + 1, **base),
                             args.runs, workers=args.workers)
        ens_b = run_ensemble(spec,
                             CascadeConfig(seed=args.seed + 2,
                                           snapshot_time=t_star, **base),
                             args.runs, workers=args.workers)
        pool = run_ensemble(spec, CascadeConfig(seed=args.seed + 3, **base),
                            max(len(ens_b.snapshot_mass), 1000),
                            workers=args.workers)
        abs_alpha = -args.alpha
        vals = (ens_b.snapshot_mass ** abs_alpha
                * pool.zeta[:len(ens_b.snapshot_mass)])
        side_b = np.zeros(args.runs)
        np.maximum.at(side_b, ens_b.snapshot_run, vals)
        ks = ks_two_sample(np.maximum(ens_a.zeta - t_star, 0.0), side_b)
        out = {"suite": args.suite, "pass": ks.pass_1pct, "t_star": t_star,
               "ks_statistic": ks.statistic,
               "ks_threshold_1pct": ks.threshold_1pct}
    out["config"] = {"measure": args.measure, "alpha": args.alpha,
                     "runs": args.runs, "cutoff": args.cutoff,
                     "seed": args.seed,
                     "checkpoints": list(checkpoints)}
    _emit(out, args.out)
    return 0 if out["pass"] else 1


def cmd_verify(args):
    from . import acceptance as acc
    only = set(int(v) for v in args.only.split(",")) if args.only else None
    results = acc.run_all(fast=args.fast, workers=args.workers, only=only)
    print(acc.format_table(results))
    return 0 if all(r.passed for r in results) else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fragtail",
        description="Extinction-time tail asymptotics of self-similar "
                    "fragmentation cascades")
    sub = parser.add_subparsers(dest="verb", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        p.add_argument("--out", default=None, help="output path (default stdout)")
        return p

    p = add("phi", cmd_phi, help="evaluate the splitting Laplace exponent")
    p.add_argument("--measure", required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--method", default="auto",
                   choices=["auto", "atomic-sum", "closed-form", "quadrature"])

    p = add("psi", cmd_psi, help="invert x -> x/phi(x)")
    p.add_argument("--measure", required=True)
    p.add_argument("--x", type=float, required=True)

    p = add("hcheck", cmd_hcheck,
            help="growth-ratio diagnostic sup phi'(x) x/phi(x) < 1")
    p.add_argument("--measure", required=True)
    p.add_argument("--xmax", type=float, default=1e4)
    p.add_argument("--ngrid", type=int, default=200)

    p = add("tail", cmd_tail, help="evaluate the extinction-time tail class")
    p.add_argument("--measure", required=True)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--mode", default="theorem1", choices=sorted(_TAIL_MODES))
    p.add_argument("--t0", type=float, default=None)

    p = add("shape", cmd_shape, help="closed tail shape of a registry family")
    p.add_argument("--measure", required=True)
    p.add_argument("--alpha", type=float, default=None)

    p = add("simulate", cmd_simulate, help="Monte Carlo cascade ensemble")
    p.add_argument("--measure", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--cutoff", type=float, default=2.0 ** -30)
    p.add_argument("--checkpoints", default="")
    p.add_argument("--max-events", type=int, default=10 ** 6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tags", type=int, default=0, choices=[0, 1, 2])
    p.add_argument("--workers", type=int, default=None)

    p = add("zeta-tag", cmd_zeta_tag,
            help="direct tagged-lineage extinction sampler")
    p.add_argument("--measure", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)

    p = add("fit", cmd_fit, help="fit a tail shape to extinction samples")
    p.add_argument("--samples", required=True)
    p.add_argument("--column", default="extinction_est")
    p.add_argument("--shape", required=True)
    p.add_argument("--window", default="1e-3,0.2")
    p.add_argument("--levels", type=int, default=16)

    p = add("identity", cmd_identity,
            help="exact-in-law Monte Carlo identity suites")
    p.add_argument("--suite", required=True,
                   choices=sorted(_IDENTITY_ALIASES))
    p.add_argument("--measure", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--runs", type=int, default=20000)
    p.add_argument("--cutoff", type=float, default=2.0 ** -12)
    p.add_argument("--checkpoints", default="")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)

    p = add("verify", cmd_verify, help="run the full acceptance suite")
    p.add_argument("--fast", action="store_true",
                   help="reduced Monte Carlo sizes (tolerances unchanged)")
    p.add_argument("--only", default=None,
                   help="comma-separated criterion numbers")
    p.add_argument("--workers", type=int, default=None)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except _NUMERIC_EXIT as exc:
        sys.stderr.write(dumps17({"error": type(exc).__name__,
                                  "message": str(exc)}) + "\n")
        return 1
    except _CONFIG_EXIT as exc:
        sys.stderr.write(dumps17({"error": type(exc).__name__,
                                  "message": str(exc)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
