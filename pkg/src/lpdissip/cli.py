"""Command line front end: ``lpdissip <command> ...`` (or ``python3 -m lpdissip``).

Exit codes: 0 every verdict holds, 1 some verdict proves failure,
2 an indeterminate verdict is present, 3 input or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

import numpy as np

from . import harness
from .harness import (
    EXIT_FAILS,
    EXIT_HOLDS,
    EXIT_INDETERMINATE,
    EXIT_INPUT,
    RunOptions,
    rows_to_csv,
)
from .io import SpecParseError, decode_complex, dump_json, load_json
from .model import DissipError, GridFunction, Status, Tolerances, Verdict, box_grid, make_exponent
from .probe import ProbeBudget


def _common(p: argparse.ArgumentParser, need_p: bool = True) -> None:
    p.add_argument("--p", type=float, required=need_p, help="exponent p in (1, inf)")
    p.add_argument("--out", choices=("json", "csv"), default="json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol-eig", type=float, default=1e-9)
    p.add_argument("--tol-form", type=float, default=1e-7)
    p.add_argument("--threads", type=int, default=1)


def _tol(args) -> Tolerances:
    return Tolerances(eig=args.tol_eig, form=args.tol_form)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lpdissip", description="L^p-dissipativity checks for differential and nonlocal operators")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run all applicable criteria on a spec file or corpus entry")
    run.add_argument("--spec", help="path to a JSON spec")
    run.add_argument("--corpus", help="name of a shipped corpus entry")
    run.add_argument("--criterion", action="append", help="restrict to these criteria")
    run.add_argument("--probe", action="store_true", help="also run the counterexample search")
    run.add_argument("--restarts", type=int, default=4)
    run.add_argument("--grid", type=int, default=33)
    _common(run, need_p=False)

    chk = sub.add_parser("check", help="algebraic criteria")
    chk_sub = chk.add_subparsers(dest="target", required=True)
    cs = chk_sub.add_parser("scalar")
    cs.add_argument("--spec", required=True)
    cs.add_argument("--criterion", choices=("main", "quadform", "polynomial", "constant", "repart"), action="append")
    cs.add_argument("--search-alpha-beta", action="store_true")
    _common(cs)
    csy = chk_sub.add_parser("system")
    csy.add_argument("--spec", required=True)
    _common(csy)
    ce = chk_sub.add_parser("elasticity")
    ce.add_argument("--nu", type=float)
    mode = ce.add_mutually_exclusive_group()
    mode.add_argument("--planar", action="store_true")
    mode.add_argument("--ndim", type=int, metavar="N")
    mode.add_argument("--alpha-range", type=int, metavar="N")
    ce.add_argument("--sweep", help="e.g. nu=-1:0.49:0.01,p=1.1:10:0.1")
    _common(ce, need_p=False)

    pr = sub.add_parser("probe", help="numerical counterexample search")
    pr.add_argument("what", nargs="?", choices=("spec", "sigma-example"), default="spec")
    pr.add_argument("--spec")
    pr.add_argument("--restarts", type=int, default=20)
    pr.add_argument("--iterations", type=int, default=15)
    pr.add_argument("--grid", type=int, default=33)
    pr.add_argument("--lambda", dest="lam", type=float, help="sigma example: lambda (default 2 lambda*)")
    pr.add_argument("--t", type=float, help="sigma example: t (default the minimizing t)")
    _common(pr, need_p=False)

    nl = sub.add_parser("nonlocal", help="positivity bound for the nonlocal form")
    nl.add_argument("--s", type=float, default=0.5)
    nl.add_argument("--grid", type=int, default=41)
    nl.add_argument("--dim", type=int, default=1, choices=(1, 2))
    nl.add_argument("--kernel", help="CSV table with columns r,density")
    _common(nl)

    ob = sub.add_parser("oblique", help="oblique derivative boundary operator")
    ob.add_argument("--a", required=True, help="JSON file: {\"a\": [[re, im], ...]} or a sampled field with grid and div_a")
    ob.add_argument("--real", action="store_true")
    ob.add_argument("--probe-budget", type=float, default=64.0, help="periodic padding factor for the Lambda matrix")
    _common(ob)

    cap = sub.add_parser("capacity", help="capacity of a set or Schrodinger capacity test")
    cap.add_argument("--set", required=True, help="JSON with a ball {\"ball\": {\"center\": [...], \"r\": R}} or a mask")
    cap.add_argument("--box", type=float, nargs="+", required=True, help="half width W (and optionally N points per axis)")
    cap.add_argument("--dim", type=int, default=2)
    _common(cap, need_p=False)

    sw = sub.add_parser("sweep", help="Cartesian parameter sweep over a spec template")
    sw.add_argument("--spec", help="template spec (path)")
    sw.add_argument("--corpus", help="template from the corpus")
    sw.add_argument("--sweep", required=True, help="e.g. nu=-1:0.49:0.01,p=1.1:10:0.1")
    _common(sw, need_p=False)
    return ap


def _emit(obj, args, rows=None) -> None:
    if args.out == "csv" and rows is not None:
        sys.stdout.write(rows_to_csv(rows))
    else:
        sys.stdout.write(dump_json(obj) + "\n")


def _verdict_rows(verdicts, spec_id, p):
    rep = harness.RunReport(spec_id, p, list(verdicts))
    return rep.csv_rows(), rep.exit_code


def _cmd_run(args) -> int:
    if bool(args.spec) == bool(args.corpus):
        raise SpecParseError("give exactly one of --spec or --corpus")
    doc = load_json(args.spec) if args.spec else harness.load_corpus_entry(args.corpus)
    p = args.p if args.p is not None else doc.get("expect", {}).get("p")
    if p is None:
        raise SpecParseError("--p is required for this spec")
    opts = RunOptions(probe=args.probe, budget=ProbeBudget(restarts=args.restarts, grid=args.grid, seed=args.seed),
                      criteria=tuple(args.criterion) if args.criterion else None, tol=_tol(args))
    rep = harness.run_spec(doc, p, opts)
    _emit(rep.to_dict(), args, rep.csv_rows())
    return rep.exit_code


def _cmd_check(args) -> int:
    e_needed = args.target != "elasticity" or not args.sweep
    if e_needed and args.p is None:
        raise SpecParseError("--p is required")
    if args.target in ("scalar", "system"):
        doc = load_json(args.spec)
        crit = tuple(args.criterion) if getattr(args, "criterion", None) else None
        opts = RunOptions(criteria=crit, tol=_tol(args),
                          polynomial_search=getattr(args, "search_alpha_beta", False))
        rep = harness.run_spec(doc, args.p, opts)
        _emit(rep.to_dict(), args, rep.csv_rows())
        return rep.exit_code
    # elasticity
    if args.sweep:
        template = {"id": "elasticity", "kind": "elasticity", "n": args.ndim or 2, "m": args.ndim or 2, "nu": 0.0}
        rows = harness.sweep(harness.parse_sweep(args.sweep), template,
                             RunOptions(tol=_tol(args)), args.threads, args.p)
        sys.stdout.write(rows_to_csv(rows))
        return _rows_exit(rows)
    from . import systems

    e = make_exponent(args.p)
    if args.alpha_range:
        lo, hi = systems.elasticity_weighted_alpha_range(args.alpha_range, e)
        _emit({"n": args.alpha_range, "p": e.p, "alpha_min": lo, "alpha_max": hi}, args)
        return EXIT_HOLDS
    if args.nu is None:
        raise SpecParseError("--nu is required")
    if args.ndim and args.ndim >= 3:
        v = systems.elasticity_ndim_sufficient(args.nu, e, _tol(args))
    else:
        v = systems.elasticity_planar(args.nu, e, _tol(args))
    rows, code = _verdict_rows([v], "elasticity", e.p)
    _emit(v.to_dict(), args, rows)
    return code


def _rows_exit(rows) -> int:
    statuses = [r["status"] for r in rows]
    if any(s.startswith("error") for s in statuses):
        return EXIT_INPUT
    if any(s in (Status.PROVEN_NOT_DISSIPATIVE.value, Status.NECESSARY_FAILS.value) for s in statuses):
        return EXIT_FAILS
    if any(s == Status.INDETERMINATE.value for s in statuses):
        return EXIT_INDETERMINATE
    return EXIT_HOLDS


def _cmd_probe(args) -> int:
    from .probe import (bump, search_counterexample, sigma_lambda_threshold, sigma_minimizing_t,
                        sigma_modal_probe, sigma_modal_direct)

    if args.what == "sigma-example":
        origin, h, X = box_grid(-1.0, 1.0, args.grid, 2)
        sig = GridFunction(bump(X, radius=0.8), origin, h)
        lstar = sigma_lambda_threshold(sig)
        lam = args.lam if args.lam is not None else 2.0 * lstar
        t = args.t if args.t is not None else sigma_minimizing_t(sig, lam)
        q = sigma_modal_probe(sig, lam, t)
        out = {"lambda": lam, "lambda_star": lstar, "t": t, "q": q,
               "q_direct": sigma_modal_direct(sig, lam, t), "negative": q < -10 * args.tol_form}
        _emit(out, args)
        return EXIT_FAILS if out["negative"] else EXIT_INDETERMINATE
    if not args.spec:
        raise SpecParseError("--spec is required")
    if args.p is None:
        raise SpecParseError("--p is required")
    spec = harness.materialize(harness.spec_from_dict(load_json(args.spec)))
    e = make_exponent(args.p)
    res = search_counterexample(spec, e, ProbeBudget(restarts=args.restarts, iterations=args.iterations,
                                                     grid=args.grid, seed=args.seed))
    _emit(res.to_dict(), args)
    return EXIT_FAILS if res.value < -10 * args.tol_form else EXIT_INDETERMINATE


def _read_kernel_csv(path: str):
    import csv

    radii, dens = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                radii.append(float(row[0]))
                dens.append(float(row[1]))
            except (ValueError, IndexError):
                continue  # header line
    return tuple(radii), tuple(dens)


def _cmd_nonlocal(args) -> int:
    from .nonlocal_forms import KernelSpec, check_positivity_bound
    from .probe import bump

    e = make_exponent(args.p)
    if args.kernel:
        r, d = _read_kernel_csv(args.kernel)
        k = KernelSpec("tabulated", n=args.dim, radii=r, density=d)
    else:
        k = KernelSpec("fractional", n=args.dim, s=args.s)
    origin, h, X = box_grid(-1.2, 1.2, args.grid, args.dim)
    u = GridFunction(bump(X) * (1.0 - 0.5 * X[0]) - 0.4 * bump(X, 0.5, center=[0.4] * args.dim), origin, h)
    rep = check_positivity_bound(u, e, k, _tol(args), s=args.s)
    out = {"lhs": rep.lhs, "rhs_half": rep.rhs_half, "margin": rep.margin,
           "besov_bound": rep.besov_bound, "holds": rep.holds, "rhs_printed": rep.rhs_printed}
    v = Verdict(Status.PROVEN_DISSIPATIVE if rep.holds else Status.INDETERMINATE, "nonlocal-positivity", rep.margin)
    rows, code = _verdict_rows([v], "nonlocal", e.p)
    _emit(out, args, rows)
    return code


def _cmd_oblique(args) -> int:
    from .oblique import check_constant_oblique, check_real_oblique

    e = make_exponent(args.p)
    doc = load_json(args.a)
    if "a" not in doc:
        raise SpecParseError("missing key", "/a")
    a = decode_complex(doc["a"], "/a")
    if a.ndim == 1 and not args.real:
        v = check_constant_oblique(a, e, _tol(args))
    else:
        g = doc.get("grid")
        if g is None:
            if a.ndim != 1:
                raise SpecParseError("sampled field needs a grid", "/grid")
            origin, h, _ = box_grid(-2.0, 2.0, 41, a.shape[0])
            g = {"origin": list(origin), "spacing": h, "shape": [41] * a.shape[0]}
        grid = GridFunction(np.zeros(tuple(g["shape"])), tuple(g["origin"]), float(g["spacing"]))
        div = doc.get("div_a")
        v = check_real_oblique(a.real if a.ndim == 1 else a, e, grid,
                               None if div is None else np.asarray(div, float), _tol(args),
                               padding=args.probe_budget)
    rows, code = _verdict_rows([v], "oblique", e.p)
    _emit(v.to_dict(), args, rows)
    return code


def _cmd_capacity(args) -> int:
    from .capacity import ball_mask, capacity_on_axes, check_schrodinger_capacity

    doc = load_json(args.set)
    W = args.box[0]
    N = int(args.box[1]) if len(args.box) > 1 else 41
    axes = [np.linspace(-W, W, N)] * args.dim
    if "ball" in doc:
        b = doc["ball"]
        mask = ball_mask(axes, float(b["r"]), b.get("center"))
    elif "mask" in doc:
        mask = np.asarray(doc["mask"], bool)
    else:
        raise SpecParseError("expected 'ball' or 'mask'", "/")
    res = capacity_on_axes(mask, axes)
    out = {"capacity": res.value, "residual": res.residual}
    if "mu" in doc:
        if args.p is None:
            raise SpecParseError("--p is required for the Schrodinger test")
        mu = GridFunction(np.full(mask.shape, float(doc["mu"])) * mask, tuple(a[0] for a in axes),
                          axes[0][1] - axes[0][0], check_support=False)
        v = check_schrodinger_capacity(mu, make_exponent(args.p), [mask], _tol(args))
        out["verdict"] = v.to_dict()
        _emit(out, args)
        return harness.RunReport("capacity", args.p, [v]).exit_code
    _emit(out, args)
    return EXIT_HOLDS


def _cmd_sweep(args) -> int:
    if bool(args.spec) == bool(args.corpus):
        raise SpecParseError("give exactly one of --spec or --corpus")
    template = load_json(args.spec) if args.spec else harness.load_corpus_entry(args.corpus)
    rows = harness.sweep(harness.parse_sweep(args.sweep), template, RunOptions(tol=_tol(args)),
                         args.threads, args.p)
    if args.out == "csv":
        sys.stdout.write(rows_to_csv(rows))
    else:
        sys.stdout.write(json.dumps(rows, indent=2) + "\n")
    return _rows_exit(rows)


COMMANDS = {"run": _cmd_run, "check": _cmd_check, "probe": _cmd_probe, "nonlocal": _cmd_nonlocal,
            "oblique": _cmd_oblique, "capacity": _cmd_capacity, "sweep": _cmd_sweep}


def main(argv: Optional[Sequence[str]] = None) -> int:
    harness.configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_HOLDS if exc.code == 0 else EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except DissipError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
