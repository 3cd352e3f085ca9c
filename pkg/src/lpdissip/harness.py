"""Run every applicable criterion on a spec, collect reports, and sweep parameters."""

from __future__ import annotations

import csv
import io as _io
import itertools
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import scalar, systems
from .io import load_json, spec_from_dict, to_jsonable
from .model import (
    DEFAULT_TOL,
    ConfigurationError,
    DissipError,
    Exponent,
    GridFunction,
    OperatorSpec,
    Status,
    Tolerances,
    Verdict,
    box_grid,
    make_exponent,
)
from .probe import (
    ProbeBudget,
    ProbeResult,
    evaluate_scalar_form,
    random_test_functions,
    search_counterexample,
    sigma_example_spec,
    bump,
)

log = logging.getLogger("lpdissip")

EXIT_HOLDS, EXIT_FAILS, EXIT_INDETERMINATE, EXIT_INPUT = 0, 1, 2, 3
CSV_COLUMNS = ("spec_id", "p", "criterion", "status", "margin", "certificate_ref")


def configure_logging() -> None:
    level = os.environ.get("DISSIP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


@dataclass(frozen=True)
class RunOptions:
    probe: bool = False
    budget: ProbeBudget = ProbeBudget(restarts=4, iterations=10)
    random_tests: int = 0
    criteria: Optional[tuple] = None
    tol: Tolerances = DEFAULT_TOL
    polynomial_search: bool = False
    sphere: systems.SphereSearchConfig = systems.SphereSearchConfig()


@dataclass
class RunReport:
    spec_id: str
    p: float
    verdicts: list = field(default_factory=list)
    probes: dict = field(default_factory=dict)
    agreement: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        statuses = [v.status for v in self.verdicts]
        if any(s.fails for s in statuses):
            return EXIT_FAILS
        if any(s is Status.INDETERMINATE for s in statuses) or not statuses:
            return EXIT_INDETERMINATE
        return EXIT_HOLDS

    def verdict(self, criterion: str) -> Verdict:
        for v in self.verdicts:
            if v.criterion == criterion:
                return v
        raise KeyError(criterion)

    def to_dict(self, timings: bool = False) -> dict:
        out = {"spec_id": self.spec_id, "p": self.p,
               "verdicts": [v.to_dict() for v in self.verdicts],
               "probes": {k: _probe_summary(r) for k, r in self.probes.items()},
               "agreement": self.agreement, "exit_code": self.exit_code}
        if timings:
            out["timings"] = self.timings
        return to_jsonable(out)

    def csv_rows(self) -> list:
        rows = []
        for i, v in enumerate(self.verdicts):
            ref = f"{self.spec_id}#{v.criterion}" if v.certificate is not None else ""
            rows.append({"spec_id": self.spec_id, "p": _fmt(self.p), "criterion": v.criterion,
                         "status": v.status.value, "margin": _fmt(v.margin), "certificate_ref": ref})
        return rows


def _fmt(x: float) -> str:
    return repr(float(x))


def _probe_summary(r: ProbeResult) -> dict:
    return {"value": r.value, "converged": r.converged, "evaluations": r.evaluations}


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


# ---------------------------------------------------------------- spec building

def materialize(spec: OperatorSpec) -> OperatorSpec:
    """Expand generator entries (for instance the sigma example) into sampled coefficients."""
    gen = (spec.extra or {}).get("generator")
    if gen is None:
        return spec
    if gen == "sigma":
        ex = spec.extra
        N = int(ex.get("grid", 33))
        origin, h, X = box_grid(-1.0, 1.0, N, 2)
        sig = GridFunction(bump(X, radius=float(ex.get("radius", 0.8))), origin, h)
        from .probe import sigma_lambda_threshold
        lam = float(ex.get("lambda", 0.0)) or float(ex.get("lambda_factor", 2.0)) * sigma_lambda_threshold(sig)
        built = sigma_example_spec(sig, lam)
        return replace(built, id=spec.id or built.id, extra=dict(ex, lambda_value=lam))
    raise ConfigurationError(f"unknown spec generator {gen!r}")


def _wanted(opts: RunOptions, name: str) -> bool:
    return opts.criteria is None or name in opts.criteria


def _scalar_verdicts(spec: OperatorSpec, e: Exponent, opts: RunOptions) -> list:
    out = []
    tol = opts.tol
    ex = spec.extra or {}
    params = scalar.PolynomialConditionParams(float(ex.get("alpha", 0.0)), float(ex.get("beta", 0.0)))
    if spec.is_field:
        for which in ("main", "quadform", "repart", "polynomial"):
            if _wanted(opts, which):
                out.append(scalar.check_field(spec, e, which, tol, params))
        return out
    lower = spec.has_lower_order
    if _wanted(opts, "main"):
        out.append(scalar.check_main_condition(spec.A, e, tol, has_lower_order=lower))
    if _wanted(opts, "quadform"):
        out.append(scalar.check_quadratic_form_condition(spec.A, e, tol, has_lower_order=lower))
    if _wanted(opts, "repart"):
        out.append(scalar.check_necessary_repart(spec.A, tol))
    if _wanted(opts, "polynomial"):
        out.append(scalar.check_polynomial_condition(spec, e, params, tol, search=opts.polynomial_search))
    if _wanted(opts, "constant") and np.ndim(spec.b) == 1 and np.ndim(spec.a) == 0:
        # for constant c, div(c u) = c . grad u
        out.append(scalar.check_constant_coefficients(spec.A, spec.b + spec.c, complex(spec.a), e, tol))
    return out


def _system_verdicts(spec: OperatorSpec, e: Exponent, opts: RunOptions) -> list:
    tol = opts.tol
    if spec.kind == "system-first-order":
        if spec.Ch is not None:
            return [systems.check_first_order_general(spec.Bh, spec.Ch, spec.D, spec.dBh, spec.dCh, e, tol)]
        return [systems.check_first_order(spec.Bh, spec.D, spec.dBh, e, tol)]
    if spec.Bh is None and spec.D is None:
        return [systems.check_second_order_system(spec.Ah, e, opts.sphere, tol)]
    return [systems.check_combined_second_order(spec.Ah, spec.Bh, spec.D, spec.dBh, e, opts.sphere, tol)]


def _elasticity_verdicts(spec: OperatorSpec, e: Exponent, opts: RunOptions) -> list:
    tol = opts.tol
    out = []
    nu = spec.nu
    if nu is None:
        raise ConfigurationError("elasticity spec needs a Poisson ratio")
    if np.ndim(nu) > 0:
        out.append(systems.elasticity_necessary_variable_nu(nu, e, tol=tol))
    elif spec.n == 2:
        out.append(systems.elasticity_planar(float(nu), e, tol))
    else:
        out.append(systems.elasticity_ndim_sufficient(float(nu), e, tol))
    alpha = (spec.extra or {}).get("alpha")
    if alpha is not None:
        lo, hi = systems.elasticity_weighted_alpha_range(spec.n, e)
        inside = systems.alpha_in_range(float(alpha), spec.n, e)
        margin = min(float(alpha) - lo, hi - float(alpha))
        cert = None if inside else {"alpha": float(alpha), "range": [lo, hi]}
        out.append(Verdict(Status.PROVEN_DISSIPATIVE if inside else Status.PROVEN_NOT_DISSIPATIVE,
                           "elasticity-weighted", margin, cert, {"range": [lo, hi]}))
    return out


def _oblique_verdicts(spec: OperatorSpec, e: Exponent, opts: RunOptions) -> list:
    from .oblique import check_constant_oblique, check_real_oblique
    from .io import decode_complex

    ex = spec.extra or {}
    if "a" not in ex:
        raise ConfigurationError("oblique spec needs extra.a")
    a = decode_complex(ex["a"], "/extra/a")
    if a.ndim == 1:
        return [check_constant_oblique(a, e, opts.tol)]
    if spec.grid is None:
        raise ConfigurationError("a sampled oblique coefficient needs a grid")
    g = spec.grid
    grid = GridFunction(np.zeros(tuple(g["shape"])), tuple(g["origin"]), float(g["spacing"]))
    div = ex.get("div_a")
    return [check_real_oblique(a, e, grid, None if div is None else np.asarray(div, float), opts.tol)]


def _nonlocal_verdicts(spec: OperatorSpec, e: Exponent, opts: RunOptions) -> list:
    from .nonlocal_forms import KernelSpec, check_positivity_bound

    ex = spec.extra or {}
    n = spec.n
    kern = ex.get("kernel", {"kind": "fractional", "s": 0.5})
    k = KernelSpec(kind=kern.get("kind", "fractional"), n=n, s=float(kern.get("s", 0.5)),
                   scale=float(kern.get("scale", 1.0)),
                   radii=tuple(kern["radii"]) if "radii" in kern else None,
                   density=tuple(kern["density"]) if "density" in kern else None)
    N = int(ex.get("grid", 41))
    origin, h, X = box_grid(-1.2, 1.2, N, n)
    u = GridFunction(bump(X) * (1.0 - 0.5 * X[0]) - 0.4 * bump(X, 0.5, center=[0.4] * n), origin, h)
    rep = check_positivity_bound(u, e, k, opts.tol)
    status = Status.PROVEN_DISSIPATIVE if rep.holds else Status.INDETERMINATE
    return [Verdict(status, "nonlocal-positivity", rep.margin, None, rep.to_dict())]


DISPATCH: dict = {
    "scalar": _scalar_verdicts,
    "system-first-order": _system_verdicts,
    "system-second-order": _system_verdicts,
    "elasticity": _elasticity_verdicts,
    "oblique": _oblique_verdicts,
    "nonlocal": _nonlocal_verdicts,
}


def _run_probe(spec: OperatorSpec, e: Exponent, opts: RunOptions) -> dict:
    out = {}
    if spec.kind not in ("scalar", "elasticity"):
        return out
    if spec.kind == "elasticity" and (spec.nu is None or np.ndim(spec.nu) != 0):
        return out
    budget = opts.budget
    if spec.is_field and spec.grid is None:
        raise ConfigurationError("sampled coefficients need a grid to probe on")
    out["search"] = search_counterexample(spec, e, budget)
    if opts.random_tests and spec.kind == "scalar":
        if spec.grid is not None:
            g = spec.grid
            shape, origin, h = tuple(g["shape"]), tuple(g["origin"]), float(g["spacing"])
        else:
            origin, h, _ = box_grid(budget.box[0], budget.box[1], budget.grid, spec.n)
            shape = (budget.grid,) * spec.n
        funcs = random_test_functions(shape, origin, h, opts.random_tests, budget.modes, budget.seed)
        q = max(e.p, e.p_conj)
        vals = []
        for u in funcs:
            norm = float(np.sum(np.abs(u.values) ** q) * h ** spec.n)
            vals.append(evaluate_scalar_form(u.with_values(u.values / norm ** (1 / q)), spec, e))
        i = int(np.argmin(vals))
        out["random"] = ProbeResult(float(vals[i]), funcs[i], True, len(vals))
    return out


def _agreement(verdicts: list, probes: dict, tol: Tolerances) -> dict:
    if not probes:
        return {}
    best = min(r.value for r in probes.values())
    found = best < -10 * tol.form
    out = {}
    for v in verdicts:
        if v.status.holds and v.status in (Status.PROVEN_DISSIPATIVE, Status.SUFFICIENT_HOLDS):
            out[v.criterion] = "conflict" if found else "agree"
        elif v.status.fails:
            out[v.criterion] = "agree" if found else "unconfirmed"
        else:
            out[v.criterion] = "counterexample" if found else "no-counterexample"
    return out


def run_spec(source: Union[str, Path, dict, OperatorSpec], e: Union[Exponent, float],
             options: RunOptions = RunOptions()) -> RunReport:
    if not isinstance(e, Exponent):
        e = make_exponent(float(e))
    if isinstance(source, OperatorSpec):
        spec = source
    elif isinstance(source, dict):
        spec = spec_from_dict(source)
    else:
        spec = spec_from_dict(load_json(source))
    spec = materialize(spec)
    rep = RunReport(spec.id or spec.kind, e.p)
    t0 = time.perf_counter()
    rep.verdicts = DISPATCH[spec.kind](spec, e, options)
    rep.timings["criteria"] = time.perf_counter() - t0
    if options.probe:
        t1 = time.perf_counter()
        rep.probes = _run_probe(spec, e, options)
        rep.timings["probe"] = time.perf_counter() - t1
    rep.agreement = _agreement(rep.verdicts, rep.probes, options.tol)
    log.info("spec %s p=%g: %s", rep.spec_id, e.p, [v.status.value for v in rep.verdicts])
    return rep


# ---------------------------------------------------------------- corpus

def corpus_dir() -> Path:
    return Path(str(resources.files("lpdissip") / "corpus"))


def corpus_names() -> list:
    return sorted(p.stem for p in corpus_dir().glob("*.json"))


def load_corpus_entry(name: str) -> dict:
    path = corpus_dir() / f"{name}.json"
    if not path.exists():
        raise ConfigurationError(f"no corpus entry {name!r}; available: {corpus_names()}")
    return load_json(path)


# ---------------------------------------------------------------- sweep

def parse_range(text: str) -> list:
    """``a:b:step`` (inclusive), ``a,b,c`` or a single number."""
    text = text.strip()
    if not text:
        raise ConfigurationError("empty range")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigurationError(f"range {text!r} must be a:b:step")
        a, b, st = map(float, parts)
        if st <= 0 or b < a:
            raise ConfigurationError(f"range {text!r} is empty")
        n = int(np.floor((b - a) / st + 1e-9)) + 1
        return [a + i * st for i in range(n)]
    return [float(x) for x in text.split(",") if x.strip()]


def parse_sweep(text: str) -> dict:
    out = {}
    for item in text.split(";") if ";" in text else _split_top(text):
        if "=" not in item:
            raise ConfigurationError(f"sweep item {item!r} must be name=range")
        k, v = item.split("=", 1)
        vals = parse_range(v)
        if not vals:
            raise ConfigurationError(f"empty range for {k}")
        out[k.strip()] = vals
    if not out:
        raise ConfigurationError("empty sweep")
    return out


def _split_top(text: str) -> list:
    """Split ``nu=a:b:s,p=1,2`` on commas that start a new ``name=`` item."""
    items, cur = [], ""
    for tok in text.split(","):
        if "=" in tok and cur:
            items.append(cur)
            cur = tok
        else:
            cur = tok if not cur else cur + "," + tok
    if cur:
        items.append(cur)
    return items


def _apply_params(template: dict, params: dict) -> tuple:
    doc = dict(template)
    p = params.get("p")
    for k, v in params.items():
        if k == "p":
            continue
        if k == "nu":
            doc["nu"] = v
        elif k == "gamma":
            n = int(doc.get("n", 2))
            A = np.eye(n, dtype=complex)
            A[0, 1] = 1j * v
            A[1, 0] = -1j * v
            from .io import encode_complex
            doc["A"] = encode_complex(A)
        elif k in ("s",):
            extra = dict(doc.get("extra", {}))
            kern = dict(extra.get("kernel", {"kind": "fractional"}))
            kern["s"] = v
            extra["kernel"] = kern
            doc["extra"] = extra
        elif k == "alpha":
            doc["extra"] = dict(doc.get("extra", {}), alpha=v)
        else:
            raise ConfigurationError(f"unknown sweep parameter {k!r}")
    tag = ",".join(f"{k}={params[k]:g}" for k in sorted(params))
    doc["id"] = f"{template.get('id', template.get('kind'))}[{tag}]"
    return doc, p


def sweep(ranges: dict, template: dict, options: RunOptions = RunOptions(), threads: int = 1,
          default_p: Optional[float] = None) -> list:
    """Cartesian product sweep; returns CSV row dicts in deterministic order."""
    if not ranges or any(len(v) == 0 for v in ranges.values()):
        raise ConfigurationError("empty sweep range")
    names = sorted(ranges)
    points = [dict(zip(names, combo)) for combo in itertools.product(*(ranges[k] for k in names))]

    def one(params):
        doc, p = _apply_params(template, params)
        p = p if p is not None else default_p
        if p is None:
            raise ConfigurationError("sweep needs p either as a range or via --p")
        try:
            return run_spec(doc, p, options).csv_rows()
        except DissipError as exc:
            return [{"spec_id": doc["id"], "p": _fmt(p), "criterion": "input",
                     "status": f"error: {exc}", "margin": "nan", "certificate_ref": ""}]

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(one, points))
    return [row for rows in results for row in rows]
