"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a numerical check fails,
2 for malformed input (unknown scenario keys, bad JSON, bad options).
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Optional

import click
import numpy as np

from . import chainops as co
from . import flow as fl
from . import form as fm
from . import norms as nm
from . import rep
from .chain import DiracChain
from .config import DEFAULT_SEED, FlowConfig, NormConfig, thread_cap
from .multivec import perp_sign


class SchemaError(click.ClickException):
    exit_code = 2


class CheckFailed(click.ClickException):
    exit_code = 1


# ------------------------------------------------------------------------------
# scenarios
# ------------------------------------------------------------------------------

_CHECK_KEYS = {"kind", "expected", "tol"}
_FLOW_KEYS = {"a", "b", "depth_space", "depth_time", "t", "h"}
_OUTPUT_KEYS = {"csv", "json"}


@dataclass
class Scenario:
    name: Optional[str] = None
    domain: Optional[dict] = None
    form: Optional[dict] = None
    ops: Optional[list] = None
    field: Optional[dict] = None
    flow: Optional[dict] = None
    check: Optional[dict] = None
    output: Optional[dict] = None
    seed: Optional[int] = None
    depth: Optional[int] = None
    r: Optional[int] = None

    @classmethod
    def from_json(cls, obj: Any) -> "Scenario":
        if not isinstance(obj, dict):
            raise SchemaError("scenario must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise SchemaError(f"unknown scenario keys: {sorted(unknown)}")
        for key, allowed in (("check", _CHECK_KEYS), ("flow", _FLOW_KEYS), ("output", _OUTPUT_KEYS)):
            sub = obj.get(key)
            if sub is not None:
                if not isinstance(sub, dict):
                    raise SchemaError(f"{key} must be an object")
                bad = set(sub) - allowed
                if bad:
                    raise SchemaError(f"unknown {key} keys: {sorted(bad)}")
        if "ops" in obj and not isinstance(obj["ops"], list):
            raise SchemaError("ops must be a list")
        for key in ("seed", "depth", "r"):
            if key in obj and not isinstance(obj[key], int):
                raise SchemaError(f"{key} must be an integer")
        return cls(**obj)

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}

    @classmethod
    def load(cls, path: str) -> "Scenario":
        try:
            obj = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read scenario {path}: {exc}") from exc
        return cls.from_json(obj)


def _schema(fn, *args):
    """Run a parser, turning its errors into schema violations."""
    try:
        return fn(*args)
    except (KeyError, ValueError, TypeError, IndexError) as exc:
        raise SchemaError(f"{getattr(fn, '__name__', 'parse')}: {exc}") from exc


_SIMPLE_OPS = {
    "boundary": None,
    "perp": co.perp,
    "coboundary": co.coboundary,
    "laplace": co.geomLaplace,
    "dirac": co.geomDirac,
}
_VECTOR_OPS = {"extrude": co.extrude, "retract": co.retract, "prederiv": co.prederiv, "dirBoundary": co.dirBoundary}


def apply_ops(S: rep.ChainStream, ops: list) -> rep.ChainStream:
    for op in ops or []:
        if isinstance(op, str):
            if op not in _SIMPLE_OPS:
                raise SchemaError(f"unknown operator {op!r}")
            if op == "boundary":
                S = S.boundary()
            else:
                S = rep.map_stream(S, _SIMPLE_OPS[op], name=op, rate_scale=1.0 if op == "perp" else None)
            continue
        if not isinstance(op, dict) or len(op) != 1:
            raise SchemaError(f"malformed operator {op!r}")
        (name, params), = op.items()
        if name in _VECTOR_OPS:
            if not isinstance(params, dict) or set(params) != {"v"}:
                raise SchemaError(f"{name} takes exactly {{'v': [...]}}")
            v = np.asarray(params["v"], float)
            fn = _VECTOR_OPS[name]
            S = rep.map_stream(S, lambda c, fn=fn, v=v: fn(v, c), name=name)
        elif name == "multiply":
            if not isinstance(params, dict) or set(params) != {"form"}:
                raise SchemaError("multiply takes exactly {'form': {...}}")
            f = _schema(fm.form_from_json, params["form"], S.dim)
            S = rep.map_stream(S, lambda c, f=f: co.multiplyChain(f, c), name="multiply")
        else:
            raise SchemaError(f"unknown operator {name!r}")
    return S


def _write(text: str, path: Optional[str]) -> None:
    if path is None:
        click.echo(text, nl=False)
    else:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)


def _emit(table: str, report: dict, out: Optional[str], scenario: Optional[Scenario] = None) -> None:
    outputs = (scenario.output if scenario else None) or {}
    csv_path = outputs.get("csv") or (str(Path(out) / "table.csv") if out else None)
    json_path = outputs.get("json") or (str(Path(out) / "report.json") if out else None)
    _write(table, csv_path)
    _write(json.dumps(report, indent=2, sort_keys=True, default=float) + "\n", json_path)


def _guard(fn):
    """Precondition violations raised while running count as bad input."""
    import functools

    @functools.wraps(fn)
    def run(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise SchemaError(f"{type(exc).__name__}: {exc}") from exc
    return run


def _finish(report: dict) -> None:
    if not report.get("passed", True):
        raise CheckFailed(f"check failed: residual {report.get('residual')!r} > tol {report.get('tol')!r}")


# ------------------------------------------------------------------------------
# commands
# ------------------------------------------------------------------------------

@click.group()
def main() -> None:
    """Operator calculus on Dirac chains."""


@main.command()
@click.argument("suites", nargs=-1)
@click.option("--list", "list_only", is_flag=True, help="List suites without running them.")
@click.option("--n", "n", type=int, default=None, help="Ambient dimension (stokes suite).")
@click.option("--grade", type=int, default=None, help="Chain grade (stokes suite).")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Write a JSON summary here.")
def verify(suites, list_only, n, grade, seed, out):
    """Run verification suites (all by default) and print a pass/fail matrix."""
    from .suites import SUITES, run_suite, verdict
    if list_only:
        for name, (crit, _, desc) in SUITES.items():
            click.echo(f"{name:22s} criterion {crit or '-':>2}  {desc}")
        return
    names = list(suites) or list(SUITES)
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise SchemaError(f"unknown suites: {unknown}")
    if (n is not None or grade is not None) and names != ["stokes"]:
        raise SchemaError("--n and --grade apply to the stokes suite only")

    def job(name):
        opts = {"n": n, "grade": grade} if name == "stokes" else {}
        return run_suite(name, seed=seed, **opts)

    with ThreadPoolExecutor(max_workers=thread_cap()) as ex:
        results = list(ex.map(job, names))
    summary = {}
    for name, lines in zip(names, results):
        for ln in lines:
            click.echo(ln.row())
        summary[name] = [ln.to_json() for ln in lines]
    click.echo("")
    red = []
    for name, lines in zip(names, results):
        ok = verdict(lines)
        red += [] if ok else [name]
        crit = SUITES[name][0] or "-"
        click.echo(f"{'PASS' if ok else 'FAIL'}  criterion {crit:>2}  {name}")
    failed = len(red)
    if out:
        for lines in summary.values():
            for ln in lines:
                ln.pop("seconds")
        _write(json.dumps(summary, indent=2, sort_keys=True) + "\n", out)
    if failed:
        raise CheckFailed(f"failing suites: {', '.join(red)}")


def _integration_report(S: rep.ChainStream, w: fm.Form, depth: int, method: str, r: Optional[int]):
    cfg = rep.IntegrationConfig(0, depth, method)
    return rep.integrateStream(w, S, cfg, r)


@main.command()
@click.option("--scenario", type=click.Path(), default=None)
@click.option("--domain", default=None, help="Domain JSON (instead of a scenario).")
@click.option("--form", "form_json", default=None, help="Form JSON (instead of a scenario).")
@click.option("--depth", type=int, default=None)
@click.option("--r", type=int, default=None, help="Norm order for the certified bound.")
@click.option("--tol", type=float, default=None)
@click.option("--method", type=click.Choice(["aitken", "richardson", "none"]), default="aitken")
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@_guard
def integrate(scenario, domain, form_json, depth, r, tol, method, seed, out):
    """Integrate a form over a domain stream; print the convergence table."""
    if scenario:
        sc = Scenario.load(scenario)
    else:
        if not (domain and form_json):
            raise SchemaError("give --scenario, or both --domain and --form")
        sc = Scenario.from_json({"domain": _schema(json.loads, domain), "form": _schema(json.loads, form_json)})
    if sc.domain is None or sc.form is None:
        raise SchemaError("scenario needs domain and form")
    S = _schema(rep.domain_from_json, sc.domain)
    S = apply_ops(S, sc.ops)
    w = _schema(fm.form_from_json, sc.form, S.dim)
    depth = depth if depth is not None else (sc.depth if sc.depth is not None else 6)
    r = r if r is not None else sc.r
    check = sc.check or {}
    kind = check.get("kind")
    if kind not in (None, "value", "stokes", "divergence", "curl"):
        raise SchemaError(f"unknown check kind {kind!r} for integrate")
    ctol = tol if tol is not None else check.get("tol", 1e-6)
    # two-sided checks: the table follows the first side, the second is computed independently
    sides = _sides(kind, S, w)
    S1, w1 = sides[0]
    res = _integration_report(S1, w1, depth, method, r)
    report = {"name": sc.name, "value": res.value, "accelerated": res.accelerated, "error_bound": res.error_bound,
              "diverging": res.diagnostics["diverging"], "depth": depth, "seed": seed if seed is not None else sc.seed}
    residual = None
    if kind == "value":
        if "expected" not in check:
            raise SchemaError("value checks need 'expected'")
        residual = abs(res.accelerated - float(check["expected"]))
    elif kind is not None:
        S2, w2 = sides[1]
        other = S2.evaluate(w2, depth)
        report["other_side"] = other
        residual = abs(res.value - other)
    if residual is not None:
        report.update(check=kind, residual=residual, tol=ctol, passed=bool(residual <= ctol))
    _emit(res.csv(), report, out, sc)
    _finish(report)


def _sides(kind, S: rep.ChainStream, w: fm.Form):
    """(stream, form) pairs whose integrals a Stokes-type identity equates.

    stokes:     int_{bd S} w   = int_S dw
    divergence: int_S d*w      = int_{perp bd S} w
    curl:       int_{bd S} w   = int_{perp S} *dw
    """
    perp = lambda T: rep.map_stream(T, co.perp, name="perp", rate_scale=1.0)
    if kind == "stokes":
        return [(S.boundary(), w), (S, fm.exteriorD(w))]
    if kind == "divergence":
        return [(S, fm.exteriorD(fm.hodge(w))), (perp(S.boundary()), w)]
    if kind == "curl":
        return [(S.boundary(), w), (perp(S), fm.hodge(fm.exteriorD(w)))]
    return [(S, w)]


@main.command()
@click.option("--chain", "chain_path", type=click.Path(), required=True, help="Chain JSON file.")
@click.option("--r", type=int, default=NormConfig.r, show_default=True)
@click.option("--region", default=None, help="Region JSON, e.g. '{\"kind\":\"ball\",\"centre\":[0,0],\"radius\":1}'.")
@click.option("--lift/--no-lift", default=NormConfig.lift, show_default=True,
              help="Also try translation lifts A = T_v B - B on small chains.")
@click.option("--out", type=click.Path(), default=None)
@_guard
def norm(chain_path, r, region, lift, out):
    """Certified upper and lower bounds for the B^r norm of a Dirac chain."""
    try:
        A = DiracChain.from_json(json.loads(Path(chain_path).read_text()))
    except (OSError, json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise SchemaError(f"cannot read chain: {exc}") from exc
    U = _schema(rep.region_from_json, _schema(json.loads, region)) if region else None
    try:
        est = nm.estimateNorm(A, r, U, lift=lift)
    except nm.OrderError as exc:
        raise SchemaError(str(exc)) from exc
    payload = {"r": r, "upper": est.upper, "lower": est.lower, "strategy": est.strategy,
               "terms": None if est.decomposition is None else len(est.decomposition)}
    _write(json.dumps(payload, indent=2, sort_keys=True) + "\n", out)


def _time_form(obj, n: int) -> fm.TimeForm:
    if obj.get("family") == "time":
        return fm.TimeForm(tuple(_schema(fm.form_from_json, p, n) for p in obj["parts"]))
    return fm.TimeForm((_schema(fm.form_from_json, obj, n),))


@main.command("flow")
@click.option("--scenario", type=click.Path(), required=True)
@click.option("--depth-space", type=int, default=None)
@click.option("--depth-time", type=int, default=None)
@click.option("--check", "check", type=click.Choice(["ftc", "stokes", "leibniz", "reynolds"]), default=None)
@click.option("--tol", type=float, default=None)
@click.option("--out", type=click.Path(), default=None)
@_guard
def flow_cmd(scenario, depth_space, depth_time, check, tol, out):
    """Check a flow theorem; print the residual report and convergence table."""
    sc = Scenario.load(scenario)
    if sc.domain is None or sc.form is None or sc.field is None:
        raise SchemaError("flow scenarios need domain, form and field")
    J0 = _schema(rep.domain_from_json, sc.domain)
    V = _schema(fl.field_from_json, sc.field, J0.dim)
    cfg = sc.flow or {}
    fc = _schema(lambda: FlowConfig(**{k: cfg[k] for k in ("a", "b", "depth_space", "depth_time") if k in cfg}))
    a, b = float(fc.a), float(fc.b)
    js = depth_space if depth_space is not None else int(fc.depth_space)
    m = depth_time if depth_time is not None else int(fc.depth_time)
    kind = check or (sc.check or {}).get("kind", "ftc")
    defaults = {"ftc": 1e-4, "stokes": 1e-3, "leibniz": 1e-6, "reynolds": 1e-4}
    if kind not in defaults:
        raise SchemaError(f"unknown flow check {kind!r}")
    ctol = tol if tol is not None else (sc.check or {}).get("tol", defaults[kind])
    t = float(cfg.get("t", 0.5 * (a + b)))
    h = float(cfg.get("h", 1e-3))
    if kind == "ftc":
        w = _schema(fm.form_from_json, sc.form, J0.dim)
        res = fl.ftcTable(J0, V, w, a, b, range(max(1, m - 4), m + 1), js, fc.tol)
    elif kind == "stokes":
        w = _schema(fm.form_from_json, sc.form, J0.dim)
        res = fl.stokesEvolvingCheck(J0, V, w, a, b, m, js, fc.tol)
    else:
        tw = _time_form(sc.form, J0.dim)
        fam = fl.flow_family(J0.snapshot(js), V, fc.tol)
        res = (fl.leibnizCheck if kind == "leibniz" else fl.reynoldsCheck)(fam, tw, V, t, h)
    if not res.table:
        res.table = [{"depth_time": m, "residual": res.residual, "ratio": None}]
    report = {"name": sc.name, "check": kind, "residual": res.residual, "tol": ctol,
              "passed": bool(res.residual <= ctol), "values": res.values, "depth_space": js, "depth_time": m}
    _emit(res.csv(), report, out, sc)
    _finish(report)


@main.command()
@click.argument("name", type=click.Choice(["cantor", "sierpinski", "divergence", "quadrifolium"]))
@click.option("--depth", type=int, default=None)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def demo(name, depth, seed, out):
    """Built-in examples with convergence tables."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    if name == "cantor":
        depth = 20 if depth is None else depth
        B = rep.cantorStream(precision="extended").boundary()
        x = fm.coordinate(1, 0)
        wr.writerow(["n", "boundary_integral_of_x", "error"])
        for n in range(depth + 1):
            v = float(B.evaluate(x, n))
            wr.writerow([n, repr(v), repr(v - 1.0)])
    elif name == "sierpinski":
        depth = 8 if depth is None else depth
        S = rep.sierpinskiStream()
        w = fm.PolyForm.from_terms(2, 1, [((1,), (0, 1), -1.0), ((2,), (1, 0), 1.0)])
        dw = fm.exteriorD(w)
        wr.writerow(["k", "integral_of_dw", "boundary_integral_of_w", "difference"])
        for k in range(depth + 1):
            a, b = S.evaluate(dw, k), S.boundary().evaluate(w, k)
            wr.writerow([k, repr(a), repr(b), repr(a - b)])
    elif name == "divergence":
        depth = 9 if depth is None else depth
        rng = np.random.default_rng(seed)
        from .samplers import random_poly_form
        w = random_poly_form(rng, 2, 1, 3, 6)
        Q = rep.cubeStream([0.0, 0.0], [1.0, 1.0])
        P = rep.map_stream(Q.boundary(), co.perp, name="perp")
        lhs_form = fm.exteriorD(fm.hodge(w))
        wr.writerow(["j", "interior_divergence", "boundary_flux", "difference"])
        for j in range(depth + 1):
            a, b = Q.evaluate(lhs_form, j), P.evaluate(w, j)
            wr.writerow([j, repr(a), repr(b), repr(a - b)])
    else:
        depth = 10 if depth is None else depth
        # r = cos 2t: x = (cos 3t + cos t) / 2, y = (sin 3t - sin t) / 2
        half = math.pi / 2
        F = fm.SmoothMap([fm.TrigForm(1, 0, {0: [(0.5, [3.0], half), (0.5, [1.0], half)]}),
                          fm.TrigForm(1, 0, {0: [(0.5, [3.0], 0.0), (-0.5, [1.0], 0.0)]})], "quadrifolium")
        S = rep.algebraicStream(F, rep.cubeStream([0.0], [2 * math.pi]))
        w = fm.PolyForm.from_terms(2, 1, [((2,), (1, 0), 0.5), ((1,), (0, 1), -0.5)])
        wr.writerow(["j", "enclosed_area", "error"])
        for j in range(depth + 1):
            v = S.evaluate(w, j)
            wr.writerow([j, repr(v), repr(v - math.pi / 2)])
    _write(buf.getvalue(), None if out is None else str(Path(out) / f"{name}.csv"))


@main.command()
@click.option("--n", "n", type=int, default=3, show_default=True)
def signs(n):
    """Sign tables: the perp operator product and the evolving-chain time ordering."""
    from .chainops import perp_operator_product_table
    from .multivec import blades_of_grade, indices_of
    click.echo(f"perp sign per blade in R^{n} (perp e_I = sign * e_(I^c))")
    for k in range(n + 1):
        for m in blades_of_grade(n, k):
            click.echo(f"  e{''.join(map(str, indices_of(m))) or '0'}: {perp_sign(m, n):+d}")
    click.echo(f"product of perp with the Clifford operators C_(e_i), applied in index order, in R^{n}")
    for idx, s in perp_operator_product_table(n).items():
        click.echo(f"  {idx}: {s:+g}")
    click.echo("time-ordering sign of the retraction through the time direction, per grade k")
    for k in range(n + 1):
        click.echo(f"  k={k}: time first {+1:+d}, time last {(-1) ** k:+d}")


if __name__ == "__main__":
    main()
