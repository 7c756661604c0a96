"""Report documents: every recomputed quantity next to its expected value.

A document is a plain dict (``schema: 1``) so it serializes without custom
encoders.  Sections are independent and may run concurrently; they are
merged in the order of :data:`SECTION_ORDER` whatever the completion order.
"""
from __future__ import annotations

import csv
import io
import json
import math
import threading
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
import sympy as sp

from . import closed_forms as cf
from .dirac import (block_spectrum, casimir_square_check, dirac_block, eigen_lower_bound,
                    enumerate_candidates, twisted_spectra)
from .geometry import bs_flow, cone_rate, solve_nearly_g2
from .index import (P1_CONVENTIONS, fiber_operator_spectrum, index_pipeline,
                    scalar_family_positivity, spectral_flow_connection,
                    trivial_block_fiber_eigenvalue, virtual_dimension)
from .instanton import (curvature_residual, decay_rate, instanton_profile, integrate_instanton_ode,
                        closed_form_phi)
from .reptheory import IrrepLabelG

SCHEMA = 1
FORMATS = ("json", "csv", "markdown")
NU_SAMPLES = (-1.9, -1.5, -1.0, -0.5, -0.1)


@dataclass
class RunConfig:
    """Knobs shared by the report and the subcommands."""

    eig_tol: float = 1e-9
    square_tol: float = 1e-8
    ode_rtol: float = 1e-10
    rank_cutoff: float = 1e-9
    beta0: float = 1.0
    y0s: tuple = (0.1, 1.0, 10.0, math.inf)
    fmt: str = "json"
    p1_hp2: str = "4a"
    jobs: int = 1
    stamp: bool = False
    output_dir: str | None = None

    def __post_init__(self):
        for name in ("eig_tol", "square_tol", "ode_rtol", "rank_cutoff", "beta0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.fmt not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}")
        if self.p1_hp2 not in P1_CONVENTIONS:
            raise ValueError(f"p1 convention must be one of {P1_CONVENTIONS}")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        self.y0s = tuple(float(y) for y in self.y0s)
        if any(y < 0 for y in self.y0s):
            raise ValueError("y0 values must be non-negative")

    def public(self) -> dict:
        d = asdict(self)
        d.pop("output_dir")
        d["y0s"] = [_jsonable(y) for y in self.y0s]
        return d


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return "inf" if math.isinf(v) else v
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, sp.Basic):
        return int(v) if v.is_Integer else float(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


@dataclass
class Section:
    name: str
    title: str
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    error: str | None = None
    seconds: float | None = None

    def check(self, name: str, expected, computed, tol: float | None = None, exact=None) -> bool:
        """Record one comparison.  ``tol=None`` means exact equality."""
        if tol is None:
            ok = expected == computed
            delta = None
        else:
            e = cf.evaluate(expected) if isinstance(expected, str) else float(expected)
            delta = abs(e - float(computed))
            ok = bool(delta <= tol)
        entry = {"name": name, "expected": _jsonable(expected), "computed": _jsonable(computed),
                 "delta": None if delta is None else float(delta), "pass": bool(ok)}
        if exact is not None:
            entry["exact"] = exact
        if tol is not None:
            entry["tol"] = tol
        self.checks.append(entry)
        return ok

    def bound(self, name: str, value: float, limit: float, upper: bool = True) -> bool:
        ok = bool(value < limit) if upper else bool(value > limit)
        self.checks.append({"name": name, "expected": ("< " if upper else "> ") + repr(limit),
                            "computed": float(value), "delta": None, "pass": ok})
        return ok

    def table(self, name: str, columns: list, rows: list) -> None:
        self.tables[name] = {"columns": list(columns), "rows": [_jsonable(r) for r in rows]}

    @property
    def passed(self) -> bool:
        return self.error is None and all(c["pass"] for c in self.checks)

    def to_dict(self, stamp: bool = False) -> dict:
        d = {"name": self.name, "title": self.title, "pass": self.passed,
             "checks": self.checks, "data": _jsonable(self.data), "tables": self.tables}
        if self.error is not None:
            d["error"] = self.error
        if stamp and self.seconds is not None:
            d["seconds"] = round(self.seconds, 3)
        return d


# ----------------------------------------------------------------------------
# shared expensive results
# ----------------------------------------------------------------------------

_SHARED: dict = {}
_SHARED_LOCK = threading.Lock()


def _shared(key, fn: Callable):
    with _SHARED_LOCK:
        slot = _SHARED.setdefault(key, [threading.Lock(), None, False])
    with slot[0]:
        if not slot[2]:
            slot[1], slot[2] = fn(), True
    return slot[1]


def _flow(cfg: RunConfig, r_max: float):
    return _shared(("flow", cfg.beta0, r_max, cfg.ode_rtol),
                   lambda: bs_flow(cfg.beta0, r_max=r_max, rtol=cfg.ode_rtol))


def _connection(cfg: RunConfig):
    return _shared(("connection", cfg.jobs), lambda: spectral_flow_connection(jobs=cfg.jobs))


def _pipeline(cfg: RunConfig):
    return _shared(("pipeline", cfg.p1_hp2, cfg.jobs),
                   lambda: index_pipeline(cfg.p1_hp2, connection_flow=_connection(cfg).total))


# ----------------------------------------------------------------------------
# sections
# ----------------------------------------------------------------------------


def section_geometry(cfg: RunConfig) -> Section:
    s = Section("geometry", "Nearly G2 structure on the squashed sphere")
    sol = solve_nearly_g2()
    s.check("alpha", "3", sol.alpha, cfg.eig_tol, exact=str(sol.alpha))
    s.check("beta", "3/sqrt(5)", sol.beta, cfg.eig_tol, exact=str(sol.beta))
    s.bound("residual |d phi - 4 psi|", sol.residual, 1e-10)
    s.data["solutions"] = [[str(a), str(b)] for a, b in sol.all_solutions]
    return s


def section_bs_flow(cfg: RunConfig) -> Section:
    s = Section("bs_flow", "Bryant-Salamon metric flow")
    path = _flow(cfg, 100.0)
    s.bound("conserved quantity drift on [eps, 100]", path.conserved_drift, 1e-8)
    rate = cone_rate(path)
    s.check("cone convergence exponent on [10, 100]", "-10/3", rate, 0.1)
    long = _flow(cfg, 1000.0)
    s.data["cone_exponent_100_1000"] = cone_rate(long, r_lo=100.0)
    s.data["alpha_over_beta_at_1000"] = float(long.alpha[-1] / long.beta[-1])
    s.data["max_integral_residual"] = float(np.abs(path.integral_residual()).max())
    return s


def section_instanton(cfg: RunConfig) -> Section:
    s = Section("instanton", "Instanton profiles against an independent ODE solve")
    flow = _flow(cfg, 1000.0)
    r_eval = np.geomspace(flow.eps, 50.0, 400)
    rows = []
    for y0 in cfg.y0s:
        row = {"y0": y0}
        if 0 < y0 < math.inf:
            numeric = integrate_instanton_ode(y0, cfg.beta0, r_eval)
            diff = float(np.abs(numeric - closed_form_phi(r_eval, y0, flow)).max())
            s.bound(f"sup |closed form - ODE|, y0={y0:g}", diff, 1e-7)
            row["ode_sup_diff"] = diff
        if y0 > 0:
            fit = decay_rate(instanton_profile(y0, flow))
            s.check(f"decay exponent of phi, y0={y0:g}", "-2", fit.exponent, 0.05)
            row["decay_exponent"] = fit.exponent
        prof = instanton_profile(y0, flow)
        res = max(curvature_residual(prof, flow, r) for r in (0.5, 1.0, 10.0))
        s.bound(f"instanton equation residual, y0={y0:g}", res, 1e-8)
        row["curvature_residual"] = res
        rows.append(row)
    s.data["profiles"] = rows
    return s


def section_candidates(cfg: RunConfig) -> Section:
    s = Section("candidates", "Candidate labels for twisted eigenvalues below 5/2")
    scan = sorted(enumerate_candidates(2.5))
    listed = sorted(IrrepLabelG(*x) for x in cf.LISTED_CANDIDATES)
    s.check("labels with lower bound <= 5/2", [str(x) for x in listed], [str(x) for x in scan])
    s.table("candidates", ["label", "dim", "lower_bound", "listed", "in_scan"],
            [[str(x), x.dim, eigen_lower_bound(x), x in listed, x in scan]
             for x in sorted(set(scan) | set(listed))])
    return s


def section_spectra(cfg: RunConfig) -> Section:
    s = Section("spectra", "Dirac spectra on the squashed sphere")
    rows = []
    for twist in ("untwisted", "twisted"):
        for lab, exprs in sorted(cf.spectrum_table(twist).items()):
            block = dirac_block(lab, twist)
            found = block_spectrum(block, 0.0)
            expected = sorted(exprs, key=cf.evaluate)
            ok = len(expected) == len(found)
            s.check(f"{twist} {IrrepLabelG(*lab)} block size", len(expected), len(found))
            if not ok:
                continue
            for k, (e, v) in enumerate(zip(expected, found)):
                s.check(f"{twist} {IrrepLabelG(*lab)} eigenvalue {k}", e, v, cfg.eig_tol, exact=cf.pretty(e))
                rows.append([twist, str(IrrepLabelG(*lab)), 0.0, k, cf.pretty(e), cf.evaluate(e),
                             float(v), abs(cf.evaluate(e) - v)])
        for lab, (expr, _stated) in sorted(cf.square_table(twist).items()):
            block = dirac_block(lab, twist)
            s.check(f"{twist} {IrrepLabelG(*lab)} square at t=1/3", expr, block.square_target(), cfg.square_tol,
                    exact=expr)
            res = casimir_square_check(block, tol=math.inf)
            s.bound(f"{twist} {IrrepLabelG(*lab)} square is scalar", res, cfg.square_tol)
            rows.append([twist, str(IrrepLabelG(*lab)), 1.0 / 3.0, "square", expr, cf.evaluate(expr),
                         block.square_target(), res])
    s.table("spectra", ["twist", "label", "t", "k", "exact", "expected", "computed", "delta"], rows)
    return s


def section_critical(cfg: RunConfig) -> Section:
    s = Section("critical", "Twisted eigenvalues in [-5/2, 5/2]")
    labels = set(enumerate_candidates(2.5)) | {IrrepLabelG(*x) for x in cf.LISTED_CANDIDATES}
    spectra = twisted_spectra(sorted(labels), jobs=cfg.jobs)
    hits = [(lab, float(v)) for lab, spec in sorted(spectra.items()) for v in spec if abs(v) <= 2.5]
    s.check("number of eigenvalues", 1, len(hits))
    if hits:
        lab, v = hits[0]
        s.check("eigenvalue", "1/2", v, cfg.eig_tol)
        s.check("eigenspace dimension", 1, sum(IrrepLabelG(*l).dim for l, _ in hits))
    s.table("hits", ["label", "eigenvalue", "rate"], [[str(l), v, v - 2.5] for l, v in hits])
    return s


def section_table1(cfg: RunConfig) -> Section:
    s = Section("table1", "Fiber operator on spinors with values in sp(1)")
    spec = fiber_operator_spectrum()
    got = [(round(v), m) for v, m in spec]
    s.check("spectrum", [[-4, 4], [-2, 8], [2, 8], [4, 4]], [list(p) for p in got])
    s.bound("distance of eigenvalues from integers", max(abs(v - round(v)) for v, _ in spec), 1e-9)
    s.check("trivial-line eigenvalue", "-4", trivial_block_fiber_eigenvalue(), cfg.eig_tol)
    s.table("table1", ["eigenvalue", "multiplicity"], [[v, m] for v, m in spec])
    return s


def section_spectral_flows(cfg: RunConfig) -> Section:
    s = Section("spectral_flows", "Spectral flows of the connection and metric families")
    conn = _connection(cfg)
    s.check("connection spectral flow", 0, conn.total)
    trivial = conn.block((0, 0, 0))
    s.check("trivial block at the flat end", "9/2", trivial.paths[0, 0], cfg.eig_tol)
    s.check("trivial block at the canonical end", "1/2", trivial.paths[-1, 0], cfg.eig_tol)
    s.check("trivial block crossings", 0, trivial.crossings)
    pos = scalar_family_positivity()
    s.bound("scalar curvature minimum above 42 - 1e-9", pos.minimum, 42 - 1e-9, upper=False)
    s.check("round scalar curvature", Fraction(42), pos.round_value)
    s.check("squashed scalar curvature", Fraction(378, 5), pos.squashed_value)
    s.check("metric spectral flow", 0, pos.metric_flow)
    s.table("blocks", ["label", "crossings", "min_abs", "max_step"],
            [[str(b.label), b.crossings, b.min_abs, b.max_step] for b in conn.blocks])
    return s


def section_index(cfg: RunConfig) -> Section:
    s = Section("index", "Indices at rate -5/2")
    pipe = _pipeline(cfg)
    for name, ok in pipe.identities:
        s.checks.append({"name": name, "expected": True, "computed": bool(ok), "delta": None,
                         "pass": bool(ok)})
    s.check("HP^2 trivial-bundle index", Fraction(0), pipe.index_hp2)
    s.check("family index", Fraction(0), pipe.family)
    s.check("characteristic numbers (n1, n2)", ["-4", "0"], [str(x) for x in pipe.n])
    expected_lim = Fraction(-2) if cfg.p1_hp2 == "4a" else Fraction(-5, 3)
    s.check("limiting index", expected_lim, pipe.limiting)
    s.data["convention"] = cfg.p1_hp2
    s.data["alternative"] = {c: str(index_pipeline(c, pipe.connection_flow, pipe.metric_flow).limiting)
                             for c in P1_CONVENTIONS}
    return s


def section_virtual(cfg: RunConfig) -> Section:
    s = Section("virtual_dims", "Virtual dimensions of the moduli spaces")
    pipe = _pipeline(cfg)
    expected = {"family": Fraction(1), "limiting": Fraction(-1) if cfg.p1_hp2 == "4a" else Fraction(-2, 3)}
    for which in ("family", "limiting"):
        vals = [virtual_dimension(which, nu, pipeline=pipe) for nu in NU_SAMPLES]
        for nu, v in zip(NU_SAMPLES, vals):
            s.check(f"{which}, nu={nu:g}", expected[which], v)
        s.data[which] = str(vals[NU_SAMPLES.index(-1.0)])
    s.data["below_crossing_family_nu=-2.25"] = str(virtual_dimension("family", -2.25, pipeline=pipe))
    return s


SECTION_ORDER = (
    ("geometry", section_geometry),
    ("bs_flow", section_bs_flow),
    ("instanton", section_instanton),
    ("candidates", section_candidates),
    ("spectra", section_spectra),
    ("critical", section_critical),
    ("table1", section_table1),
    ("spectral_flows", section_spectral_flows),
    ("index", section_index),
    ("virtual_dims", section_virtual),
)


def run_section(name: str, fn: Callable, cfg: RunConfig) -> Section:
    t0 = time.perf_counter()
    try:
        sec = fn(cfg)
    except Exception as exc:  # a failing module must not sink the document
        sec = Section(name, name, error=f"{type(exc).__name__}: {exc}")
        sec.data["traceback"] = traceback.format_exc(limit=3)
    sec.seconds = time.perf_counter() - t0
    return sec


def run_report(cfg: RunConfig, only: tuple | None = None) -> dict:
    """Compute every section and assemble the document."""
    todo = [(n, f) for n, f in SECTION_ORDER if only is None or n in only]
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(run_section, n, f, cfg) for n, f in todo]
            sections = [fut.result() for fut in futures]
    else:
        sections = [run_section(n, f, cfg) for n, f in todo]
    doc = {"schema": SCHEMA, "command": "report", "config": cfg.public(),
           "sections": [sec.to_dict(cfg.stamp) for sec in sections],
           "pass": all(sec.passed for sec in sections)}
    if cfg.stamp:
        doc["generated"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    return doc


# ----------------------------------------------------------------------------
# rendering
# ----------------------------------------------------------------------------


def _sections_of(doc: dict) -> list:
    return doc["sections"] if "sections" in doc else [doc]


def render_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def render_csv(doc: dict, table: str | None = None) -> str:
    """Tables only.  For a report, just the spectra table."""
    if table is None and doc.get("command") == "report":
        table = "spectra"
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    first = True
    for sec in _sections_of(doc):
        for name, tab in sec.get("tables", {}).items():
            if table is not None and name != table:
                continue
            if not first:
                out.write("\n")
            writer.writerow(tab["columns"])
            writer.writerows(tab["rows"])
            first = False
    if first:
        writer.writerow(["key", "value"])
        for sec in _sections_of(doc):
            for k, v in sorted(sec.get("data", {}).items()):
                writer.writerow([k, json.dumps(v, sort_keys=True)])
    return out.getvalue()


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True)
    return "" if v is None else str(v)


def render_markdown(doc: dict) -> str:
    lines = []
    if doc.get("command") == "report":
        lines += ["# Recomputation report", "",
                  f"Overall: **{'PASS' if doc['pass'] else 'FAIL'}**", ""]
    for sec in _sections_of(doc):
        title = sec.get("title") or sec.get("command", "")
        lines += [f"## {title}", "", f"Status: {'PASS' if sec.get('pass', True) else 'FAIL'}", ""]
        if sec.get("error"):
            lines += [f"Error: `{sec['error']}`", ""]
        if sec.get("checks"):
            lines += ["| check | expected | computed | delta | result |",
                      "|---|---|---|---|---|"]
            for c in sec["checks"]:
                exp = c.get("exact", c["expected"])
                lines.append(f"| {c['name']} | {_fmt(exp)} | {_fmt(c['computed'])} | "
                             f"{_fmt(c['delta'])} | {'PASS' if c['pass'] else 'FAIL'} |")
            lines.append("")
        for name, tab in sec.get("tables", {}).items():
            lines += [f"**{name}**", "", "| " + " | ".join(tab["columns"]) + " |",
                      "|" + "---|" * len(tab["columns"])]
            lines += ["| " + " | ".join(_fmt(v) for v in row) + " |" for row in tab["rows"]]
            lines.append("")
        data = {k: v for k, v in sec.get("data", {}).items() if k != "traceback"}
        if data:
            lines += ["| quantity | value |", "|---|---|"]
            lines += [f"| {k} | {_fmt(v)} |" for k, v in sorted(data.items())]
            lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return render_json(doc)
    if fmt == "csv":
        return render_csv(doc)
    if fmt == "markdown":
        return render_markdown(doc)
    raise ValueError(f"unknown format {fmt!r}")
