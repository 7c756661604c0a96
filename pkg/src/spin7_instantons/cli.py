"""Command-line entry point.

Exit codes: 0 when every check of the command passes, 1 on a numerical
mismatch or failed computation, 2 on usage errors (including a weight that
sits on a critical rate).
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import closed_forms as cf
from .algebra import structure_constants
from .errors import CriticalRateError, EmptyBlockError
from .report import (FORMATS, SCHEMA, RunConfig, Section, render, run_report, SECTION_ORDER,
                     _jsonable)
from .reptheory import IrrepLabelG, RANK_CUTOFF

OUTPUT_ENV = "SPIN7_OUTPUT_DIR"


def _y0(text: str) -> float:
    if text.lower() in ("inf", "infinity", "lim", "limiting"):
        return math.inf
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError("y0 must be non-negative")
    return value


def _label(text: str) -> IrrepLabelG:
    try:
        return IrrepLabelG.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _common() -> argparse.ArgumentParser:
    """Options accepted both before and after the subcommand."""
    p = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    p.add_argument("--format", dest="fmt", choices=FORMATS, default=S)
    p.add_argument("--eig-tol", type=_positive, default=S, help="eigenvalue comparison tolerance")
    p.add_argument("--ode-rtol", type=_positive, default=S)
    p.add_argument("--rank-cutoff", type=_positive, default=S)
    p.add_argument("--p1-hp2", choices=("2a", "4a"), default=S,
                   help="p1 of each HP^2 summand used by the limiting index (default 4a)")
    p.add_argument("--jobs", type=int, default=S)
    p.add_argument("--stamp", action="store_true", default=S, help="add timestamps and timings")
    p.add_argument("--output-dir", default=S, help=f"also write the output here (env {OUTPUT_ENV})")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="spin7-instantons", parents=[common],
                                     description="Recompute the squashed-sphere instanton deformation data.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--dump-structure-constants", action="store_true",
                        help="print the exact structure constants as JSON and exit")
    top = parser.add_subparsers(dest="group", metavar="COMMAND")

    def group(name, help_):
        g = top.add_parser(name, help=help_, parents=[common])
        return g.add_subparsers(dest="action", metavar="ACTION", required=True)

    geo = group("geometry", "nearly G2 solve and the metric flow")
    geo.add_parser("solve-g2", parents=[common])
    p = geo.add_parser("bs-flow", parents=[common])
    p.add_argument("--beta0", type=_positive, default=1.0)
    p.add_argument("--rmax", type=_positive, default=100.0)
    p.add_argument("--samples", type=int, default=201)

    ins = group("instanton", "instanton profiles")
    p = ins.add_parser("profile", parents=[common])
    p.add_argument("--y0", type=_y0, required=True)
    p.add_argument("--beta0", type=_positive, default=1.0)
    p.add_argument("--rmax", type=_positive, default=100.0)
    p.add_argument("--samples", type=int, default=201)
    p = ins.add_parser("decay", parents=[common])
    p.add_argument("--y0", type=_y0, required=True)
    p.add_argument("--beta0", type=_positive, default=1.0)
    p.add_argument("--rmax", type=_positive, default=1000.0)

    reps = group("reps", "representations of sp(2) + sp(1)")
    for name in ("branch", "casimir"):
        p = reps.add_parser(name, parents=[common])
        p.add_argument("--label", type=_label, required=True, help="a,b,c")

    dirac = group("dirac", "Dirac spectra")
    p = dirac.add_parser("spectrum", parents=[common])
    p.add_argument("--label", type=_label, required=True)
    p.add_argument("--twist", choices=("adjoint", "none", "twisted", "untwisted"), default="adjoint")
    p.add_argument("--t", type=float, default=0.0)
    p = dirac.add_parser("candidates", parents=[common])
    p.add_argument("--threshold", type=float, default=2.5)
    p = dirac.add_parser("critical-rates", parents=[common])
    p.add_argument("--lo", type=float, default=-2.0)
    p.add_argument("--hi", type=float, default=0.0)
    p.add_argument("--closed", action="store_true")

    idx = group("index", "spectral flows and indices")
    idx.add_parser("table1", parents=[common])
    idx.add_parser("spectral-flow", parents=[common])
    idx.add_parser("scalar-family", parents=[common])
    p = idx.add_parser("virtual-dim", parents=[common])
    p.add_argument("--which", choices=("family", "limiting"), required=True)
    p.add_argument("--nu", type=float, required=True)

    p = top.add_parser("report", help="full recomputation report", parents=[common])
    p.add_argument("--sections", nargs="+", choices=[n for n, _ in SECTION_ORDER])
    p.add_argument("--beta0", type=_positive, default=1.0)
    p.add_argument("--y0", dest="y0s", type=_y0, nargs="+")
    return parser


def parse_args(argv=None) -> tuple[RunConfig, argparse.Namespace]:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.group is None and not ns.dump_structure_constants:
        parser.error("a command is required")
    env_dir = os.environ.get(OUTPUT_ENV) or None
    kwargs = dict(
        eig_tol=getattr(ns, "eig_tol", 1e-9),
        ode_rtol=getattr(ns, "ode_rtol", 1e-10),
        rank_cutoff=getattr(ns, "rank_cutoff", RANK_CUTOFF),
        fmt=getattr(ns, "fmt", "json"),
        p1_hp2=getattr(ns, "p1_hp2", "4a"),
        jobs=getattr(ns, "jobs", 1),
        stamp=getattr(ns, "stamp", False),
        output_dir=getattr(ns, "output_dir", env_dir),
    )
    if ns.group == "report":
        kwargs["beta0"] = ns.beta0
        if ns.y0s:
            kwargs["y0s"] = tuple(ns.y0s)
    try:
        cfg = RunConfig(**kwargs)
    except ValueError as exc:
        parser.error(str(exc))
    return cfg, ns


# ----------------------------------------------------------------------------
# handlers; each returns a Section
# ----------------------------------------------------------------------------


def _geometry(cfg, ns) -> Section:
    from .geometry import bs_flow
    from .report import section_geometry
    if ns.action == "solve-g2":
        return section_geometry(cfg)
    s = Section("bs-flow", "Bryant-Salamon flow samples")
    path = bs_flow(ns.beta0, r_max=ns.rmax, rtol=cfg.ode_rtol)
    r = np.geomspace(path.eps, ns.rmax, max(ns.samples, 2))
    st = path.state(r)
    resid = st[1] ** 4 * st[3] ** 3 / (125 * ns.beta0 ** 10) - 1
    s.table("path", ["r", "alpha", "beta", "conserved_residual"],
            [[float(a), float(b), float(c), float(d)] for a, b, c, d in zip(r, st[0], st[1], resid)])
    s.bound("conserved quantity drift", path.conserved_drift, 1e-8)
    s.data.update(beta0=ns.beta0, r_max=ns.rmax)
    return s


def _instanton(cfg, ns) -> Section:
    from .geometry import bs_flow
    from .instanton import curvature_residual, decay_rate, instanton_profile
    path = bs_flow(ns.beta0, r_max=ns.rmax, rtol=cfg.ode_rtol)
    if ns.action == "profile":
        s = Section("profile", f"Instanton profile y0={ns.y0:g}")
        # below r ~ 1e-3 the residual is dominated by rounding in terms of size 1/alpha^2
        r = np.geomspace(min(1e-3, ns.rmax / 10), ns.rmax, max(ns.samples, 2))
        prof = instanton_profile(ns.y0, path, r)
        rows = [[float(x), float(p), curvature_residual(prof, path, float(x))] for x, p in zip(r, prof.phi)]
        s.table("profile", ["r", "phi", "residual"], rows)
        s.bound("max instanton equation residual", max(row[2] for row in rows), 1e-8)
        return s
    s = Section("decay", f"Decay of phi, y0={ns.y0:g}")
    fit = decay_rate(instanton_profile(ns.y0, path))
    s.check("decay exponent", "-2", fit.exponent, 0.05)
    s.data.update(exponent=fit.exponent, r_lo=fit.r_lo, r_hi=fit.r_hi)
    return s


def _reps(cfg, ns) -> Section:
    from .reptheory import branch_to_H, build_carrier, casimir_g
    lab = ns.label
    if ns.action == "casimir":
        s = Section("casimir", f"Casimir of {lab}")
        value = casimir_g(lab)
        carrier = build_carrier(lab)
        diag = np.diag(carrier.casimir()).real
        s.check("carrier Casimir", str(value), float(diag.mean()), cfg.eig_tol, exact=str(value))
        s.data.update(label=str(lab), dim=lab.dim, casimir=str(value))
        return s
    s = Section("branch", f"Branching of {lab}")
    counts = branch_to_H(lab)
    rows = [[f"({p},{q})", (p + 1) * (q + 1), m] for (p, q), m in sorted(counts.items())]
    s.table("branching", ["h_label", "dim", "multiplicity"], rows)
    s.check("dimension", lab.dim, sum(r[1] * r[2] for r in rows))
    s.data["label"] = str(lab)
    return s


def _dirac(cfg, ns) -> Section:
    from .dirac import (block_spectrum, casimir_square_check, cluster, critical_rates, dirac_block,
                        eigen_lower_bound, enumerate_candidates, normalize_twist)
    if ns.action == "spectrum":
        twist = normalize_twist(ns.twist)
        s = Section("spectrum", f"Spectrum of {ns.label} ({twist}) at t={ns.t:g}")
        try:
            block = dirac_block(ns.label, twist)
        except EmptyBlockError:
            s.data.update(label=str(ns.label), twist=twist, empty=True)
            s.table("spectrum", ["k", "eigenvalue", "exact"], [])
            return s
        values = block_spectrum(block, ns.t)
        exact = cf.spectrum_table(twist).get(tuple(ns.label)) if ns.t == 0 else None
        exprs = sorted(exact, key=cf.evaluate) if exact and len(exact) == len(values) else [None] * len(values)
        for k, (v, e) in enumerate(zip(values, exprs)):
            if e is not None:
                s.check(f"eigenvalue {k}", e, v, cfg.eig_tol, exact=cf.pretty(e))
        s.table("spectrum", ["k", "eigenvalue", "exact"],
                [[k, float(v), cf.pretty(e) if e else ""] for k, (v, e) in enumerate(zip(values, exprs))])
        if abs(ns.t - 1 / 3) < 1e-12:
            s.bound("square is scalar", casimir_square_check(block, tol=math.inf), 1e-8)
            s.data["square"] = block.square_target()
        s.data.update(label=str(ns.label), twist=twist, t=ns.t)
        return s
    if ns.action == "candidates":
        s = Section("candidates", f"Labels with lower bound <= {ns.threshold:g}")
        labels = enumerate_candidates(ns.threshold)
        s.table("candidates", ["label", "dim", "lower_bound"],
                [[str(x), x.dim, eigen_lower_bound(x)] for x in labels])
        return s
    s = Section("critical-rates", f"Critical rates in ({ns.lo:g}, {ns.hi:g})")
    rates = critical_rates((ns.lo, ns.hi), closed=ns.closed, jobs=cfg.jobs)
    s.table("critical_rates", ["rate", "eigenvalue", "dimension", "labels"],
            [[c.rate, c.eigenvalue, c.dimension, ";".join(str(l) for l, _, _ in c.contributions)]
             for c in rates])
    return s


def _index(cfg, ns) -> Section:
    from . import index as ix
    from .report import section_spectral_flows, section_table1
    if ns.action == "table1":
        return section_table1(cfg)
    if ns.action == "spectral-flow":
        return section_spectral_flows(cfg)
    if ns.action == "scalar-family":
        s = Section("scalar-family", "Scalar curvature along the squashing path")
        pos = ix.scalar_family_positivity()
        a = np.linspace(1 / math.sqrt(5), 1.0, 41)
        s.table("scalar_family", ["a", "scalar_curvature"], [[float(x), float(ix.scalar_family(x * x))] for x in a])
        s.check("round value", ix.Fraction(42), pos.round_value)
        s.check("squashed value", ix.Fraction(378, 5), pos.squashed_value)
        s.bound("minimum", pos.minimum, 42 - 1e-9, upper=False)
        s.data.update(minimum=pos.minimum, argmin_a=pos.argmin_a, metric_flow=pos.metric_flow)
        return s
    s = Section("virtual-dim", f"Virtual dimension ({ns.which}, nu={ns.nu:g})")
    pipe = ix.index_pipeline(cfg.p1_hp2)
    value = ix.virtual_dimension(ns.which, ns.nu, pipeline=pipe)
    s.data.update(which=ns.which, nu=ns.nu, convention=cfg.p1_hp2, virtual_dimension=value,
                  index_at_minus_5_2=ix.index_at_minus_5_2(ns.which, pipeline=pipe))
    return s


HANDLERS = {"geometry": _geometry, "instanton": _instanton, "reps": _reps, "dirac": _dirac,
            "index": _index}


def _emit(text: str, cfg: RunConfig, name: str) -> None:
    sys.stdout.write(text)
    if cfg.output_dir:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        ext = {"json": "json", "csv": "csv", "markdown": "md"}[cfg.fmt]
        (out / f"{name}.{ext}").write_text(text)


def main(argv=None) -> int:
    try:
        cfg, ns = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if ns.dump_structure_constants:
        _emit(structure_constants().to_json() + "\n", cfg, "structure_constants")
        return 0
    try:
        if ns.group == "report":
            doc = run_report(cfg, tuple(ns.sections) if ns.sections else None)
            name = "report"
        else:
            sec = HANDLERS[ns.group](cfg, ns)
            doc = sec.to_dict(cfg.stamp)
            name = f"{ns.group}-{ns.action}"
            doc.update(schema=SCHEMA, command=f"{ns.group} {ns.action}")
            doc["data"] = _jsonable(doc["data"])
        text = render(doc, cfg.fmt)
    except CriticalRateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    _emit(text, cfg, name)
    return 0 if doc["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
