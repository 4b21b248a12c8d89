"""Command-line front end: ``clawgeo <command> [system] [options]``.

Every command prints (or writes) one JSON report with schema ``report_v1``.
Exit status is 0 when all checks pass, 1 when a check fails or a
computation is impossible, and 2 when the input does not parse.
"""
import argparse
import os
import sys as _sys
from dataclasses import dataclass, field

import numpy as np

from . import corpus, hamgeo, reports, ruledgeo, syscore, webcubic
from .errors import ClawGeoError, ParseError
from .exprlang import add

COMMANDS = ("analyze", "dualize", "hamiltonian-check", "reciprocal", "web-cubic", "all")
TOL_KEYS = ("law", "tangent", "incidence", "bidual", "shared", "structure", "quadric", "legendre",
            "autodual", "hyperplane", "temple", "degeneracy")
INTRO_ROWS = "1,0,-1,0;0,1,-1,0"
# A finite-speed frame of the intro system: its dual is the Temple-class bridge.
BRIDGE_ROWS = "2,1,-3,0,0,0,0;1,1,-2,0,0,0,0"
WEB_FIT_POINTS = 40


@dataclass
class RunConfig:
    command: str
    input: str = None
    seed: int = 42
    samples: int = 100
    tol: dict = field(default_factory=dict)
    output: str = None
    csv: str = None
    out_spec: str = None
    rows: str = None
    pair: tuple = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.samples < 10:
            raise ValueError("sample count must be at least 10")
        for k, v in self.tol.items():
            if k not in TOL_KEYS:
                raise ValueError(f"unknown tolerance {k!r}; choose from {', '.join(TOL_KEYS)}")
            if not v > 0:
                raise ValueError(f"tolerance {k!r} must be positive")

    def t(self, key, default):
        return self.tol.get(key, default)


def load_system(ref):
    """A path on disk, or the name of a bundled corpus file."""
    if ref is None:
        ref = "example_intro"
    if os.path.exists(ref):
        with open(ref, encoding="utf-8") as fh:
            text = fh.read()
    else:
        name = os.path.basename(ref)
        name = name[:-5] if name.endswith(".claw") else name
        if name not in corpus.names():
            raise FileNotFoundError(f"no such file or corpus entry: {ref!r}")
        text = corpus.read(name)
    return syscore.from_source(text)


def parse_rows(text):
    rows = [[float(x) for x in r.split(",")] for r in text.split(";") if r.strip()]
    if len(rows) != 2:
        raise ValueError("--rows needs exactly two rows separated by ';'")
    return rows


def _law_summary(rep):
    return {"law": rep["law"], "max_residual": rep["max_residual"], "pass": rep["pass"]}


def _fields_summary(sys, points):
    out = []
    for u in points[:3]:
        f = syscore.characteristic_fields(sys, u)
        out.append({"point": u, "speeds": [s.as_list() for s in f.speeds], "xi": f.right.T})
    return out


def _pair(cfg, sys):
    return ruledgeo.LawPair.from_system(sys, cfg.pair)


# ---------------------------------------------------------------- commands

def cmd_analyze(cfg, sys):
    pts = syscore.sample_points(sys, count=cfg.samples, seed=cfg.seed)
    laws = [syscore.check_law(sys, l, pts, cfg.t("law", syscore.LAW_TOL))
            for l in sys.canonical_laws() + tuple(sys.laws)]
    ld = syscore.linear_degeneracy(sys, pts, tol=cfg.t("degeneracy", 1e-6))
    temple = syscore.temple_rectilinearity(sys, pts, tol=cfg.t("temple", 1e-5))
    struct = syscore.structure_report(sys, pts[:10])
    if cfg.csv:
        rows = []
        for k, u in enumerate(pts):
            f = syscore.characteristic_fields(sys, u)
            rows.append([k, *u, *(x for s in f.speeds for x in s.as_list()), *f.right.T.ravel()])
        n = sys.n
        header = (["index"] + [f"u{i + 1}" for i in range(n)]
                  + [f"speed{a + 1}_{c}" for a in range(n) for c in "ab"]
                  + [f"xi{a + 1}_{i + 1}" for a in range(n) for i in range(n)])
        reports.write_csv(cfg.csv, header, rows)
    results = {
        "system": sys.name,
        "fields": _fields_summary(sys, pts),
        "laws": [_law_summary(r) for r in laws],
        "laws_valid": f"{sum(r['pass'] for r in laws)}/{len(laws)}",
        "linear_degeneracy": {"max_residual": ld["max_residual"], "per_family": ld["per_family"],
                              "linearly_degenerate": ld["pass"]},
        "temple": {"max_residual": temple["max_residual"], "per_family": temple["per_family"],
                   "rectilinear": temple["pass"]},
        "structure": {"nondiagonalizable": struct["nondiagonalizable_all_points"],
                      "antisymmetry": struct["max_residual"], "convention": struct["convention"]},
    }
    return results, all(r["pass"] for r in laws)


def _dual_checks(cfg, sys, pair, pts):
    dual = ruledgeo.dual_system(sys, pair, pts[:8])
    checks = {
        "tangent_stability": ruledgeo.tangent_stability(sys, pair, pts, cfg.t("tangent", ruledgeo.TANGENT_TOL)),
        "incidence": ruledgeo.incidence_report(sys, pair, pts, cfg.t("incidence", ruledgeo.INCIDENCE_TOL)),
        "dual_laws": ruledgeo.dual_laws_report(sys, pair, pts, dual),
        "shared_fields": ruledgeo.shared_char_fields_check(sys, pair, pts, cfg.t("shared", ruledgeo.SHARED_TOL),
                                                           dual),
        "biduality": ruledgeo.biduality_check(sys, pair, pts, cfg.t("bidual", ruledgeo.BIDUAL_TOL), dual),
        "structure_agreement": ruledgeo.structure_agreement(sys, dual[0], pts[:20], cfg.t("structure", 1e-4)),
    }
    return dual, checks


def _strip(rep):
    return {k: v for k, v in rep.items() if k != "per_point"}


def cmd_dualize(cfg, sys):
    pair = _pair(cfg, sys)
    pts = syscore.sample_points(sys, count=cfg.samples, seed=cfg.seed)
    dual, checks = _dual_checks(cfg, sys, pair, pts)
    if cfg.out_spec:
        with open(cfg.out_spec, "w", encoding="utf-8") as fh:
            fh.write(syscore.to_source(dual[0]))
    if cfg.csv:
        ruledgeo.write_generator_csv(cfg.csv, sys, pair, pts)
    results = {"system": sys.name, "pair": [pair.first.name, pair.second.name],
               "dual": syscore.to_source(dual[0]),
               "checks": {k: _strip(v) for k, v in checks.items()}}
    return results, all(v["pass"] for v in checks.values())


def cmd_hamiltonian(cfg, sys):
    spec = hamgeo.HamiltonianSpec.from_system(sys)
    hsys, laws = hamgeo.build_hamiltonian(spec)
    pts = syscore.sample_points(hsys, count=cfg.samples, seed=cfg.seed)
    pair = hamgeo.default_pair(hsys)
    eta = spec.eta_array()
    law_reps = [syscore.check_law(hsys, l, pts, cfg.t("law", syscore.LAW_TOL)) for l in laws]
    checks = {
        "quadric": hamgeo.quadric_membership(hsys, pair, eta, pts, cfg.t("quadric", hamgeo.QUADRIC_TOL)),
        "legendre": hamgeo.legendre_check(hsys, pair, eta, pts, tol=cfg.t("legendre", hamgeo.LEGENDRE_TOL)),
        "autoduality": hamgeo.autoduality_check(hsys, pair, eta, pts, cfg.t("autodual", hamgeo.AUTODUAL_TOL)),
    }
    results = {"system": sys.name, "laws": [_law_summary(r) for r in law_reps],
               "checks": {k: _strip(v) for k, v in checks.items()}}
    return results, all(r["pass"] for r in law_reps) and all(v["pass"] for v in checks.values())


def _distinct_speeds(sys, pts):
    seen = []
    for u in pts:
        for s in syscore.characteristic_fields(sys, u).speeds:
            if all(s.distance(t) > 1e-8 for t in seen):
                seen.append(s)
    return sorted(seen, key=lambda s: s.sort_key())


def cmd_reciprocal(cfg, sys):
    if not cfg.rows:
        raise ValueError("reciprocal needs --rows")
    rx, rt = parse_rows(cfg.rows)
    tsys, images = syscore.reciprocal_transform(sys, rx, rt)
    pts = syscore.sample_points(sys, tsys, count=cfg.samples, seed=cfg.seed)
    laws = [syscore.check_law(tsys, l, pts, cfg.t("law", syscore.LAW_TOL))
            for l in tsys.canonical_laws() + tuple(tsys.laws)]
    speeds = _distinct_speeds(tsys, pts)
    results = {"system": sys.name, "rows": [rx, rt], "derived": syscore.to_source(tsys),
               "laws": [_law_summary(r) for r in laws],
               "speeds": [s.as_list() for s in speeds], "constant_speeds": len(speeds) == tsys.n}
    if len(tsys.laws) >= 2:
        foc = ruledgeo.focal_report(tsys, ruledgeo.LawPair.from_system(tsys), pts,
                                    cfg.t("hyperplane", ruledgeo.HYPERPLANE_TOL))
        results["focal"] = _strip(foc)
    if cfg.out_spec:
        with open(cfg.out_spec, "w", encoding="utf-8") as fh:
            fh.write(syscore.to_source(tsys))
    return results, all(r["pass"] for r in laws)


def cmd_web_cubic(cfg, sys):
    laws = sys.canonical_laws() + tuple(sys.laws)
    fit = syscore.sample_points(sys, count=WEB_FIT_POINTS, seed=cfg.seed)
    held = syscore.sample_points(sys, count=cfg.samples, seed=cfg.seed + 1)
    out = webcubic.web_cubic_suite(sys, laws, fit, held, seed=cfg.seed)
    if cfg.csv:
        basis = webcubic.abelian_from_laws(sys, laws, fit)
        rows = []
        for k, u in enumerate(fit):
            P, Q, R, _ = webcubic.pqr_points(basis, u)
            for label, x in zip("PQR", (P, Q, R)):
                rows.append([k, label, *u, *x])
        reports.write_csv(cfg.csv, ["index", "kind"] + [f"u{i + 1}" for i in range(sys.n)]
                          + [f"X{j}" for j in range(5)], rows)
    out["abelian"] = _strip(out["abelian"])
    out["pqr"] = _strip(out["pqr"])
    return {"system": sys.name, **out}, out["pass"]


def abc_coordinates(sys):
    """The intro system in the field variables ``a, b, c`` (sum law, sigma4, sigma5)."""
    c = sys.canonical_laws()
    total = syscore.ConservationLaw(add(add(c[0].density, c[1].density), c[2].density),
                                    add(add(c[0].flux, c[1].flux), c[2].flux), "a")
    return syscore.change_variables(sys, [total, sys.law("sigma4"), sys.law("sigma5")])


def temple_bridge(sys, samples, seed, tol=1e-5):
    """Temple tests for the dual of the finite-frame transform and for ``(a, b, c)``."""
    fsys, _ = syscore.reciprocal_transform(sys, *parse_rows(BRIDGE_ROWS))
    dsys, _ = ruledgeo.dual_system(fsys, ruledgeo.LawPair.from_system(fsys))
    pts = syscore.sample_points(fsys, dsys, count=samples, seed=seed)
    dual_rep = syscore.temple_rectilinearity(dsys, pts, tol=tol)
    abc = abc_coordinates(sys)
    pts2 = syscore.sample_points(abc, count=samples, seed=seed)
    abc_rep = syscore.temple_rectilinearity(abc, pts2, tol=tol)
    return {"dual_of_finite_frame": _strip(dual_rep), "abc_coordinates": _strip(abc_rep)}


def cmd_all(cfg, sys):
    results = {}
    ok = True
    sub = dict(vars(cfg))
    for key, fn in (("analyze", cmd_analyze), ("dualize", cmd_dualize), ("hamiltonian-check", cmd_hamiltonian)):
        r, p = fn(RunConfig(**{**sub, "command": key, "csv": None, "out_spec": None}), sys)
        results[key] = r
        ok &= p
    r, p = cmd_reciprocal(RunConfig(**{**sub, "command": "reciprocal", "rows": cfg.rows or INTRO_ROWS,
                                       "csv": None, "out_spec": None}), sys)
    results["reciprocal"] = r
    ok &= p
    derived = syscore.from_source(r["derived"])
    r, p = cmd_web_cubic(RunConfig(**{**sub, "command": "web-cubic", "csv": None, "out_spec": None}), derived)
    results["web-cubic"] = r
    ok &= p
    bridge = temple_bridge(sys, cfg.samples, cfg.seed, cfg.t("temple", 1e-5))
    results["temple-bridge"] = bridge
    ok &= all(v["pass"] for v in bridge.values())
    return results, ok


HANDLERS = {"analyze": cmd_analyze, "dualize": cmd_dualize, "hamiltonian-check": cmd_hamiltonian,
            "reciprocal": cmd_reciprocal, "web-cubic": cmd_web_cubic, "all": cmd_all}


def _error_object(exc):
    obj = {"type": type(exc).__name__, "message": str(exc)}
    for attr in ("line", "column"):
        if getattr(exc, attr, None) is not None:
            obj[attr] = getattr(exc, attr)
    return obj


def run(cfg):
    """Execute one configuration; returns ``(exit_status, report_dict)``."""
    report = {"schema": reports.SCHEMA, "command": cfg.command, "input": cfg.input or "example_intro",
              "seed": cfg.seed, "samples": cfg.samples, "backend": None, "errors": []}
    try:
        sys = load_system(cfg.input)
    except ParseError as exc:
        report.update(pass_=False, errors=[_error_object(exc)])
        return 2, _finish(report)
    except (OSError, ClawGeoError) as exc:
        report.update(pass_=False, errors=[_error_object(exc)])
        return 1, _finish(report)
    try:
        results, passed = HANDLERS[cfg.command](cfg, sys)
    except (ClawGeoError, ValueError, np.linalg.LinAlgError) as exc:
        report.update(pass_=False, errors=[_error_object(exc)])
        return 1, _finish(report)
    report.update(results=results, pass_=bool(passed))
    return (0 if passed else 1), _finish(report)


def _finish(report):
    from . import _kernels
    report["backend"] = _kernels.backend_name()
    report["pass"] = report.pop("pass_")
    return report


def _tol_arg(text):
    key, _, value = text.partition("=")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="clawgeo", description="Projective geometry of conservation-law systems.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("input", nargs="?", help="system file (.claw) or bundled corpus name")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--tol", type=_tol_arg, action="append", default=[], metavar="NAME=VALUE",
                   help=f"override a tolerance ({', '.join(TOL_KEYS)})")
    p.add_argument("--output", "-o", help="write the JSON report here instead of stdout")
    p.add_argument("--csv", help="write per-point data as CSV")
    p.add_argument("--out-spec", help="write a derived system as a .claw file")
    p.add_argument("--rows", help='two coefficient rows for reciprocal, e.g. "1,0,-1,0;0,1,-1,0"')
    p.add_argument("--pair", help="names of the two additional laws, e.g. sigma4,sigma5")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(args.command, args.input, args.seed, args.samples, dict(args.tol), args.output,
                        args.csv, args.out_spec, args.rows,
                        tuple(s.strip() for s in args.pair.split(",")) if args.pair else None)
    except ValueError as exc:
        print(f"clawgeo: {exc}", file=_sys.stderr)
        return 2
    status, report = run(cfg)
    text = reports.dumps(report)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        _sys.stdout.write(text)
    return status


if __name__ == "__main__":
    raise SystemExit(main())
