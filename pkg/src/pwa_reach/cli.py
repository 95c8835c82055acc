"""Command-line front end: check, estimate, simulate, validate, plot, compare."""
import argparse
import json
import os
import sys as _sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import io
from .config import DEFAULT_TOLERANCES, SearchConfig, Tolerances
from .errors import DimensionMismatch, DimensionUnsupported, ParseError, PwaReachError
from .export import PIECE_COLORS, write_polylines_csv, write_svg
from .lmi import COMMON, PIECEWISE, given_pieces_deficits, residuals
from .model import (build_geometry, check_continuity, etilde_mode, hurwitz_margins,
                    require_continuous, require_hurwitz, Side)
from .reachset import (PiecewiseEllipsoid, boundary_polyline, compare_dominance,
                       monte_carlo_areas, projected_polylines)
from .sim import (DisturbanceKind, containment_audit, lyapunov_audit, simulate_many,
                  write_trajectories_csv)
from .solve import Certificate, alpha_search

EXIT_CODES = {
    "parse": 2,
    "dimension": 2,
    "zero-normal": 3,
    "continuity": 3,
    "hurwitz": 4,
    "alpha": 5,
    "infeasible": 5,
    "audit-failed": 6,
    "validation-failed": 7,
    "empty-level-set": 8,
    "dimension-unsupported": 8,
    "non-finite": 9,
    "io": 10,
}


class ValidationFailed(PwaReachError):
    code = "validation-failed"


class OutputError(PwaReachError):
    code = "io"


def _emit(obj):
    print(json.dumps(obj, indent=2, default=io._jsonable))


def _tolerances(args):
    overrides = {f.name: getattr(args, f.name, None) for f in fields(Tolerances)}
    return DEFAULT_TOLERANCES.updated(**overrides)


def _out_dir(args):
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise OutputError(f"output directory {out} is not writable")
    return out


def _methods(args):
    return [PIECEWISE, COMMON] if args.method == "both" else [args.method]


def _load(args, tol):
    system = io.load_system(args.system)
    require_continuous(system, tol.tol_cont)
    return system


def _alpha_grid(args):
    if args.alpha is not None:
        return [args.alpha]
    if args.alpha_grid:
        try:
            return [float(v) for v in args.alpha_grid.split(",") if v.strip()]
        except ValueError as exc:
            raise ParseError(f"bad --alpha-grid {args.alpha_grid!r}") from exc
    return None


def _pset(cert, system):
    return PiecewiseEllipsoid.from_certificate(cert, system)


def _set_polylines(pset, coords, samples=256):
    if pset.n == 2 and tuple(coords) == (0, 1):
        return {side: boundary_polyline(pset, side, samples) for side in (Side.NEG, Side.POS)}
    return projected_polylines(pset, coords, samples)


def _export_set(out, method, pset, coords, trajs=()):
    lines = _set_polylines(pset, coords)
    polys = [lines[Side.NEG], lines[Side.POS]]
    write_polylines_csv(polys, out / f"set_{method}.csv")
    if method == COMMON:
        curves = [(p, PIECE_COLORS["common"]) for p in polys]
    else:
        curves = [(lines[Side.NEG], PIECE_COLORS["NEG"]), (lines[Side.POS], PIECE_COLORS["POS"])]
    paths = [t.states[:, list(coords)] for t in trajs]
    labels = tuple(f"x{i + 1}" for i in coords)
    write_svg(curves, out / f"set_{method}.svg", paths, labels)
    return [f"set_{method}.csv", f"set_{method}.svg"]


def _coords(args, n):
    coords = tuple(args.project) if args.project else (0, 1)
    if n < 2:
        raise DimensionUnsupported("set boundaries need n >= 2")
    if any(not 0 <= i < n for i in coords) or coords[0] == coords[1]:
        raise DimensionMismatch(f"--project needs two distinct indices in [0, {n - 1}]")
    return coords


def cmd_check(args):
    tol = _tolerances(args)
    system = io.load_system(args.system)
    rep = check_continuity(system, tol.tol_cont)
    geom = build_geometry(system)
    em = etilde_mode(geom)
    result = {
        "n": system.n, "m": system.m,
        "continuous": rep.ok,
        "h": rep.h,
        "continuity_residual_A": rep.residual_A,
        "continuity_residual_d": rep.residual_d,
        "hurwitz_margins": [float(v) for v in hurwitz_margins(system)],
        "origin_region": geom.origin_region.value,
        "e1_mode": em.e1_mode.value,
        "e2_mode": em.e2_mode.value,
    }
    _emit(result)
    require_continuous(system, tol.tol_cont)
    require_hurwitz(system, strict=True, tol=tol)
    return 0


def cmd_estimate(args):
    tol = _tolerances(args)
    system = _load(args, tol)
    out = _out_dir(args)
    grid = _alpha_grid(args)
    config = SearchConfig(solver=args.solver)
    coords = _coords(args, system.n) if system.n >= 2 else None
    summary = {"method": args.method, "certificates": {}, "timing": {}, "files": []}
    certs = {}
    order = _methods(args)
    if args.dominate and args.method == "both":
        order = [COMMON, PIECEWISE]
    for method in order:
        floor = certs[COMMON].P if (args.dominate and method == PIECEWISE and COMMON in certs) \
            else None
        t0 = time.perf_counter()
        res = alpha_search(system, method, alpha_grid=grid, config=config, tol=tol,
                           refine=args.refine or None, floor=floor)
        summary["timing"][method] = time.perf_counter() - t0
        cert = res.best_certificate
        certs[method] = cert
        io.save_certificate(cert, out / f"certificate_{method}.json")
        summary["files"].append(f"certificate_{method}.json")
        summary["certificates"][method] = {
            "alpha": cert.alpha, "objective": cert.objective,
            "trace": float(np.trace(cert.P1) + (np.trace(cert.P2) if method == PIECEWISE
                                                else 0.0)),
            "max_residual": max(cert.audit.values(), default=0.0),
            "alpha_curve": res.curve(),
        }
        if coords is not None:
            summary["files"] += _export_set(out, method, _pset(cert, system), coords)
    if len(certs) == 2:
        rep = compare_dominance(_pset(certs[PIECEWISE], system), certs[COMMON].pieces()[0])
        summary["dominance"] = rep.__dict__
    _emit(summary)
    return 0


def _simulate(args, system):
    kind = DisturbanceKind.EXTREMAL_RANDOM_SIGN if args.extremal \
        else DisturbanceKind.PIECEWISE_CONSTANT_RANDOM
    return simulate_many(system, args.trajectories, seed=args.seed, t_end=args.t_end,
                         dt=args.dt, hold_dt=args.hold_dt, kind=kind,
                         record_every=args.record_every)


def cmd_simulate(args):
    tol = _tolerances(args)
    system = _load(args, tol)
    out = _out_dir(args)
    t0 = time.perf_counter()
    trajs = _simulate(args, system)
    elapsed = time.perf_counter() - t0
    write_trajectories_csv(trajs, out / "trajectories.csv")
    _emit({"trajectories": len(trajs), "samples": sum(len(t) for t in trajs),
           "timing": {"simulate": elapsed}, "files": ["trajectories.csv"]})
    return 0


def _certificate_paths(args, out):
    if args.certificate:
        return [Path(p) for p in args.certificate]
    paths = [out / f"certificate_{m}.json" for m in _methods(args)]
    found = [p for p in paths if p.exists()]
    if not found:
        raise ParseError(f"no certificate given and none found under {out}")
    return found


def cmd_validate(args):
    tol = _tolerances(args)
    system = _load(args, tol)
    out = _out_dir(args)
    paths = _certificate_paths(args, out)
    certs = [io.load_certificate(p) for p in paths]
    t0 = time.perf_counter()
    trajs = _simulate(args, system)
    timing = {"simulate": time.perf_counter() - t0}
    report = {"trajectories": len(trajs), "certificates": {}, "timing": timing}
    ok = True
    for path, cert in zip(paths, certs):
        t0 = time.perf_counter()
        res = residuals(cert, system, tol)
        cont = containment_audit(trajs, _pset(cert, system), tol.tol_mem)
        lyap = [lyapunov_audit(t, cert, system, tol.tol_audit) for t in trajs]
        points = sum(r.points for r in lyap)
        viol = sum(r.violation_fraction * r.points for r in lyap) / max(points, 1)
        entry = {
            "file": str(path), "kind": cert.kind, "alpha": cert.alpha,
            "residuals": res.to_dict(), "max_residual": res.max_violation,
            "inside_fraction": cont.inside_fraction, "worst_excess": cont.worst_excess,
            "violation_fraction": viol,
            "worst_margin": max((r.worst_margin for r in lyap), default=float("-inf")),
        }
        timing[f"audit_{cert.kind}"] = time.perf_counter() - t0
        report["certificates"][cert.kind] = entry
        ok &= cont.inside_fraction == 1.0 and viol == 0.0 \
            and res.max_violation <= 10 * tol.tol_solver
    if args.trajectories_csv:
        write_trajectories_csv(trajs, out / "trajectories.csv")
    io.save_json(report, out / "audit.json")
    _emit(report)
    if not ok:
        raise ValidationFailed("certificate failed the simulation audit; see audit.json")
    return 0


def cmd_plot(args):
    tol = _tolerances(args)
    system = _load(args, tol)
    out = _out_dir(args)
    coords = _coords(args, system.n)
    trajs = _simulate(args, system) if args.trajectories else []
    files = []
    for path in _certificate_paths(args, out):
        cert = io.load_certificate(path)
        files += _export_set(out, cert.kind, _pset(cert, system), coords, trajs)
    _emit({"files": files, "project": list(coords)})
    return 0


def _compare_pair(args, out):
    if args.printed:
        data = io._read_json(args.printed)
        alpha = float(data["alpha"])
        pw = Certificate(PIECEWISE, alpha, np.array(data["P1"], float),
                         np.array(data["P2"], float), np.zeros(len(data["P"])),
                         np.zeros(len(data["P"])))
        return pw, Certificate.common(data["P"], alpha), True
    paths = {io.load_certificate(p).kind: p for p in _certificate_paths(args, out)}
    if set(paths) != {PIECEWISE, COMMON}:
        raise ParseError("compare needs one piecewise and one common certificate")
    return io.load_certificate(paths[PIECEWISE]), io.load_certificate(paths[COMMON]), False


def cmd_compare(args):
    tol = _tolerances(args)
    system = _load(args, tol)
    out = Path(args.out)
    pw, common, given = _compare_pair(args, out)
    pset = _pset(pw, system)
    rep = compare_dominance(pset, common.pieces()[0])
    result = {
        "alpha": pw.alpha,
        "trace_P1": float(np.trace(pw.P1)), "trace_P2": float(np.trace(pw.P2)),
        "trace_P": float(np.trace(common.P)),
        "min_eig_P1_minus_P": rep.min_eig_1, "min_eig_P2_minus_P": rep.min_eig_2,
        "subset": rep.subset_flag, "method": rep.method,
    }
    if given:
        result["lmi_deficits"] = given_pieces_deficits(system, common.P, pw.P1, pw.P2, pw.alpha)
    if system.n == 2 or args.areas:
        areas = monte_carlo_areas([pset, _pset(common, system)], seed=args.seed)
        result["area_piecewise"], result["area_common"] = areas
    _emit(result)
    return 0


def _add_common(p, sim=False):
    p.add_argument("system", help="system JSON file, or a bundled name (example1, example2)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--method", choices=["piecewise", "common", "both"], default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--solver", default=None, help="cvxpy solver name")
    for f in fields(Tolerances):
        p.add_argument("--" + f.name.replace("_", "-"), dest=f.name, type=float, default=None,
                       help=f"override {f.name} (default {f.default})")
    if sim:
        p.add_argument("--trajectories", type=int, default=1000)
        p.add_argument("--t-end", type=float, default=30.0)
        p.add_argument("--dt", type=float, default=1e-3)
        p.add_argument("--hold-dt", type=float, default=1e-2)
        p.add_argument("--record-every", type=int, default=1)
        p.add_argument("--extremal", action="store_true",
                       help="draw disturbances on the boundary of the admissible set")


def _nonneg_check(args):
    for name in ("trajectories", "record_every"):
        v = getattr(args, name, None)
        if v is not None and v < 0:
            raise ParseError(f"--{name.replace('_', '-')} must be >= 0")


def build_parser():
    parser = argparse.ArgumentParser(prog="pwa-reach",
                                     description="Reachable-set bounds for bimodal PWA systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="continuity, Hurwitz margins and switching geometry")
    _add_common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("estimate", help="search alpha and write certificates and sets")
    _add_common(p)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--alpha-grid", default=None, help="comma separated alpha values")
    p.add_argument("--refine", action="store_true", help="golden-section refine a given grid")
    p.add_argument("--dominate", action="store_true",
                   help="with --method both, require P1, P2 above the common P")
    p.add_argument("--project", type=int, nargs=2, metavar=("I", "J"))
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="write disturbed trajectories")
    _add_common(p, sim=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="containment and Lyapunov audits of certificates")
    _add_common(p, sim=True)
    p.add_argument("--certificate", nargs="+", default=None)
    p.add_argument("--trajectories-csv", action="store_true", help="also write trajectories.csv")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plot", help="CSV/SVG boundaries, projected when n > 2")
    _add_common(p, sim=True)
    p.set_defaults(trajectories=0)
    p.add_argument("--certificate", nargs="+", default=None)
    p.add_argument("--project", type=int, nargs=2, metavar=("I", "J"))
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("compare", help="dominance between piecewise and common certificates")
    _add_common(p)
    p.add_argument("--certificate", nargs="+", default=None)
    p.add_argument("--printed", default=None,
                   help="JSON with alpha, P, P1, P2 (e.g. example2_printed)")
    p.add_argument("--areas", action="store_true", help="Monte-Carlo areas also when n > 2")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "printed", None) == "example2_printed":
        args.printed = str(io.example_path("example2_printed"))
    try:
        _nonneg_check(args)
        return args.func(args)
    except PwaReachError as exc:
        err = {"error": exc.code, "type": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "trace_curve", None):
            err["trace_curve"] = exc.trace_curve
        if getattr(exc, "report", None) is not None and hasattr(exc.report, "to_dict"):
            err["residuals"] = exc.report.to_dict()
        print(json.dumps(err, default=io._jsonable), file=_sys.stderr)
        return EXIT_CODES.get(exc.code, 1)


if __name__ == "__main__":
    raise SystemExit(main())
