"""Two-dimensional example: piecewise vs common bounds at alpha = 0.4 against 1000 trajectories.

Writes certificates, boundary CSV/SVG files and a summary JSON to the output directory.
"""
import argparse
import json
import time
from pathlib import Path

from pwa_reach import io
from pwa_reach.export import PIECE_COLORS, write_polylines_csv, write_svg
from pwa_reach.model import Side
from pwa_reach.reachset import PiecewiseEllipsoid, boundary_polyline, monte_carlo_areas
from pwa_reach.sim import containment_audit, lyapunov_audit, simulate_many
from pwa_reach.solve import COMMON, PIECEWISE, solve_at_alpha


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/example1")
    ap.add_argument("--alpha", type=float, default=0.4)
    ap.add_argument("--trajectories", type=int, default=1000)
    ap.add_argument("--t-end", type=float, default=30.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    sys = io.load_system("example1")
    certs, sets, summary = {}, {}, {"alpha": args.alpha}
    for kind in (PIECEWISE, COMMON):
        t0 = time.perf_counter()
        status, cert, info = solve_at_alpha(sys, kind, args.alpha)
        if cert is None:
            raise SystemExit(f"{kind}: {status.value} ({info})")
        summary[f"solve_time_{kind}"] = time.perf_counter() - t0
        certs[kind] = cert
        sets[kind] = PiecewiseEllipsoid.from_certificate(cert, sys)
        io.save_certificate(cert, out / f"certificate_{kind}.json")

    t0 = time.perf_counter()
    trajs = simulate_many(sys, args.trajectories, seed=args.seed, t_end=args.t_end,
                          record_every=10)
    summary["simulate_time"] = time.perf_counter() - t0
    for kind, pset in sets.items():
        rep = containment_audit(trajs, pset)
        summary[f"inside_fraction_{kind}"] = rep.inside_fraction
        summary[f"worst_excess_{kind}"] = rep.worst_excess
    sample = trajs[:100]
    viol = [lyapunov_audit(t, certs[PIECEWISE], sys).violation_fraction for t in sample]
    summary["lyapunov_violation_max"] = max(viol)
    summary["area_piecewise"], summary["area_common"] = monte_carlo_areas(
        [sets[PIECEWISE], sets[COMMON]])

    curves = []
    for kind, pset in sets.items():
        lines = [boundary_polyline(pset, side) for side in (Side.NEG, Side.POS)]
        write_polylines_csv(lines, out / f"set_{kind}.csv")
        if kind == PIECEWISE:
            curves += [(lines[0], PIECE_COLORS["NEG"]), (lines[1], PIECE_COLORS["POS"])]
        else:
            curves += [(line, PIECE_COLORS["common"]) for line in lines]
    write_svg(curves, out / "sets.svg", [t.states for t in trajs[:50]], ("x1", "x2"))
    io.save_json(summary, out / "summary.json")
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
