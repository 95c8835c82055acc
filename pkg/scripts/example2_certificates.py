"""Two-cart example at alpha = 0.1: fresh certificates against the printed 4-decimal matrices.

Three piecewise variants are compared with the common quadratic P:
the plain trace-maximal solve, and solves whose pieces are floored at the
fresh common P and at the printed P.
"""
import argparse
import json
from pathlib import Path

import numpy as np

from pwa_reach import io
from pwa_reach.export import PIECE_COLORS, write_svg
from pwa_reach.lmi import given_pieces_deficits
from pwa_reach.model import Side
from pwa_reach.reachset import PiecewiseEllipsoid, compare_dominance, projected_polylines
from pwa_reach.solve import COMMON, PIECEWISE, solve_at_alpha


def describe(cert, P):
    return {
        "objective": cert.objective,
        "trace_P1": float(np.trace(cert.P1)),
        "trace_P2": float(np.trace(cert.P2)),
        "min_eig_P1_minus_P": float(np.linalg.eigvalsh(cert.P1 - P).min()),
        "min_eig_P2_minus_P": float(np.linalg.eigvalsh(cert.P2 - P).min()),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/example2")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    sys = io.load_system("example2")
    printed = io.printed_example2()
    alpha = printed["alpha"]
    _, common, _ = solve_at_alpha(sys, COMMON, alpha)
    report = {
        "common_P_max_abs_diff_to_printed": float(np.abs(common.P - printed["P"]).max()),
        "printed_deficits": given_pieces_deficits(sys, printed["P"], printed["P1"],
                                                  printed["P2"], alpha),
        "printed": describe(io.Certificate(PIECEWISE, alpha, printed["P1"], printed["P2"],
                                           np.zeros(4), np.zeros(4)), printed["P"]),
    }
    variants = {"plain": None, "floor_fresh_P": common.P, "floor_printed_P": printed["P"]}
    certs = {}
    for name, floor in variants.items():
        _, cert, info = solve_at_alpha(sys, PIECEWISE, alpha, floor=floor)
        if cert is None:
            report[name] = {"status": info}
            continue
        certs[name] = cert
        report[name] = describe(cert, common.P)
        report[name]["max_abs_diff_to_printed"] = float(max(
            np.abs(cert.P1 - printed["P1"]).max(), np.abs(cert.P2 - printed["P2"]).max()))
        io.save_certificate(cert, out / f"certificate_piecewise_{name}.json")
    io.save_certificate(common, out / "certificate_common.json")

    # projection onto (x1, x3), where the switching line is visible
    curves = []
    ell = PiecewiseEllipsoid.single(common.pieces()[0], sys.c)
    curves += [(line, PIECE_COLORS["common"]) for line in projected_polylines(ell, (0, 2)).values()]
    if "floor_fresh_P" in certs:
        pset = PiecewiseEllipsoid.from_certificate(certs["floor_fresh_P"], sys)
        lines = projected_polylines(pset, (0, 2))
        curves += [(lines[Side.NEG], PIECE_COLORS["NEG"]), (lines[Side.POS], PIECE_COLORS["POS"])]
        report["floor_fresh_P"]["dominance"] = compare_dominance(
            pset, common.pieces()[0]).__dict__
    write_svg(curves, out / "sets_x1_x3.svg", labels=("x1", "x3"))
    io.save_json(report, out / "summary.json")
    print(json.dumps(report, indent=2, default=float))


if __name__ == "__main__":
    main()
