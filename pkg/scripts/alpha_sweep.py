"""Trace objective as a function of the decay rate, for either bundled example or a system file."""
import argparse
import csv
from pathlib import Path

from pwa_reach import io
from pwa_reach.solve import COMMON, PIECEWISE, alpha_search


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("system", nargs="?", default="example1")
    ap.add_argument("--out", default="out/alpha_sweep.csv")
    args = ap.parse_args()
    sys = io.load_system(args.system)
    rows = []
    for kind in (PIECEWISE, COMMON):
        res = alpha_search(sys, kind)
        rows += [(kind, a, status, obj) for a, status, obj in sorted(res.curve())]
        print(f"{kind}: best alpha {res.best_alpha:.5f}, objective {res.best_certificate.objective:.5f}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "alpha", "status", "objective"])
        w.writerows(rows)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
