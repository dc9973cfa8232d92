"""Regime phase diagram on a (q, alpha) lattice, as CSV plus a coarse text map."""
import argparse
import csv

import numpy as np

from kspme.regime import ROW_FIELDS, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=float, nargs=2, default=[1.0, 2.0])
    ap.add_argument("--alpha", type=float, nargs=2, default=[0.0, 2.0])
    ap.add_argument("--nq", type=int, default=41)
    ap.add_argument("--na", type=int, default=41)
    ap.add_argument("--out", default="phase_diagram.csv")
    args = ap.parse_args()

    qs = np.linspace(*args.q, args.nq)
    alphas = np.linspace(*args.alpha, args.na)
    rows = sweep(qs, alphas)
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(ROW_FIELDS))
        w.writeheader()
        for v in rows:
            w.writerow(v.as_row())
    print(f"wrote {len(rows)} rows to {args.out}")

    # H = Hölder, w = weak only, . = neither; alpha increases upwards
    for p2 in (False, True):
        grid = {(v.q, v.alpha): v for v in rows if v.p2 == p2}
        print(f"\np2 = {p2}  (q from {qs[0]:g} to {qs[-1]:g} left to right)")
        for a in alphas[::-4]:
            line = "".join(
                "H" if grid[(q, a)].holder_exists else "w" if grid[(q, a)].weak_exists else "." for q in qs[::2]
            )
            print(f"alpha={a:5.2f} {line}")


if __name__ == "__main__":
    main()
