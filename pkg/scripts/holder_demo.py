"""Hölder exponent fit at the free boundary of a Barenblatt profile, with the decay evidence."""
import argparse

import numpy as np

from kspme.field import Grid, SpaceTimeSeries
from kspme.pme import barenblatt_field, barenblatt_radius
from kspme.regularity import fit_holder


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=2.0)
    ap.add_argument("--cells", type=int, default=384)
    ap.add_argument("--rho0", type=float, nargs="+", default=[0.05, 0.1])
    args = ap.parse_args()

    g = Grid(2, args.cells, 3.0, origin=-1.5)
    times = np.concatenate([np.geomspace(0.01, 0.5, 40, endpoint=False), np.linspace(0.5, 1.0, 61)])
    s = SpaceTimeSeries(times, [barenblatt_field(g, t, args.alpha) for t in times])
    xc = g.centers_1d()
    front = barenblatt_radius(1.0, args.alpha, 2)
    center = (float(xc[np.argmin(np.abs(xc - front))]), float(xc[args.cells // 2]))
    print(f"interface radius {front:.4f}, fit centre {center}, expected exponent {1 / args.alpha:g}")
    for rho0 in args.rho0:
        fit = fit_holder(s, center, 1.0, rho0, args.alpha)
        print(f"\nrho0 = {rho0}")
        print(fit.report())


if __name__ == "__main__":
    main()
