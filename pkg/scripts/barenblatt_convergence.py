"""L1 error of the scalar PME scheme against the Barenblatt profile under grid refinement."""
import argparse
import time

import numpy as np

from kspme.field import Grid
from kspme.pme import ScalarPmeProblem, barenblatt_field, evolve_scalar_pme


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--cells", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--t0", type=float, default=0.01)
    ap.add_argument("--t1", type=float, default=0.11)
    ap.add_argument("--length", type=float, default=3.0)
    args = ap.parse_args()

    prev = None
    print("cells  L1_error     ratio  steps  wall_s")
    for N in args.cells:
        g = Grid(2, N, args.length, origin=-args.length / 2)
        prob = ScalarPmeProblem(alpha=args.alpha)
        start = time.perf_counter()
        steps = []
        n1, _ = evolve_scalar_pme(barenblatt_field(g, args.t0, args.alpha), prob, args.t0, args.t1,
                                  callback=lambda *a: steps.append(1))
        wall = time.perf_counter() - start
        err = float(np.sum(np.abs(n1.values - barenblatt_field(g, args.t1, args.alpha).values)) * g.cell_volume)
        ratio = f"{prev / err:6.2f}" if prev else "     -"
        print(f"{N:5d}  {err:.4e}  {ratio}  {len(steps):5d}  {wall:6.2f}")
        prev = err


if __name__ == "__main__":
    main()
