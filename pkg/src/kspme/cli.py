"""Command-line entry point: simulate, classify, analyze, barenblatt, version."""
from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .field import Grid
from .io import ConfigError, load_config, write_snapshot
from .pme import barenblatt_field
from .regime import ROW_FIELDS, classify, sweep
from .run import EXIT_INPUT, EXIT_OK, AnalysisOptions, analyze, simulate

WORKERS_ENV = "KSPME_MAX_WORKERS"


def _simulate_one(config: str, out: str) -> tuple[int, str]:
    try:
        cfg = load_config(config)
    except ConfigError as exc:
        return EXIT_INPUT, str(exc)
    return simulate(cfg, out)


def cmd_simulate(args) -> int:
    configs = args.configs
    if len(configs) == 1:
        outs = [args.out]
    else:
        outs = [str(Path(args.out) / Path(c).stem) for c in configs]
        if len(set(outs)) != len(outs):
            print("error: config file names must have distinct stems", file=sys.stderr)
            return EXIT_INPUT
    workers = max(1, int(os.environ.get(WORKERS_ENV, "1") or 1))
    workers = min(workers, len(configs))
    if workers == 1:
        results = [_simulate_one(c, o) for c, o in zip(configs, outs)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_simulate_one, configs, outs))
    code = EXIT_OK
    for (rc, msg), c in zip(results, configs):
        print(f"{c}: {msg}", file=sys.stderr if rc else sys.stdout)
        code = max(code, rc)
    return code


def cmd_classify(args) -> int:
    try:
        if args.sweep:
            q_lo, q_hi, nq, a_lo, a_hi, na = args.sweep
            rows = sweep(np.linspace(q_lo, q_hi, int(nq)), np.linspace(a_lo, a_hi, int(na)),
                         (args.p2,) if args.p2 is not None else (False, True))
        else:
            if args.q is None or args.alpha is None:
                print("error: classify needs --q and --alpha, or --sweep", file=sys.stderr)
                return EXIT_INPUT
            rows = [classify(args.q, args.alpha, bool(args.p2))]
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=list(ROW_FIELDS))
        w.writeheader()
        for v in rows:
            row = v.as_row()
            w.writerow({k: repr(x) if isinstance(x, float) else x for k, x in row.items()})
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_analyze(args) -> int:
    center = tuple(float(x) for x in args.center.split(",")) if args.center else None
    opts = AnalysisOptions(
        checks=tuple(args.check or ("entropy",)), tol=args.tol, center=center, rho0=args.rho0,
        kappa_exp=args.kappa_exp, qhat1=args.qhat1,
    )
    code, lines = analyze(args.run_dir, opts)
    for line in lines:
        print(line, file=sys.stderr if code == EXIT_INPUT else sys.stdout)
    return code


def cmd_barenblatt(args) -> int:
    try:
        grid = Grid(args.dim, args.cells, args.length, args.origin)
        f = barenblatt_field(grid, args.time, args.alpha, args.mass)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    write_snapshot(args.out, "n", f.values, grid.spacing, args.time)
    print(f"wrote {args.out} (mass {f.integral():.17g})")
    return EXIT_OK


def cmd_version(args) -> int:
    print(f"kspme {__version__}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kspme", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("simulate", help="run one or more TOML configs")
    s.add_argument("configs", nargs="+")
    s.add_argument("--out", default="runs/run", help="run directory (parent directory when several configs)")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("classify", help="regime verdicts for (q, alpha)")
    c.add_argument("--q", type=float)
    c.add_argument("--alpha", type=float)
    c.add_argument("--p2", action=argparse.BooleanOptionalAction, default=None)
    c.add_argument("--sweep", type=float, nargs=6, metavar=("Q_LO", "Q_HI", "NQ", "A_LO", "A_HI", "NA"))
    c.add_argument("--out")
    c.set_defaults(func=cmd_classify)

    a = sub.add_parser("analyze", help="energy / regularity checks on a run directory")
    a.add_argument("run_dir")
    a.add_argument("--check", action="append", choices=["entropy", "lyapunov1", "lyapunov2", "holder", "drift"])
    a.add_argument("--tol", type=float, default=1e-2)
    a.add_argument("--center", help="comma-separated point for the Hölder fit")
    a.add_argument("--rho0", type=float)
    a.add_argument("--kappa-exp", type=float)
    a.add_argument("--qhat1", type=float, default=4.0)
    a.set_defaults(func=cmd_analyze)

    b = sub.add_parser("barenblatt", help="write the closed-form profile as a snapshot")
    b.add_argument("--dim", type=int, default=2)
    b.add_argument("--cells", type=int, default=64)
    b.add_argument("--length", type=float, default=3.0)
    b.add_argument("--origin", type=float, default=-1.5)
    b.add_argument("--alpha", type=float, default=1.0)
    b.add_argument("--mass", type=float, default=1.0)
    b.add_argument("--time", type=float, default=0.01)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_barenblatt)

    v = sub.add_parser("version")
    v.set_defaults(func=cmd_version)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
