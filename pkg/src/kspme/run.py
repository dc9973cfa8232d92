"""Config-driven simulation runs and post-hoc analysis of run directories."""
from __future__ import annotations

import math
import platform
import shutil
import time as _time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .field import Grid, ScalarField, SpaceTimeSeries, VectorField, centered_diff
from .io import (
    RunConfig,
    SnapshotError,
    load_config,
    load_state_series,
    read_series_csv,
    read_snapshot,
    write_json,
    write_rows_csv,
    write_series_csv,
    write_snapshot,
    write_state_snapshots,
)
from .ledger import FunctionalSeries, check_entropy_dissipation, lyapunov_weak1, lyapunov_weak2
from .pme import CFLError, ScalarPmeProblem, barenblatt_field, barenblatt_radius
from .regularity import drift_exponents, drift_norm_check, fit_holder
from .system import InvariantError, ModelParams, SystemState, leray_project
from .trajectory import Trajectory, run_pme, run_system

EXIT_OK, EXIT_MONITOR, EXIT_INPUT, EXIT_INVARIANT = 0, 1, 2, 3


def model_params(cfg: RunConfig) -> ModelParams:
    m = cfg.model
    return ModelParams(
        alpha=m.alpha, q=m.q, epsilon=m.epsilon, chi=m.chi, kappa=m.kappa, kappa0=m.kappa0,
        grad_phi=m.grad_phi, p1=m.p1, p2=m.p2,
    )


def _scalar_initial(spec: dict, grid: Grid, cfg: RunConfig, rng: np.random.Generator) -> ScalarField:
    kind = spec["kind"]
    if kind == "zero":
        return ScalarField.constant(grid, 0.0)
    if kind == "constant":
        return ScalarField.constant(grid, spec.get("value", 0.0))
    if kind == "barenblatt":
        return barenblatt_field(grid, spec.get("t0", cfg.time.t_start or 0.01), cfg.model.alpha, spec.get("mass", 1.0))
    if kind == "gaussian":
        center = spec.get("center", [grid.origin + grid.length / 2] * grid.dim)
        r2 = sum((x - c) ** 2 for x, c in zip(grid.coords(), center))
        w = spec.get("width", 0.4)
        return ScalarField(grid, spec.get("background", 0.0) + spec.get("amplitude", 1.0) * np.exp(-r2 / (2 * w * w)))
    if kind == "random":
        return ScalarField(grid, spec.get("mean", 0.0) + spec.get("amplitude", 1.0) * rng.random(grid.shape))
    if kind == "file":
        snap = read_snapshot(spec["path"])
        if snap.values.shape != grid.shape:
            raise SnapshotError(f"{spec['path']}: shape {snap.values.shape} does not match grid {grid.shape}")
        return ScalarField(grid, snap.values)
    raise ValueError(f"unknown preset {kind!r}")


def _vector_initial(spec: dict, grid: Grid, rng: np.random.Generator) -> VectorField:
    kind = spec["kind"]
    if kind == "zero":
        return VectorField.zeros(grid)
    if kind == "constant":
        return VectorField.constant(grid, spec["vector"])
    if kind == "random":
        arrs = [spec.get("amplitude", 1.0) * rng.standard_normal(grid.shape) for _ in range(grid.dim)]
        return leray_project(VectorField.from_arrays(grid, arrs))
    if kind == "file":
        base = Path(spec["path"])
        arrs = [read_snapshot(base.with_name(base.name.replace("{axis}", ax))).values for ax in "xyz"[: grid.dim]]
        return leray_project(VectorField.from_arrays(grid, arrs))
    raise ValueError(f"unknown preset {kind!r}")


def build_state(cfg: RunConfig) -> SystemState:
    grid = cfg.grid.build()
    rng = np.random.default_rng(cfg.seed)
    n = _scalar_initial(cfg.initial["n"], grid, cfg, rng)
    if cfg.model.system == "pme":
        return SystemState(n, ScalarField.constant(grid, 0.0), VectorField.zeros(grid), cfg.time.t_start)
    c = _scalar_initial(cfg.initial["c"], grid, cfg, rng)
    u = _vector_initial(cfg.initial["u"], grid, rng)
    return SystemState(n, c, u, cfg.time.t_start)


def build_drift(cfg: RunConfig, grid: Grid) -> VectorField | None:
    spec = cfg.model.drift
    kind = spec.get("kind", "none")
    if kind == "none":
        return None
    if kind == "constant":
        return VectorField.constant(grid, spec["vector"])
    if kind == "shear":
        # B = a (sin(2π m y / L), 0[, 0]): smooth and divergence-free
        X = grid.coords()
        a = spec.get("amplitude", 1.0)
        m = spec.get("modes", 1.0)
        bx = a * np.sin(2 * np.pi * m * (X[1] - grid.origin) / grid.length)
        return VectorField.from_arrays(grid, [bx] + [np.zeros(grid.shape)] * (grid.dim - 1))
    raise ValueError(f"unknown drift preset {kind!r}")


def _monitor_reports(cfg: RunConfig, traj: Trajectory) -> list[dict]:
    out = []
    params = traj.params
    for mon in cfg.monitors:
        if mon.name == "entropy":
            if len(traj.series) < 3:
                out.append({"name": "entropy", "verdict": "fail", "reason": "fewer than 3 recorded times"})
                continue
            rep = check_entropy_dissipation(traj, params, mon.tol)
            d = rep.to_dict()
            for k in ("times", "lhs", "rhs"):
                d.pop(k)
            out.append(d)
        elif mon.name in ("lyapunov1", "lyapunov2"):
            fn = lyapunov_weak1 if mon.name == "lyapunov1" else lyapunov_weak2
            try:
                ly = fn(traj, params)
            except ValueError as exc:
                out.append({"name": mon.name, "verdict": "fail", "reason": str(exc)})
                continue
            finite = bool(np.all(np.isfinite(ly.combined)))
            out.append({"name": mon.name, "verdict": "pass" if finite else "fail", "terminal": ly.terminal,
                        "max_bracket": float(np.max(ly.bracket))})
        elif mon.name == "mass":
            mass = traj.series["mass"]
            drift = float(np.max(np.abs(mass - mass[0])) / max(abs(mass[0]), 1e-300))
            out.append({"name": "mass", "verdict": "pass" if drift <= mon.tol else "fail", "relative_drift": drift,
                        "tolerance": mon.tol})
    return out


def simulate(cfg: RunConfig, out_dir, config_text: str | None = None) -> tuple[int, str]:
    """Execute one run into ``out_dir``; returns (exit code, message)."""
    out = Path(out_dir)
    if out.exists():
        if any(out.iterdir()) and not (out / "config.toml").exists():
            return EXIT_INPUT, f"{out}: exists and is not a previous run directory; refusing to overwrite"
        shutil.rmtree(out)
    (out / "snapshots").mkdir(parents=True)
    (out / "dumps").mkdir()
    (out / "config.toml").write_text(config_text if config_text is not None else cfg.dumps())
    grid = cfg.grid.build()
    manifest = {
        "version": __version__,
        "config_hash": cfg.hash(),
        "grid": {"dim": grid.dim, "cells": grid.cells, "length": grid.length, "origin": grid.origin},
        "system": cfg.model.system,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    started = _time.perf_counter()
    try:
        state = build_state(cfg)
    except (SnapshotError, ValueError) as exc:
        return EXIT_INPUT, f"invalid initial data: {exc}"
    params = model_params(cfg)
    t = cfg.time
    interval = t.snapshot_interval or None
    try:
        if cfg.model.system == "pme":
            problem = ScalarPmeProblem(cfg.model.alpha, build_drift(cfg, grid), cfg.model.epsilon)
            traj = run_pme(state.n, problem, t.t_start, t.t_end, t.cfl_sigma, snapshot_interval=interval,
                           record_every=t.record_every)
        else:
            problems = params.check_assumptions(float(np.max(state.c.values)))
            if problems:
                return EXIT_INPUT, "model assumptions violated: " + "; ".join(problems)
            traj = run_system(state, params, t.t_end, t.cfl_sigma, snapshot_interval=interval,
                              record_every=t.record_every)
    except CFLError as exc:
        manifest.update(status="cfl_violation", error=str(exc), bound=exc.bound)
        write_json(out / "manifest.json", manifest)
        return EXIT_INVARIANT, str(exc)
    except InvariantError as exc:
        dump = out / "dumps" / "invariant_failure"
        dump.mkdir()
        _dump_state(dump, exc.state)
        manifest.update(status="invariant_failure", error=str(exc), dump=str(dump))
        write_json(out / "manifest.json", manifest)
        return EXIT_INVARIANT, f"invariant failure: {exc}; state dumped to {dump}"
    for i, s in enumerate(traj.snapshots):
        write_state_snapshots(out, i, s, cfg.model.system)
    write_series_csv(out / "series.csv", traj.series.times, traj.series.values)
    reports = _monitor_reports(cfg, traj)
    failed = [r["name"] for r in reports if r["verdict"] != "pass"]
    manifest.update(
        status="ok" if not failed else "monitor_failure",
        steps=traj.steps,
        final_time=float(traj.final.time),
        snapshots=len(traj.snapshots),
        wall_time=_time.perf_counter() - started,
        invariants={
            "n_nonnegative": bool(np.min(traj.series["n_max"]) >= 0),
            "mass_initial": float(traj.series["mass"][0]),
            "mass_final": float(traj.series["mass"][-1]),
        },
        monitors=reports,
    )
    write_json(out / "manifest.json", manifest)
    if failed:
        return EXIT_MONITOR, "monitor failure: " + ", ".join(failed)
    return EXIT_OK, f"ok: {traj.steps} steps, {len(traj.snapshots)} snapshots"


def _dump_state(dump: Path, state: SystemState) -> None:
    h = state.grid.spacing
    write_snapshot(dump / "n.kspm", "n", state.n.values, h, state.time)
    write_snapshot(dump / "c.kspm", "c", state.c.values, h, state.time)
    for name, a in zip(("u_x", "u_y", "u_z"), state.u.arrays()):
        write_snapshot(dump / f"{name}.kspm", name, a, h, state.time)


# ---------------------------------------------------------------- analysis


@dataclass
class AnalysisOptions:
    checks: tuple[str, ...] = ("entropy",)
    tol: float = 1e-2
    center: tuple[float, ...] | None = None
    rho0: float | None = None
    kappa_exp: float | None = None
    qhat1: float = 4.0


def _default_center(cfg: RunConfig, grid: Grid, t_final: float) -> tuple[float, ...]:
    spec = cfg.initial["n"]
    if spec["kind"] == "barenblatt":
        # nearest cell centre to the free boundary along the first axis
        R = barenblatt_radius(t_final, cfg.model.alpha, grid.dim, spec.get("mass", 1.0))
        xc = grid.centers_1d()
        return (float(xc[np.argmin(np.abs(xc - R))]),) + (float(xc[np.argmin(np.abs(xc))]),) * (grid.dim - 1)
    return (grid.origin + grid.length / 2,) * grid.dim


def analyze(run_dir, opts: AnalysisOptions) -> tuple[int, list[str]]:
    run = Path(run_dir)
    if not run.is_dir() or not (run / "config.toml").exists():
        return EXIT_INPUT, [f"{run}: not a run directory (config.toml missing)"]
    try:
        cfg = load_config(run / "config.toml")
        grid = cfg.grid.build()
        states = load_state_series(run, grid, cfg.model.system)
        times, cols = read_series_csv(run / "series.csv")
    except (SnapshotError, OSError, ValueError) as exc:
        return EXIT_INPUT, [str(exc)]
    params = model_params(cfg)
    if cfg.model.system == "pme":
        params = ModelParams(alpha=cfg.model.alpha, q=1.0, epsilon=cfg.model.epsilon, chi=(0.0,),
                             grad_phi=(0.0,) * grid.dim)
    traj = Trajectory(params, FunctionalSeries(times, cols), states, states[-1], 0)
    out = run / "analysis"
    out.mkdir(exist_ok=True)
    lines, failed = [], False
    for check in opts.checks:
        if check == "entropy":
            rep = check_entropy_dissipation(traj, params, opts.tol)
            write_json(out / "entropy.json", rep.to_dict())
            lines.append(rep.summary() + f" residual={rep.extra['residual']:.6g}")
            failed |= not rep.passed
        elif check in ("lyapunov1", "lyapunov2"):
            fn = lyapunov_weak1 if check == "lyapunov1" else lyapunov_weak2
            try:
                ly = fn(traj, params)
            except ValueError as exc:
                lines.append(f"{check}: fail ({exc})")
                failed = True
                continue
            ok = bool(np.all(np.isfinite(ly.combined)))
            write_rows_csv(out / f"{check}.csv", [
                {"time": float(t), "bracket": float(b), "dissipation": float(d), "combined": float(c)}
                for t, b, d, c in zip(traj.times, ly.bracket, ly.dissipation, ly.combined)
            ])
            lines.append(f"{check}: {'pass' if ok else 'fail'} (terminal {ly.terminal:.6g})")
            failed |= not ok
        elif check == "holder":
            if len(states) < 2:
                lines.append("holder: fail (needs at least two snapshots)")
                failed = True
                continue
            s = SpaceTimeSeries([st.time for st in states], [st.n for st in states])
            center = opts.center or _default_center(cfg, grid, states[-1].time)
            rho0 = opts.rho0 or 8 * grid.spacing
            fit = fit_holder(s, center, states[-1].time, rho0, cfg.model.alpha)
            (out / "holder.txt").write_text(fit.report() + "\n")
            write_rows_csv(out / "holder_evidence.csv",
                           [{"i": i, "rho": r, "omega": w, "osc": o} for i, r, w, o in fit.evidence])
            ok = fit.beta > 0
            lines.append(f"holder: {'pass' if ok else 'fail'} beta={fit.beta:.6g} gamma={fit.gamma:.6g} ({fit.verdict})")
            failed |= not ok
        elif check == "drift":
            kappa = opts.kappa_exp if opts.kappa_exp is not None else 1.0 / grid.dim
            exps = drift_exponents(grid.dim, kappa, opts.qhat1)
            fields = [_coupled_drift(st, params) for st in states]
            if len(fields) < 2:
                lines.append("drift: fail (needs at least two snapshots)")
                failed = True
                continue
            rep = drift_norm_check([st.time for st in states], fields, exps)
            write_json(out / "drift.json", {"b_norm": rep.b_norm, "grad_b_norm": rep.grad_b_norm,
                                            "qhat1": exps.qhat1, "qhat2": exps.qhat2, "kappa_exp": exps.kappa_exp})
            ok = math.isfinite(rep.b_norm) and math.isfinite(rep.grad_b_norm)
            lines.append(f"drift: {'pass' if ok else 'fail'} |B|={rep.b_norm:.6g} |grad B|={rep.grad_b_norm:.6g}")
            failed |= not ok
        else:
            return EXIT_INPUT, [f"unknown check {check!r}"]
    return (EXIT_MONITOR if failed else EXIT_OK), lines


def _coupled_drift(state: SystemState, params: ModelParams) -> VectorField:
    """B = u + χ(c)∇c for the coupled system (zero field for scalar runs)."""
    grid = state.grid
    h = grid.spacing
    c = state.c.values
    chi = params.chi_of(c)
    arrs = [u + chi * centered_diff(c, j, h) for j, u in enumerate(state.u.arrays())]
    return VectorField.from_arrays(grid, arrs)
