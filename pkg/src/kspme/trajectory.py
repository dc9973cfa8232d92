"""Run drivers that step a solver and record functionals along the way."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .field import ScalarField, SpaceTimeSeries, VectorField
from .ledger import FunctionalSeries, functionals
from .pme import DEFAULT_SIGMA, ScalarPmeProblem, cfl_bound, step_scalar_pme
from .system import ModelParams, SystemState, step_system, system_cfl


@dataclass
class Trajectory:
    """Recorded run: functional series at every record time plus sparse full snapshots."""

    params: ModelParams
    series: FunctionalSeries
    snapshots: list[SystemState] = field(default_factory=list)
    final: SystemState | None = None
    steps: int = 0

    @property
    def times(self) -> np.ndarray:
        return self.series.times

    def density_series(self) -> SpaceTimeSeries:
        return SpaceTimeSeries([s.time for s in self.snapshots], [s.n for s in self.snapshots])


def _stops(t0: float, t_end: float, interval: float | None) -> list[float]:
    if interval is None or interval <= 0:
        return [float(t_end)]
    m = int(np.floor((t_end - t0) / interval + 1e-9))
    pts = [t0 + i * interval for i in range(1, m + 1)]
    if not pts or t_end - pts[-1] > 1e-12 * max(1.0, abs(t_end)):
        pts.append(float(t_end))
    else:
        pts[-1] = float(t_end)
    return pts


def _march(state, t_end, stepper, bound, snapshot_interval, record_every, record, snapshot, callback, dt):
    t0 = state.time
    snaps = set(_stops(t0, t_end, snapshot_interval)) if snapshot_interval else set()
    steps = 0
    for goal in _stops(t0, t_end, snapshot_interval):
        while goal - state.time > 1e-13 * max(1.0, abs(goal)):
            step = dt if dt is not None else bound(state)
            if state.time + step >= goal - 1e-12 * max(1.0, abs(goal)):
                step = goal - state.time
                state = stepper(state, step)
                state = SystemState(state.n, state.c, state.u, goal)
            else:
                state = stepper(state, step)
            steps += 1
            at_goal = state.time == goal
            if steps % record_every == 0 or at_goal:
                record(state)
            if callback is not None:
                callback(state)
        if goal in snaps:
            snapshot(state)
    return state, steps


def run_system(
    state: SystemState,
    params: ModelParams,
    t_end: float,
    sigma: float = DEFAULT_SIGMA,
    dt: float | None = None,
    snapshot_interval: float | None = None,
    record_every: int = 1,
    powers: Sequence[float] = (),
    callback: Callable[[SystemState], None] | None = None,
) -> Trajectory:
    """Coupled run to ``t_end``. Oxygen is capped by its initial maximum throughout."""
    c_cap = float(np.max(state.c.values))
    times, rows, snaps = [], [], [state]

    def record(s: SystemState) -> None:
        times.append(s.time)
        rows.append(functionals(s.n, params, s.c, s.u, powers))

    record(state)
    final, steps = _march(
        state,
        t_end,
        lambda s, k: step_system(s, params, k, c_cap),
        lambda s: system_cfl(s, params, sigma),
        snapshot_interval,
        record_every,
        record,
        snaps.append,
        callback,
        dt,
    )
    return Trajectory(params, FunctionalSeries.from_rows(times, rows), snaps, final, steps)


def run_pme(
    n0: ScalarField,
    problem: ScalarPmeProblem,
    t0: float,
    t_end: float,
    sigma: float = DEFAULT_SIGMA,
    dt: float | None = None,
    snapshot_interval: float | None = None,
    record_every: int = 1,
    powers: Sequence[float] = (),
    callback: Callable[[SystemState], None] | None = None,
) -> Trajectory:
    """Scalar porous-medium run recorded as a trajectory with c ≡ 0 and u ≡ 0."""
    grid = n0.grid
    params = ModelParams(alpha=problem.alpha, q=1.0, epsilon=problem.epsilon, chi=(0.0,), grad_phi=(0.0,) * grid.dim)
    zero_c = ScalarField.constant(grid, 0.0)
    zero_u = VectorField.zeros(grid)
    times, rows, snaps = [], [], [SystemState(n0, zero_c, zero_u, t0)]

    def record(s: SystemState) -> None:
        times.append(s.time)
        rows.append(functionals(s.n, params, powers=powers))

    def stepper(s: SystemState, k: float) -> SystemState:
        return SystemState(step_scalar_pme(s.n, problem, k, s.time), zero_c, zero_u, s.time + k)

    record(snaps[0])
    final, steps = _march(
        snaps[0],
        t_end,
        stepper,
        lambda s: cfl_bound(s.n, problem, s.time, sigma),
        snapshot_interval,
        record_every,
        record,
        snaps.append,
        callback,
        dt,
    )
    return Trajectory(params, FunctionalSeries.from_rows(times, rows), snaps, final, steps)
