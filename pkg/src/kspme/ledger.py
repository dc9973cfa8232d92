"""A-priori functionals along trajectories and discrete checks of the energy inequalities."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .field import (
    Box,
    Grid,
    ScalarField,
    SpaceTimeSeries,
    VectorField,
    box_axes,
    centered_diff,
    essosc_box,
    face_average,
    forward_diff,
    laplacian_array,
    time_indices,
    trapezoid_weights,
)
from .system import ModelParams, vorticity

# Column order of FunctionalSeries CSVs; ``n_pow_p<p>`` columns for configured powers follow.
COLUMNS = (
    "mass",
    "n_max",
    "entropy",
    "n_abs_log_n",
    "n_pow_weak1",
    "n_pow_weak2",
    "dissipation_pme",
    "grad_n_weak1",
    "grad_n_weak2",
    "chemotaxis_production",
    "grad_c2",
    "lap_c2",
    "c_min",
    "c_max",
    "u2",
    "grad_u2",
    "vorticity2",
    "u_l6",
    "n_grad_c2",
)


@dataclass
class FunctionalSeries:
    times: np.ndarray
    values: dict[str, np.ndarray]

    def __getitem__(self, key: str) -> np.ndarray:
        return self.values[key]

    def __len__(self) -> int:
        return len(self.times)

    @property
    def columns(self) -> list[str]:
        return list(self.values)

    @classmethod
    def from_rows(cls, times: Sequence[float], rows: Sequence[dict[str, float]]) -> "FunctionalSeries":
        keys = list(rows[0]) if rows else list(COLUMNS)
        return cls(np.asarray(times, float), {k: np.array([r[k] for r in rows], float) for k in keys})


def _pos_power(n: np.ndarray, p: float) -> np.ndarray:
    if p <= 0:
        return np.full_like(n, np.nan)
    return np.where(n > 0, np.abs(n) ** p, 0.0)


def _grad_sq(a: np.ndarray, h: float) -> float:
    """Σ over faces of |D⁺a|², times the cell volume: a nonnegative sum of squares."""
    return float(sum(np.sum(forward_diff(a, j, h) ** 2) for j in range(a.ndim)) * h**a.ndim)


def entropy(n: ScalarField) -> float:
    v = n.values
    if np.min(v) < 0:
        i = tuple(int(x) for x in np.unravel_index(np.argmin(v), v.shape))
        raise ValueError(f"entropy of a negative density: n = {v[i]!r} at cell {i}")
    safe = np.where(v > 0, v, 1.0)
    return float(np.sum(v * np.log(safe)) * n.grid.cell_volume)


def functionals(
    n: ScalarField,
    params: ModelParams,
    c: ScalarField | None = None,
    u: VectorField | None = None,
    powers: Sequence[float] = (),
) -> dict[str, float]:
    """Every tracked functional of one state; a missing c or u contributes zeros."""
    grid = n.grid
    h = grid.spacing
    vol = grid.cell_volume
    nv = n.values
    a, q = params.alpha, params.q
    safe = np.where(nv > 0, nv, 1.0)
    log_n = np.log(safe)
    cache: dict[float, float] = {}

    def grad_pow(p: float) -> float:
        if p not in cache:
            cache[p] = _grad_sq(_pos_power(nv, p), h)
        return cache[p]

    out = {
        "mass": float(np.sum(nv) * vol),
        "n_max": float(np.max(nv)),
        "entropy": entropy(n),
        "n_abs_log_n": float(np.sum(nv * np.abs(log_n)) * vol),
        "n_pow_weak1": float(np.sum(_pos_power(nv, a - q + 2)) * vol),
        "n_pow_weak2": float(np.sum(_pos_power(nv, a - 2 * q + 3)) * vol),
        "dissipation_pme": grad_pow((1 + a) / 2),
        "grad_n_weak1": grad_pow((2 * a - q + 2) / 2),
        "grad_n_weak2": grad_pow((2 * a - 2 * q + 3) / 2),
    }
    for key in ("chemotaxis_production", "grad_c2", "lap_c2", "c_min", "c_max", "n_grad_c2"):
        out[key] = 0.0
    if c is not None:
        cv = c.values
        nq = _pos_power(nv, q)
        prod = 0.0
        ngc = 0.0
        for j in range(grid.dim):
            dc = forward_diff(cv, j, h)
            prod += float(np.sum(forward_diff(nq, j, h) * params.chi_of(face_average(cv, j)) * dc))
            ngc += float(np.sum(face_average(nv, j) * dc * dc))
        out["chemotaxis_production"] = prod * vol / q
        out["grad_c2"] = _grad_sq(cv, h)
        out["lap_c2"] = float(np.sum(laplacian_array(cv, h) ** 2) * vol)
        out["c_min"] = float(np.min(cv))
        out["c_max"] = float(np.max(cv))
        out["n_grad_c2"] = ngc * vol
    for key in ("u2", "grad_u2", "vorticity2", "u_l6"):
        out[key] = 0.0
    if u is not None:
        ua = u.arrays()
        out["u2"] = float(sum(np.sum(x * x) for x in ua) * vol)
        out["grad_u2"] = float(sum(_grad_sq(x, h) for x in ua))
        w = vorticity(u)
        w_arrays = [w.values] if isinstance(w, ScalarField) else w.arrays()
        out["vorticity2"] = float(sum(np.sum(x * x) for x in w_arrays) * vol)
        speed2 = sum(x * x for x in ua)
        out["u_l6"] = float((np.sum(speed2**3) * vol) ** (1 / 6))
    out = {k: out[k] for k in COLUMNS}
    for p in powers:
        out[f"n_pow_p{p:g}"] = float(np.sum(_pos_power(nv, p)) * vol)
    return out


# ---------------------------------------------------------------- reports

@dataclass
class InequalityReport:
    """Discrete check of ``lhs <= rhs``; pass iff the minimum slack is at least ``-tolerance``."""

    name: str
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    tolerance: float
    terms: dict[str, float] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def slack(self) -> np.ndarray:
        return np.asarray(self.rhs) - np.asarray(self.lhs)

    @property
    def min_slack(self) -> float:
        return float(np.min(self.slack))

    @property
    def passed(self) -> bool:
        return self.min_slack >= -self.tolerance

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    @property
    def worst_time(self) -> float:
        return float(self.times[int(np.argmin(self.slack))])

    def summary(self) -> str:
        return (
            f"{self.name}: {self.verdict} (min slack {self.min_slack:.6g} at t={self.worst_time:.6g}, "
            f"tolerance {self.tolerance:.3g})"
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "min_slack": self.min_slack,
            "worst_time": self.worst_time,
            "times": [float(t) for t in self.times],
            "lhs": [float(v) for v in self.lhs],
            "rhs": [float(v) for v in self.rhs],
            "terms": {k: float(v) for k, v in self.terms.items()},
            "extra": {k: (float(v) if isinstance(v, (int, float, np.floating)) else v) for k, v in self.extra.items()},
        }


def check_entropy_dissipation(traj, params: ModelParams, tol: float = 1e-2) -> InequalityReport:
    """Interval-wise discrete entropy balance.

    On each recorded interval: ``lhs = ΔS/Δt + trapz(4/(1+α)||∇n^{(1+α)/2}||²)``
    and ``rhs = trapz(J)`` with J the chemotactic production. ``tol`` is
    relative to the largest dissipation value. ``extra['residual']`` is the
    time-integrated absolute mismatch divided by the integrated dissipation.
    """
    series = traj.series
    t = np.asarray(series.times, float)
    if len(t) < 3:
        raise ValueError("entropy check needs at least three recorded times")
    if np.any(np.diff(t) <= 0):
        raise ValueError("recorded times are not strictly increasing")
    S = series["entropy"]
    D = 4.0 / (1.0 + params.alpha) * series["dissipation_pme"]
    J = series["chemotaxis_production"]
    dt = np.diff(t)
    D_mid = 0.5 * (D[1:] + D[:-1])
    lhs = np.diff(S) / dt + D_mid
    rhs = 0.5 * (J[1:] + J[:-1])
    scale = float(np.max(np.abs(D))) or 1.0
    diss_int = float(np.sum(D_mid * dt))
    resid = float(np.sum(np.abs(lhs - rhs) * dt)) / (diss_int if diss_int > 0 else 1.0)
    return InequalityReport(
        name="entropy_dissipation",
        times=t[1:],
        lhs=lhs,
        rhs=rhs,
        tolerance=tol * scale,
        terms={
            "entropy_change": float(S[-1] - S[0]),
            "dissipation_integral": diss_int,
            "production_integral": float(np.sum(rhs * dt)),
        },
        extra={"residual": resid},
    )


@dataclass
class LyapunovSeries:
    series: FunctionalSeries
    bracket: np.ndarray
    dissipation: np.ndarray
    combined: np.ndarray

    @property
    def terminal(self) -> float:
        return float(self.combined[-1])


def _cumtrapz(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y, dtype=float)
    if len(t) > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def lyapunov_weak1(traj, params: ModelParams) -> LyapunovSeries:
    """Running sup of the bracketed energy plus cumulative dissipation (moment term dropped)."""
    a, q = params.alpha, params.q
    if not a > (9 * q - 8) / 6:
        warnings.warn(f"alpha={a} is outside the weak-1 regime alpha > (9q-8)/6 = {(9 * q - 8) / 6:.4g}")
    s = traj.series
    bracket = s["n_abs_log_n"] + s["n_pow_weak1"] + s["grad_c2"] + s["u2"]
    rate = s["dissipation_pme"] + s["grad_n_weak1"] + s["lap_c2"] + s["grad_u2"]
    diss = _cumtrapz(s.times, rate)
    return LyapunovSeries(s, bracket, diss, np.maximum.accumulate(bracket) + diss)


def lyapunov_weak2(traj, params: ModelParams) -> LyapunovSeries:
    """As :func:`lyapunov_weak1` with the (P2) exponents and the extra ∫ n|∇c|² dissipation."""
    if not params.p2:
        raise ValueError("lyapunov_weak2 requires the (P2) assumption (kappa' >= kappa0 > 0)")
    a, q = params.alpha, params.q
    thr = min(2 * q - 2, (9 * q - 8) / 6)
    if not a > thr:
        warnings.warn(f"alpha={a} is outside the weak-2 regime alpha > {thr:.4g}")
    s = traj.series
    bracket = s["n_abs_log_n"] + s["n_pow_weak2"] + s["grad_c2"] + s["u2"]
    rate = s["dissipation_pme"] + s["grad_n_weak2"] + s["lap_c2"] + s["grad_u2"] + s["n_grad_c2"]
    diss = _cumtrapz(s.times, rate)
    return LyapunovSeries(s, bracket, diss, np.maximum.accumulate(bracket) + diss)


# ---------------------------------------------------------------- local energy monitors

@dataclass(frozen=True)
class Cutoff:
    """Piecewise-linear cutoff on a space-time box.

    ζ = Π_j r_j(x_j) · s(t) where r_j ramps linearly from 0 on the box faces
    to 1 at distance ``ramp`` inside, and s ramps from 0 at ``box.t_lo`` to 1
    after ``t_ramp`` (``t_ramp = 0``: time independent).
    """

    box: Box
    ramp: float
    t_ramp: float = 0.0

    def check(self, time_dependent: bool) -> None:
        if not self.ramp > 0:
            raise ValueError("cutoff ramp must be positive")
        for lo, hi in zip(self.box.lo, self.box.hi):
            if 2 * self.ramp > hi - lo + 1e-12:
                raise ValueError(f"cutoff ramp {self.ramp} too wide for box side {hi - lo}")
        if not (math.isfinite(self.box.t_lo) and math.isfinite(self.box.t_hi)):
            raise ValueError("cutoff box needs a finite time window")
        if time_dependent:
            if not self.t_ramp > 0:
                raise ValueError("cutoff must vanish at the initial time: t_ramp > 0 required")
            if self.t_ramp > self.box.t_hi - self.box.t_lo + 1e-12:
                raise ValueError("t_ramp longer than the time window")
        elif self.t_ramp != 0:
            raise ValueError("logarithmic estimate needs a time-independent cutoff (t_ramp = 0)")

    def spatial(self, coords: Sequence[np.ndarray]) -> tuple[np.ndarray, list[np.ndarray]]:
        """ζ_x and ∇ζ_x on the tensor grid spanned by the 1-d ``coords``."""
        r, dr = [], []
        for x, lo, hi in zip(coords, self.box.lo, self.box.hi):
            dist_lo = x - lo
            dist_hi = hi - x
            val = np.clip(np.minimum(dist_lo, dist_hi) / self.ramp, 0.0, 1.0)
            ramp_zone = (val > 0) & (val < 1)
            slope = np.where(dist_lo <= dist_hi, 1.0, -1.0) / self.ramp
            r.append(val)
            dr.append(np.where(ramp_zone, slope, 0.0))
        grids = np.meshgrid(*r, indexing="ij")
        dgrids = np.meshgrid(*dr, indexing="ij")
        zeta = np.prod(grids, axis=0)
        grad = []
        for j in range(len(coords)):
            g = dgrids[j].copy()
            for i in range(len(coords)):
                if i != j:
                    g = g * grids[i]
            grad.append(g)
        return zeta, grad

    def temporal(self, t: float) -> tuple[float, float]:
        if self.t_ramp == 0:
            return 1.0, 0.0
        s = (t - self.box.t_lo) / self.t_ramp
        if s <= 0:
            return 0.0, 0.0
        if s >= 1:
            return 1.0, 0.0
        return s, 1.0 / self.t_ramp


def truncation(n: np.ndarray, mu: float, k: float, sign: str) -> np.ndarray:
    """(n − μ₊ + k)₊ for ``plus``, (n − μ₋ − k)₋ = (μ₋ + k − n)₊ for ``minus``."""
    if sign == "plus":
        return np.maximum(n - mu + k, 0.0)
    if sign == "minus":
        return np.maximum(mu + k - n, 0.0)
    raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")


def psi(v: np.ndarray, k: float, delta: float) -> np.ndarray:
    """ln⁺[k / ((1+δ)k − v)] for truncation values ``v`` in [0, k]."""
    denom = (1 + delta) * k - np.asarray(v, float)
    if np.any(denom <= 0):
        raise ValueError("Psi argument not positive: truncation exceeds (1+delta) k")
    return np.maximum(np.log(k / denom), 0.0)


def psi_prime(v: np.ndarray, k: float, delta: float) -> np.ndarray:
    v = np.asarray(v, float)
    denom = (1 + delta) * k - v
    return np.where(v > delta * k, 1.0 / denom, 0.0)


def _face_sum(w: np.ndarray, a: np.ndarray, h: float) -> float:
    """Σ over interior faces of avg(w)·|Da|², open (non-periodic) box differences."""
    total = 0.0
    for j in range(a.ndim):
        da = np.diff(a, axis=j) / h
        wf = 0.5 * (np.take(w, range(0, a.shape[j] - 1), axis=j) + np.take(w, range(1, a.shape[j]), axis=j))
        total += float(np.sum(wf * da * da))
    return total


@dataclass
class _CylinderData:
    times: np.ndarray
    n: list[np.ndarray]
    grad_n_full: list
    idx: tuple
    coords: list[np.ndarray]
    mu_plus: float
    mu_minus: float


def _drift_list(drift, times: np.ndarray, grid: Grid) -> list[VectorField | None]:
    if drift is None or isinstance(drift, VectorField):
        return [drift] * len(times)
    if callable(drift):
        return [drift(float(t)) for t in times]
    return list(drift)


def _drift_blocks(drift_fields, idx, grid: Grid, times: np.ndarray, exps, level_sets: list[float]):
    """Prefix-integrated drift factors for every end time of the cylinder.

    Returns arrays ``b2[m] = ||B||²_{2q̂1,2q̂2}``, ``gb[m] = ||∇B||_{q̂1,q̂2}`` and
    ``A[m] = [∫ |A(t)|^{q2/q1} dt]^{2(1+κ)/q2}``, each over ``[t_0, t_m]``.
    """
    h = grid.spacing
    vol = grid.cell_volume
    p1, p2 = 2 * exps.qhat1, 2 * exps.qhat2
    r1, r2 = exps.qhat1, exps.qhat2
    b_inner, g_inner = [], []
    sl = np.ix_(*idx)
    for B in drift_fields:
        if B is None:
            b_inner.append(0.0)
            g_inner.append(0.0)
            continue
        arrs = B.arrays()
        mag = np.sqrt(sum(a[sl] ** 2 for a in arrs))
        gsq = sum(centered_diff(a, j, h)[sl] ** 2 for a in arrs for j in range(grid.dim))
        b_inner.append(float((np.sum(mag**p1) * vol) ** (1 / p1)))
        g_inner.append(float((np.sum(np.sqrt(gsq) ** r1) * vol) ** (1 / r1)))
    b_inner = np.array(b_inner)
    g_inner = np.array(g_inner)
    lev = np.array(level_sets) ** (exps.q2 / exps.q1)
    b2 = _cumtrapz(times, b_inner**p2) ** (2 / p2)
    gb = _cumtrapz(times, g_inner**r2) ** (1 / r2)
    A = _cumtrapz(times, lev) ** (2 * (1 + exps.kappa_exp) / exps.q2)
    return b2, gb, A


def _cylinder(s: SpaceTimeSeries, cylinder: Box):
    grid = s.grid
    ti = time_indices(s.times, cylinder)
    if ti.size < 2:
        raise ValueError("cylinder time window must contain at least two snapshots")
    for lo, hi in zip(cylinder.lo, cylinder.hi):
        if hi - lo > grid.length:
            raise ValueError(f"cylinder side {hi - lo} exceeds the domain length {grid.length}")
    idx, coords = box_axes(grid, cylinder)
    omega, mu_p, mu_m = essosc_box(s, cylinder)
    return ti, idx, coords, mu_p, mu_m


def check_local_energy_estimate(
    s: SpaceTimeSeries,
    drift,
    alpha: float,
    k: float,
    sign: str,
    cylinder: Box,
    cutoff: Cutoff,
    exps,
    mu: float | None = None,
    tol: float = 1e-2,
) -> InequalityReport:
    """Evaluate both sides of the local energy estimate for every end time in the cylinder.

    ``mu`` defaults to the sup (plus) or inf (minus) of the data over the
    cylinder. ``tol`` is relative to the largest term.
    """
    if not k > 0:
        raise ValueError("k must be positive")
    cutoff.check(time_dependent=True)
    grid = s.grid
    h = grid.spacing
    vol = grid.cell_volume
    ti, idx, coords, mu_p, mu_m = _cylinder(s, cylinder)
    if mu is None:
        mu = mu_p if sign == "plus" else mu_m
    times = s.times[ti]
    zeta_x, grad_x = cutoff.spatial(coords)
    grad2 = sum(g * g for g in grad_x)
    sl = np.ix_(*idx)
    E, diss, t_term, g_term, lev = [], [], [], [], []
    for i in ti:
        n = s.fields[i].values[sl]
        v = truncation(n, mu, k, sign)
        zt, zt_dot = cutoff.temporal(float(s.times[i]))
        zeta = zeta_x * zt
        na = n**alpha if alpha > 0 else np.ones_like(n)
        E.append(float(np.sum(v * v * zeta * zeta)) * vol)
        diss.append((1 + alpha) * _face_sum(na * zeta * zeta, v, h) * vol)
        t_term.append(2 * float(np.sum(v * v * zeta * zeta_x * zt_dot)) * vol)
        g_term.append(16 * (1 + alpha) * float(np.sum((na + k**alpha) * v * v * grad2 * zt * zt)) * vol)
        lev.append(float(np.count_nonzero(v > 0)) * vol)
    E = np.array(E)
    diss_c = _cumtrapz(times, np.array(diss))
    t_c = _cumtrapz(times, np.array(t_term))
    g_c = _cumtrapz(times, np.array(g_term))
    b2, gb, A = _drift_blocks(_drift_list(drift, s.times[ti], grid), idx, grid, times, exps, lev)
    drift_c = (k ** (2 - alpha) * b2 + k**2 * gb) * A
    lhs = np.maximum.accumulate(E) + diss_c
    rhs = E[0] + t_c + g_c + drift_c
    terms = {
        "sup_energy": float(np.max(E)),
        "dissipation": float(diss_c[-1]),
        "initial_energy": float(E[0]),
        "cutoff_time_term": float(t_c[-1]),
        "cutoff_gradient_term": float(g_c[-1]),
        "drift_term": float(drift_c[-1]),
    }
    dominant = max(abs(v) for v in terms.values()) or 1.0
    return InequalityReport(
        name=f"local_energy[{sign}]",
        times=times[1:],
        lhs=lhs[1:],
        rhs=rhs[1:],
        tolerance=tol * dominant,
        terms=terms,
        extra={"mu": mu, "k": k, "dominant": dominant},
    )


def check_log_energy_estimate(
    s: SpaceTimeSeries,
    drift,
    alpha: float,
    k: float,
    delta: float,
    sign: str,
    cylinder: Box,
    cutoff: Cutoff,
    exps,
    mu: float | None = None,
    tol: float = 1e-2,
) -> InequalityReport:
    """Evaluate both sides of the logarithmic energy estimate, plus pointwise Ψ bounds.

    ``extra`` records the sub-assertions Ψ ≤ ln(1/δ), |Ψ′| ≤ 1/(δk) and
    Ψ ≥ ln(1/(2δ)) on {truncation > (1−δ)k}.
    """
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not k > 0:
        raise ValueError("k must be positive")
    cutoff.check(time_dependent=False)
    grid = s.grid
    h = grid.spacing
    vol = grid.cell_volume
    ti, idx, coords, mu_p, mu_m = _cylinder(s, cylinder)
    if mu is None:
        mu = mu_p if sign == "plus" else mu_m
    times = s.times[ti]
    zeta, grad_x = cutoff.spatial(coords)
    grad2 = sum(g * g for g in grad_x)
    sl = np.ix_(*idx)
    log_d = math.log(1 / delta)
    psi_max_ok = psi_prime_ok = psi_low_ok = True
    top, diss, g_term, lev = [], [], [], []
    for i in ti:
        n = s.fields[i].values[sl]
        v = truncation(n, mu, k, sign)
        ps = psi(v, k, delta)
        pp = psi_prime(v, k, delta)
        psi_max_ok &= bool(np.all(ps <= log_d + 1e-12))
        psi_prime_ok &= bool(np.all(pp <= 1 / (delta * k) * (1 + 1e-12)))
        hi_zone = v > (1 - delta) * k
        psi_low_ok &= bool(np.all(ps[hi_zone] >= math.log(1 / (2 * delta)) - 1e-12))
        na = n**alpha if alpha > 0 else np.ones_like(n)
        top.append(float(np.sum(ps * ps * zeta * zeta)) * vol)
        diss.append(2 * (1 + alpha) * _face_sum(na * ps * zeta * zeta, ps, h) * vol)
        g_term.append(16 * (1 + alpha) * float(np.sum((na + k**alpha) * ps * ps * grad2)) * vol)
        lev.append(float(np.count_nonzero(v > 0)) * vol)
    top = np.array(top)
    diss_c = _cumtrapz(times, np.array(diss))
    g_c = _cumtrapz(times, np.array(g_term))
    b2, gb, A = _drift_blocks(_drift_list(drift, s.times[ti], grid), idx, grid, times, exps, lev)
    drift_c = 2 * k ** (-alpha) * log_d**2 * b2 * A + (log_d**2 + mu_p * log_d / (delta * k)) * gb * A
    lhs = top + diss_c
    rhs = top[0] + g_c + drift_c
    terms = {
        "final_log_energy": float(top[-1]),
        "dissipation": float(diss_c[-1]),
        "initial_log_energy": float(top[0]),
        "cutoff_gradient_term": float(g_c[-1]),
        "drift_term": float(drift_c[-1]),
    }
    dominant = max(abs(v) for v in terms.values()) or 1.0
    return InequalityReport(
        name=f"log_energy[{sign}]",
        times=times[1:],
        lhs=lhs[1:],
        rhs=rhs[1:],
        tolerance=tol * dominant,
        terms=terms,
        extra={
            "mu": mu,
            "k": k,
            "delta": delta,
            "dominant": dominant,
            "psi_le_log_inv_delta": psi_max_ok,
            "psi_prime_le_inv_delta_k": psi_prime_ok,
            "psi_ge_log_inv_2delta_on_top": psi_low_ok,
        },
    )
