"""Explicit conservative solver for n_t = Δ n^{1+α} + ∇·(B n) and its oracles."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import gammaln

from .field import (
    Box,
    Grid,
    ScalarField,
    SpaceTimeSeries,
    VectorField,
    box_indices,
    centered_diff,
    face_average,
    face_divergence,
    forward_diff,
    laplacian_array,
)

DEFAULT_SIGMA = 0.4

Drift = Union[None, VectorField, Callable[[float], VectorField]]


class CFLError(ValueError):
    """Raised when a step is requested with a time step above the stability limit."""

    def __init__(self, dt: float, limit: float, bound: str):
        self.dt = dt
        self.limit = limit
        self.bound = bound
        super().__init__(f"CFL violated ({bound}): dt={dt:.6g} exceeds stability limit {limit:.6g}")


@dataclass
class ScalarPmeProblem:
    alpha: float
    drift: Drift = None
    epsilon: float = 0.0
    initial: ScalarField | None = None

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.initial is not None and np.min(self.initial.values) < 0:
            raise ValueError("initial data must be nonnegative")

    def drift_at(self, t: float) -> VectorField | None:
        if self.drift is None or isinstance(self.drift, VectorField):
            return self.drift
        return self.drift(t)


# ---------------------------------------------------------------- discrete operators

def diffusion_potential(n: np.ndarray, alpha: float, eps: float) -> np.ndarray:
    """m = (n+ε)^{1+α} − ε^{1+α}; vanishes where n = 0 so the diffusion flux degenerates."""
    return (n + eps) ** (1.0 + alpha) - eps ** (1.0 + alpha)


def upwind_fluxes(n: np.ndarray, face_velocity: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Face fluxes v·n with n taken from the upwind cell on each face ``i+1/2``."""
    out = []
    for j, v in enumerate(face_velocity):
        right = np.roll(n, -1, j)
        out.append(np.where(v > 0, v * n, v * right))
    return out


def drift_face_velocity(B: VectorField | None, grid: Grid) -> list[np.ndarray]:
    """Transport velocity −B averaged to faces (the drift term is +∇·(B n))."""
    if B is None:
        return [np.zeros(grid.shape) for _ in range(grid.dim)]
    return [-face_average(a, j) for j, a in enumerate(B.arrays())]


def diffusion_rate(n_max: float, alpha: float, eps: float, grid: Grid) -> float:
    """Largest fraction of a cell's content the diffusion stencil can remove per unit time."""
    return 2 * grid.dim * (1 + alpha) * (n_max + eps) ** alpha / grid.spacing**2


def advection_rate(speed_max: float, grid: Grid) -> float:
    return 2 * grid.dim * speed_max / grid.spacing


def cfl_bound(state: ScalarField, problem: ScalarPmeProblem, t: float = 0.0, sigma: float = DEFAULT_SIGMA) -> float:
    """σ times the positivity-preserving step limit for the current state.

    For σ <= 1 the update is a nonnegative combination of old cell values, so
    nonnegativity and exact mass conservation both hold.
    """
    grid = state.grid
    rate = diffusion_rate(float(np.max(state.values)), problem.alpha, problem.epsilon, grid)
    B = problem.drift_at(t)
    if B is not None:
        rate += advection_rate(max(float(np.max(np.abs(a))) for a in B.arrays()), grid)
    return math.inf if rate == 0 else sigma / rate


def pme_increment(n: np.ndarray, alpha: float, eps: float, h: float, fluxes: Sequence[np.ndarray]) -> np.ndarray:
    return laplacian_array(diffusion_potential(n, alpha, eps), h) - face_divergence(fluxes, h)


def step_scalar_pme(state: ScalarField, problem: ScalarPmeProblem, dt: float, t: float = 0.0) -> ScalarField:
    """One forward-Euler step of the conservative scheme.

    Refuses steps above the σ = 1 stability limit; drivers normally pick
    ``dt = cfl_bound(state, problem)`` with σ = 0.4.
    """
    n = state.values
    if np.min(n) < 0:
        i = tuple(int(v) for v in np.unravel_index(np.argmin(n), n.shape))
        raise ValueError(f"negative density {n[i]!r} at cell {i}")
    limit = cfl_bound(state, problem, t, sigma=1.0)
    if dt > limit:
        raise CFLError(dt, limit, "diffusion+drift positivity")
    grid = state.grid
    fluxes = upwind_fluxes(n, drift_face_velocity(problem.drift_at(t), grid))
    new = n + dt * pme_increment(n, problem.alpha, problem.epsilon, grid.spacing, fluxes)
    return ScalarField(grid, new)


def evolve_scalar_pme(
    state: ScalarField,
    problem: ScalarPmeProblem,
    t0: float,
    t_end: float,
    sigma: float = DEFAULT_SIGMA,
    dt: float | None = None,
    snapshot_times: Sequence[float] = (),
    callback=None,
):
    """March from ``t0`` to ``t_end``; returns the final field and ``(t, field)`` snapshots.

    With ``dt=None`` each step uses ``cfl_bound``; a fixed ``dt`` is shortened
    only to land exactly on snapshot times and ``t_end``.
    """
    snap_set = sorted(float(s) for s in snapshot_times if t0 <= s <= t_end)
    stops = sorted(set(snap_set) | {float(t_end)})
    snaps: list[tuple[float, ScalarField]] = []
    t = float(t0)
    for goal in stops:
        while goal - t > 1e-13 * max(1.0, abs(goal)):
            step = dt if dt is not None else cfl_bound(state, problem, t, sigma)
            last = t + step >= goal - 1e-12 * max(1.0, abs(goal))
            if last:
                step = goal - t
            state = step_scalar_pme(state, problem, step, t)
            t = goal if last else t + step
            if callback is not None:
                callback(t, state)
        if goal in snap_set:
            snaps.append((t, state))
    return state, snaps


# ---------------------------------------------------------------- Barenblatt oracle

def barenblatt_constants(alpha: float, dim: int, mass: float) -> tuple[float, float, float]:
    """Return ``(beta, k, C)`` of the source-type profile with the given mass."""
    if not alpha > 0:
        raise ValueError("barenblatt needs alpha > 0")
    beta = 1.0 / (dim * alpha + 2.0)
    k = alpha * beta / (2.0 * (1.0 + alpha))
    # mass = C^{1/α + d/2} k^{-d/2} π^{d/2} Γ(1/α + 1) / Γ(1/α + 1 + d/2)
    log_unit = 0.5 * dim * math.log(math.pi / k) + gammaln(1 / alpha + 1) - gammaln(1 / alpha + 1 + dim / 2)
    C = math.exp((math.log(mass) - log_unit) / (1 / alpha + dim / 2))
    return beta, k, C


def barenblatt(x, t: float, alpha: float, dim: int, mass: float = 1.0):
    """Source-type self-similar PME solution, ``x`` of shape (..., dim) or a list of coordinate arrays."""
    if not t > 0:
        raise ValueError(f"barenblatt needs t > 0, got {t}")
    beta, k, C = barenblatt_constants(alpha, dim, mass)
    if isinstance(x, (list, tuple)):
        r2 = sum(np.asarray(xi, dtype=float) ** 2 for xi in x)
    else:
        r2 = np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)
    base = np.maximum(C - k * r2 * t ** (-2 * beta), 0.0)
    return t ** (-dim * beta) * base ** (1.0 / alpha)


def barenblatt_radius(t: float, alpha: float, dim: int, mass: float = 1.0) -> float:
    beta, k, C = barenblatt_constants(alpha, dim, mass)
    return math.sqrt(C / k) * t**beta


def barenblatt_field(grid: Grid, t: float, alpha: float, mass: float = 1.0) -> ScalarField:
    return ScalarField(grid, barenblatt(grid.coords(), t, alpha, grid.dim, mass))


# ---------------------------------------------------------------- weak form

TestFn = Union[ScalarField, Callable[[float], ScalarField]]


def _testfn_at(testfn: TestFn, t: float) -> np.ndarray:
    return (testfn if isinstance(testfn, ScalarField) else testfn(t)).values


def _drift_at(drift, t: float):
    if drift is None or isinstance(drift, VectorField):
        return drift
    return drift(t)


def weak_residual(
    s: SpaceTimeSeries,
    drift: Drift,
    alpha: float,
    testfn: TestFn,
    box: Box | None = None,
    epsilon: float = 0.0,
) -> float:
    """Discrete left side of the local weak formulation over the whole series.

    ``[∫ n φ]_{t_0}^{t_1} + ∫∫ (−n φ_t + ∇n^{1+α}·∇φ + B n·∇φ)``. Time integrals
    use the trapezoid rule (the ``φ_t`` term is integrated exactly per interval
    against the interval-mean of ``n``); the diffusion pairing is evaluated on
    cell faces, matching the solver's summation-by-parts.
    """
    grid = s.grid
    h = grid.spacing
    vol = grid.cell_volume
    times = s.times
    if len(s) < 2:
        raise ValueError("weak_residual needs at least two snapshots")
    phis = [_testfn_at(testfn, t) for t in times]
    if box is not None:
        inside = np.zeros(grid.shape, dtype=bool)
        shrunk = Box(tuple(l + h for l in box.lo), tuple(u - h for u in box.hi))
        inside[np.ix_(*box_indices(grid, shrunk))] = True
        for t, phi in zip(times, phis):
            if np.any(phi[~inside] != 0):
                raise ValueError(f"test function at t={t} is not supported inside the margin of {box}")

    def spatial(i: int) -> float:
        n = s.fields[i].values
        phi = phis[i]
        m = (n + epsilon) ** (1 + alpha) - epsilon ** (1 + alpha)
        val = 0.0
        for j in range(grid.dim):
            val += float(np.sum(forward_diff(m, j, h) * forward_diff(phi, j, h)))
        B = _drift_at(drift, times[i])
        if B is not None:
            for j, b in enumerate(B.arrays()):
                val += float(np.sum(b * n * centered_diff(phi, j, h)))
        return val * vol

    boundary = float(np.sum(s.fields[-1].values * phis[-1]) - np.sum(s.fields[0].values * phis[0])) * vol
    total = boundary
    for i in range(len(times) - 1):
        dt = times[i + 1] - times[i]
        n_mid = 0.5 * (s.fields[i].values + s.fields[i + 1].values)
        total -= float(np.sum(n_mid * (phis[i + 1] - phis[i]))) * vol
        total += 0.5 * dt * (spatial(i) + spatial(i + 1))
    return total


# ---------------------------------------------------------------- generalized nonlinearity

@dataclass
class PhiSandwich:
    """Samples of Φ and φ = Φ′ on a positive grid, with optionally claimed bounds."""

    s: np.ndarray
    Phi: np.ndarray
    phi: np.ndarray
    alpha0: float | None = None
    alpha1: float | None = None

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.Phi = np.asarray(self.Phi, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        if not (self.s.shape == self.Phi.shape == self.phi.shape):
            raise ValueError("s, Phi, phi must have the same shape")
        if np.any(self.s <= 0):
            raise ValueError("sample grid must be strictly positive")
        if self.alpha0 is not None and self.alpha1 is not None and not (0 <= self.alpha0 <= self.alpha1):
            raise ValueError(f"need 0 <= alpha0 <= alpha1, got {self.alpha0}, {self.alpha1}")

    @classmethod
    def from_callables(cls, Phi, phi, s, alpha0=None, alpha1=None) -> "PhiSandwich":
        s = np.asarray(s, dtype=float)
        return cls(s, Phi(s), phi(s), alpha0, alpha1)


@dataclass
class PhiReport:
    ratio_min: float
    ratio_max: float
    implied_alpha0: float
    implied_alpha1: float
    lower_ok: bool
    upper_ok: bool
    phi_nonnegative: bool
    phi_nondecreasing: bool
    worst_lower_s: float
    worst_upper_s: float

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok and self.phi_nonnegative and self.phi_nondecreasing


def check_phi_bounds(sandwich: PhiSandwich, rtol: float = 1e-12) -> PhiReport:
    """Check (1+α0)Φ ≤ sφ ≤ (1+α1)Φ at every sample; claimed bounds default to the implied ones."""
    s, Phi, phi = sandwich.s, sandwich.Phi, sandwich.phi
    if np.any(Phi <= 0):
        i = int(np.argmax(Phi <= 0))
        raise ValueError(f"Phi({s[i]}) = {Phi[i]} is not positive")
    ratio = s * phi / Phi
    a0 = float(np.min(ratio)) - 1.0
    a1 = float(np.max(ratio)) - 1.0
    c0 = a0 if sandwich.alpha0 is None else sandwich.alpha0
    c1 = a1 if sandwich.alpha1 is None else sandwich.alpha1
    lower_gap = s * phi - (1 + c0) * Phi
    upper_gap = (1 + c1) * Phi - s * phi
    tol = rtol * np.abs(Phi)
    order = np.argsort(s)
    return PhiReport(
        ratio_min=a0 + 1.0,
        ratio_max=a1 + 1.0,
        implied_alpha0=a0,
        implied_alpha1=a1,
        lower_ok=bool(np.all(lower_gap >= -tol)),
        upper_ok=bool(np.all(upper_gap >= -tol)),
        phi_nonnegative=bool(np.all(phi >= 0)),
        phi_nondecreasing=bool(np.all(np.diff(phi[order]) >= -rtol * np.abs(phi[order][1:]))),
        worst_lower_s=float(s[np.argmin(lower_gap)]),
        worst_upper_s=float(s[np.argmin(upper_gap)]),
    )
