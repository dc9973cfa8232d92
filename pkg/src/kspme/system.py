"""Coupled bacteria / oxygen / Stokes solver on the periodic torus (ε-regularized)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.fft as sfft
from numpy.polynomial import polynomial as P

from .field import (
    Grid,
    ScalarField,
    VectorField,
    centered_diff,
    face_average,
    face_divergence,
    forward_diff,
    laplacian_array,
)
from .pme import CFLError, DEFAULT_SIGMA, advection_rate, diffusion_potential, diffusion_rate, upwind_fluxes

N_ASSUMPTION_SAMPLES = 1024


class InvariantError(RuntimeError):
    """A step produced a state violating nonnegativity, the oxygen bound, or incompressibility."""

    def __init__(self, message: str, state: "SystemState"):
        super().__init__(message)
        self.state = state


@dataclass
class ModelParams:
    """Model coefficients. ``chi`` and ``kappa`` are polynomial coefficients in c, lowest degree first."""

    alpha: float = 0.5
    q: float = 1.0
    epsilon: float = 0.0
    chi: Sequence[float] = (1.0,)
    kappa: Sequence[float] = (0.0, 1.0)
    kappa0: float = 0.0
    grad_phi: Sequence[float] | VectorField = (0.0, 0.0)
    p1: bool = True
    p2: bool = False

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        self.chi = tuple(float(v) for v in self.chi) or (0.0,)
        self.kappa = tuple(float(v) for v in self.kappa) or (0.0,)
        if not isinstance(self.grad_phi, VectorField):
            self.grad_phi = tuple(float(v) for v in self.grad_phi)

    def chi_of(self, c):
        return P.polyval(c, self.chi)

    def kappa_of(self, c):
        return P.polyval(c, self.kappa)

    def kappa_prime_of(self, c):
        return P.polyval(c, P.polyder(self.kappa)) if len(self.kappa) > 1 else np.zeros_like(np.asarray(c, float))

    def kappa_rate(self, c):
        """κ(c)/c, finite when κ(0) = 0."""
        return P.polyval(c, self.kappa[1:]) if len(self.kappa) > 1 else np.zeros_like(np.asarray(c, float))

    def check_assumptions(self, c_max: float) -> list[str]:
        """Return the list of violated sign conditions on [0, c_max] (empty when consistent)."""
        problems = []
        c = np.linspace(0.0, max(c_max, 0.0), N_ASSUMPTION_SAMPLES)
        if self.p1:
            if self.kappa[0] != 0.0:
                problems.append(f"(P1) requires kappa(0) = 0, got {self.kappa[0]}")
            kv = self.kappa_of(c)
            if np.min(kv) < 0:
                problems.append(f"(P1) requires kappa >= 0, min {np.min(kv):.3g} at c = {c[np.argmin(kv)]:.3g}")
        if self.p2:
            if not self.kappa0 > 0:
                problems.append("(P2) requires kappa0 > 0")
            kp = self.kappa_prime_of(c)
            if np.min(kp) < self.kappa0:
                problems.append(
                    f"(P2) requires kappa' >= {self.kappa0}, min {np.min(kp):.3g} at c = {c[np.argmin(kp)]:.3g}"
                )
        return problems

    def grad_phi_arrays(self, grid: Grid) -> list[np.ndarray]:
        if isinstance(self.grad_phi, VectorField):
            return self.grad_phi.arrays()
        if len(self.grad_phi) != grid.dim:
            raise ValueError(f"grad_phi has {len(self.grad_phi)} entries, grid dim is {grid.dim}")
        return [np.full(grid.shape, g) for g in self.grad_phi]


@dataclass(frozen=True, eq=False)
class SystemState:
    n: ScalarField
    c: ScalarField
    u: VectorField
    time: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.n.grid


# ---------------------------------------------------------------- spectral helpers

def wavenumbers(grid: Grid) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Angular wavenumbers broadcastable over the grid.

    Returns ``(k_odd, k_even)``: the first has Nyquist entries zeroed and is
    used for first derivatives so real fields stay real; the second keeps
    them for |k|².
    """
    N = grid.cells
    k1 = 2 * np.pi * np.fft.fftfreq(N, d=grid.spacing)
    k1_odd = k1.copy()
    if N % 2 == 0:
        k1_odd[N // 2] = 0.0
    k_odd, k_even = [], []
    for j in range(grid.dim):
        shape = [1] * grid.dim
        shape[j] = N
        k_odd.append(k1_odd.reshape(shape))
        k_even.append(k1.reshape(shape))
    return k_odd, k_even


def _real_wavenumbers(grid: Grid) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """As :func:`wavenumbers` for the half spectrum of a real transform (last axis halved)."""
    k_odd, k_even = wavenumbers(grid)
    m = grid.cells // 2 + 1
    return [k[..., :m] for k in k_odd], [k[..., :m] for k in k_even]


def _rfft(a: np.ndarray) -> np.ndarray:
    return sfft.rfftn(a)


def _irfft(a: np.ndarray, grid: Grid) -> np.ndarray:
    return sfft.irfftn(a, s=grid.shape)


def _project_hat(uh: list[np.ndarray], k_odd: list[np.ndarray]) -> list[np.ndarray]:
    k2 = sum(k * k for k in k_odd)
    safe = np.where(k2 == 0, 1.0, k2)
    kdotu = sum(k * a for k, a in zip(k_odd, uh)) / safe
    return [a - k * kdotu for k, a in zip(k_odd, uh)]


def leray_project(u: VectorField) -> VectorField:
    """Remove the gradient part of ``u`` mode by mode; the mean flow is kept."""
    grid = u.grid
    k_odd, _ = _real_wavenumbers(grid)
    ph = _project_hat([_rfft(a) for a in u.arrays()], k_odd)
    return VectorField.from_arrays(grid, [_irfft(a, grid) for a in ph])


def spectral_divergence(u: VectorField) -> ScalarField:
    grid = u.grid
    k_odd, _ = _real_wavenumbers(grid)
    dh = sum(1j * k * _rfft(a) for k, a in zip(k_odd, u.arrays()))
    return ScalarField(grid, _irfft(dh, grid))


def stokes_step(u: VectorField, n: ScalarField, params: ModelParams, dt: float) -> VectorField:
    """Advance ∂_t u − Δu + ∇p = −n∇φ by ``dt`` with the exact per-mode integrating factor."""
    grid = u.grid
    k_odd, k_even = _real_wavenumbers(grid)
    k2 = sum(k * k for k in k_even)
    decay = np.exp(-k2 * dt)
    gain = np.where(k2 == 0, dt, -np.expm1(-k2 * dt) / np.where(k2 == 0, 1.0, k2))
    force = [-n.values * g for g in params.grad_phi_arrays(grid)]
    uh = _project_hat([_rfft(a) for a in u.arrays()], k_odd)
    fh = _project_hat([_rfft(f) for f in force], k_odd)
    out = [_irfft(decay * a + gain * f, grid) for a, f in zip(uh, fh)]
    return VectorField.from_arrays(grid, out)


# ---------------------------------------------------------------- transport pieces

def chemotaxis_mobility(n: np.ndarray, q: float, eps: float) -> np.ndarray:
    """(n+ε)^q − ε^q: the regularized n^q, shifted so it vanishes on empty cells."""
    return (n + eps) ** q - eps**q


def chemotaxis_velocity(c: np.ndarray, params: ModelParams, h: float) -> list[np.ndarray]:
    """χ(c)∂c on faces ``i+1/2``; bacteria drift along it."""
    out = []
    for j in range(c.ndim):
        c_face = face_average(c, j)
        out.append(params.chi_of(c_face) * forward_diff(c, j, h))
    return out


def chemotaxis_flux(n: ScalarField, c: ScalarField, params: ModelParams) -> VectorField:
    """Face-centred flux χ(c)(n+ε)^q∇c, the n-factor upwinded on the sign of χ(c)∂c."""
    if n.grid != c.grid:
        raise ValueError("n and c live on different grids")
    vel = chemotaxis_velocity(c.values, params, n.grid.spacing)
    mob = chemotaxis_mobility(n.values, params.q, params.epsilon)
    return VectorField.from_arrays(n.grid, upwind_fluxes(mob, vel))


def velocity_faces(u: VectorField) -> list[np.ndarray]:
    return [face_average(a, j) for j, a in enumerate(u.arrays())]


def density_rates(state: SystemState, params: ModelParams) -> tuple[float, float]:
    """(diffusive, transport) outflow rates bounding the n-step."""
    grid = state.grid
    n = state.n.values
    n_max = float(np.max(n))
    diff = diffusion_rate(n_max, params.alpha, params.epsilon, grid)
    u_max = max(float(np.max(np.abs(a))) for a in velocity_faces(state.u))
    v_chi = max(float(np.max(np.abs(v))) for v in chemotaxis_velocity(state.c.values, params, grid.spacing))
    # mobility g(n) <= q (n+ε)^{q-1} n, so chemotactic outflow per unit n is bounded by this speed
    chi_speed = v_chi * params.q * (n_max + params.epsilon) ** (params.q - 1)
    return diff, advection_rate(u_max + chi_speed, grid)


def oxygen_rate(c: ScalarField, n: ScalarField, u: VectorField, params: ModelParams, diffusion: bool = True) -> float:
    grid = c.grid
    h = grid.spacing
    rate = 2 * grid.dim / h**2 if diffusion else 0.0
    rate += sum(float(np.max(np.abs(a))) for a in u.arrays()) / h
    cons = params.kappa_rate(c.values)
    rate += max(float(np.max(cons)), 0.0) * float(np.max(n.values))
    return rate


def step_oxygen(
    c: ScalarField, n: ScalarField, u: VectorField, params: ModelParams, dt: float, diffusion: bool = True
) -> ScalarField:
    """Explicit step of ∂_t c − Δc + u·∇c = −κ(c) n with upwinded advection.

    Under the step limit the update is a nonnegative combination of old values
    minus a consumption term that never exceeds the cell's own share, so
    0 <= c_out <= max(c_in).
    """
    if params.kappa[0] != 0.0:
        raise ValueError(f"step_oxygen requires kappa(0) = 0, got {params.kappa[0]}")
    rate = oxygen_rate(c, n, u, params, diffusion)
    if rate > 0 and dt > 1.0 / rate:
        raise CFLError(dt, 1.0 / rate, "oxygen diffusion+advection+consumption")
    grid = c.grid
    h = grid.spacing
    cv = c.values
    incr = laplacian_array(cv, h) if diffusion else np.zeros_like(cv)
    for j, a in enumerate(u.arrays()):
        back = (cv - np.roll(cv, 1, j)) / h
        fwd = (np.roll(cv, -1, j) - cv) / h
        incr = incr - np.where(a > 0, a * back, a * fwd)
    incr = incr - params.kappa_of(cv) * n.values
    return ScalarField(grid, cv + dt * incr)


def vorticity(u: VectorField):
    """Centred-difference curl: a ScalarField in 2-d, a VectorField in 3-d."""
    grid = u.grid
    h = grid.spacing
    a = u.arrays()
    if grid.dim == 2:
        return ScalarField(grid, centered_diff(a[1], 0, h) - centered_diff(a[0], 1, h))
    return VectorField.from_arrays(
        grid,
        [
            centered_diff(a[2], 1, h) - centered_diff(a[1], 2, h),
            centered_diff(a[0], 2, h) - centered_diff(a[2], 0, h),
            centered_diff(a[1], 0, h) - centered_diff(a[0], 1, h),
        ],
    )


# ---------------------------------------------------------------- coupled step

def system_cfl(state: SystemState, params: ModelParams, sigma: float = DEFAULT_SIGMA) -> float:
    diff, trans = density_rates(state, params)
    n_rate = diff + trans
    c_rate = oxygen_rate(state.c, state.n, state.u, params)
    rate = max(n_rate, c_rate)
    return math.inf if rate == 0 else sigma / rate


def step_density(state: SystemState, params: ModelParams, dt: float) -> ScalarField:
    grid = state.grid
    h = grid.spacing
    n = state.n.values
    diff, trans = density_rates(state, params)
    if dt * (diff + trans) > 1.0:
        raise CFLError(dt, 1.0 / (diff + trans), "density diffusion+transport positivity")
    f_u = upwind_fluxes(n, velocity_faces(state.u))
    f_chi = upwind_fluxes(
        chemotaxis_mobility(n, params.q, params.epsilon), chemotaxis_velocity(state.c.values, params, h)
    )
    fluxes = [a + b for a, b in zip(f_u, f_chi)]
    m = diffusion_potential(n, params.alpha, params.epsilon)
    new = n + dt * (laplacian_array(m, h) - face_divergence(fluxes, h))
    return ScalarField(grid, new)


def check_state(state: SystemState, c_cap: float, div_tol: float = 1e-12) -> None:
    n_min = float(np.min(state.n.values))
    if n_min < 0:
        raise InvariantError(f"density became negative: min n = {n_min!r}", state)
    c_min = float(np.min(state.c.values))
    c_max = float(np.max(state.c.values))
    if c_min < 0:
        raise InvariantError(f"oxygen became negative: min c = {c_min!r}", state)
    if c_max > c_cap + 1e-12:
        raise InvariantError(f"oxygen exceeded its initial maximum: {c_max!r} > {c_cap!r}", state)
    div = float(np.max(np.abs(spectral_divergence(state.u).values)))
    scale = max(1.0, max(float(np.max(np.abs(a))) for a in state.u.arrays()))
    if div > div_tol * scale:
        raise InvariantError(f"velocity not divergence-free: max |div u| = {div:.3e}", state)


def step_system(state: SystemState, params: ModelParams, dt: float, c_cap: float | None = None) -> SystemState:
    """Lie-split step n → c → u. ``c_cap`` (default: current max c) bounds oxygen."""
    n_new = step_density(state, params, dt)
    c_new = step_oxygen(state.c, n_new, state.u, params, dt)
    u_new = stokes_step(state.u, n_new, params, dt)
    out = SystemState(n_new, c_new, u_new, state.time + dt)
    check_state(out, float(np.max(state.c.values)) if c_cap is None else c_cap)
    return out
