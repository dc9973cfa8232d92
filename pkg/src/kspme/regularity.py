"""Intrinsic scaling, oscillation decay, Hölder fits, geometric iteration and drift exponent algebra."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .field import (
    Box,
    ScalarField,
    SpaceTimeSeries,
    VectorField,
    box_axes,
    box_indices,
    centered_diff,
    mixed_norm,
)

# ---------------------------------------------------------------- intrinsic geometry


@dataclass(frozen=True)
class IntrinsicCylinder:
    """K_ρ(x₀) × [t₀ − θ ω^{−α} ρ², t₀]."""

    center: tuple[float, ...]
    t0: float
    rho: float
    omega: float = 1.0
    alpha: float = 0.0
    theta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.alpha > 0 and not self.omega > 0:
            raise ValueError("omega must be positive when alpha > 0")

    @property
    def depth(self) -> float:
        if self.alpha == 0:
            return self.theta * self.rho**2
        return self.theta * self.omega ** (-self.alpha) * self.rho**2

    def box(self) -> Box:
        return Box.cube(self.center, self.rho, self.t0 - self.depth, self.t0)


def intrinsic_distance(p1, p2, omega: float, alpha: float) -> float:
    """max(|x₁ − x₂|_∞, ω^{α/2}|t₁ − t₂|^{1/2}) for points ``(x, t)``."""
    (x1, t1), (x2, t2) = p1, p2
    if alpha != 0 and not omega > 0:
        raise ValueError("omega must be positive when alpha != 0")
    dx = float(np.max(np.abs(np.atleast_1d(np.subtract(x1, x2, dtype=float))))) if np.size(x1) else 0.0
    scale = 1.0 if alpha == 0 else omega ** (alpha / 2)
    return max(dx, scale * math.sqrt(abs(float(t1) - float(t2))))


# ---------------------------------------------------------------- oscillation decay


class _SuffixOsc:
    """Oscillation over K_ρ(x₀) × [t₀ − depth, t₀] for many (ρ, depth), with per-ρ caching.

    All cylinders end at t₀, so per-radius running extrema from t₀ backwards
    answer every depth by one search.
    """

    def __init__(self, s: SpaceTimeSeries, center: Sequence[float], t0: float):
        self.s = s
        self.center = tuple(float(c) for c in center)
        span = max(1.0, abs(float(s.times[-1])))
        last = int(np.searchsorted(s.times, t0 + 1e-12 * span, side="right")) - 1
        if last < 0:
            raise ValueError(f"t0 = {t0} precedes the first snapshot")
        self.t0 = float(t0)
        self.times = s.times[: last + 1][::-1]
        self.fields = s.fields[: last + 1][::-1]
        self.span = span
        self.cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    @property
    def available_depth(self) -> float:
        return self.t0 - float(self.times[-1])

    def _extrema(self, rho: float):
        if rho not in self.cache:
            idx = np.ix_(*box_indices(self.s.grid, Box.cube(self.center, rho)))
            hi = np.array([float(np.max(f.values[idx])) for f in self.fields])
            lo = np.array([float(np.min(f.values[idx])) for f in self.fields])
            self.cache[rho] = (np.maximum.accumulate(hi), np.minimum.accumulate(lo))
        return self.cache[rho]

    def __call__(self, rho: float, depth: float) -> float:
        hi, lo = self._extrema(rho)
        back = self.t0 - self.times
        j = int(np.searchsorted(back, depth + 1e-12 * self.span, side="right")) - 1
        return float(hi[j] - lo[j])


@dataclass(frozen=True)
class LevelEvidence:
    i: int
    rho: float
    omega: float
    depth: float
    osc: float

    @property
    def passed(self) -> bool:
        return self.osc <= self.omega * (1 + 1e-12) + 1e-300


@dataclass
class OscillationEvidence:
    omega0: float
    rho0: float
    eta: float
    lam: float
    levels: list[LevelEvidence]
    truncated_at: int | None = None

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.levels)

    def rows(self) -> list[dict]:
        return [
            {"i": e.i, "rho": e.rho, "omega": e.omega, "depth": e.depth, "osc": e.osc, "passed": e.passed}
            for e in self.levels
        ]


def _min_omega(osc: _SuffixOsc, rho0: float, alpha: float) -> float:
    """Smallest ω whose cylinder Q(ω, ρ₀) still fits in the recorded time span."""
    avail = osc.available_depth
    if alpha == 0:
        return 0.0
    if avail <= 0:
        return math.inf
    return (rho0**2 / avail) ** (1 / alpha)


def self_consistent_omega(
    s: SpaceTimeSeries, center: Sequence[float], t0: float, rho0: float, alpha: float, _osc: _SuffixOsc | None = None
) -> float:
    """Smallest ω ≥ ω_min with essosc(Q(ω, ρ₀)) ≤ ω, where ω_min is the data-fit limit.

    The measured oscillation is nonincreasing in ω (larger ω, shallower
    cylinder), so the crossing is unique and found by bisection. If even the
    deepest admissible cylinder has oscillation below ω_min, ω_min is returned.
    """
    osc = _osc or _SuffixOsc(s, center, t0)
    if alpha == 0:
        return osc(rho0, rho0**2)
    f = lambda w: osc(rho0, rho0**2 * w ** (-alpha)) if w > 0 else osc(rho0, math.inf)
    lo = _min_omega(osc, rho0, alpha)
    if not math.isfinite(lo):
        raise ValueError("no recorded time depth before t0: cannot fit an intrinsic cylinder")
    if f(lo) <= lo:
        return lo
    hi = max(f(lo), lo)
    while f(hi) > hi:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) <= mid:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * hi:
            break
    return hi


def oscillation_decay(
    s: SpaceTimeSeries,
    center: Sequence[float],
    t0: float,
    rho0: float,
    eta: float,
    lam: float,
    alpha: float,
    levels: int,
    omega0: float | None = None,
    min_cells: float = 2.0,
    warn: bool = True,
    _osc: _SuffixOsc | None = None,
) -> OscillationEvidence:
    """Measured oscillation on the nested cylinders Q_i with ρ_i = λ^i ρ₀ and ω_i = η^i ω₀.

    Levels stop early when a cylinder needs more time depth than recorded or
    when ρ_i drops below ``min_cells`` grid spacings.
    """
    if not (0 < eta <= 1 and 0 < lam < 1):
        raise ValueError(f"need eta in (0, 1] and lambda in (0, 1), got eta={eta}, lambda={lam}")
    osc = _osc or _SuffixOsc(s, center, t0)
    if omega0 is None:
        omega0 = self_consistent_omega(s, center, t0, rho0, alpha, osc)
    h = s.grid.spacing
    out: list[LevelEvidence] = []
    truncated = None
    for i in range(levels + 1):
        rho = rho0 * lam**i
        om = omega0 * eta**i
        if alpha == 0:
            depth = rho**2
        elif om > 0:
            depth = rho**2 * om ** (-alpha)
        else:
            depth = 0.0
        if i > 0 and (rho < min_cells * h or depth > osc.available_depth * (1 + 1e-12)):
            truncated = i
            if warn:
                warnings.warn(f"oscillation_decay: levels truncated at i={i} (cylinder leaves data or grid resolution)")
            break
        out.append(LevelEvidence(i, rho, om, depth, osc(rho, depth)))
    return OscillationEvidence(omega0, rho0, eta, lam, out, truncated)


# ---------------------------------------------------------------- Hölder fit


def default_search_grid(n: int = 31, lo: float = 0.05, hi: float = 0.95) -> np.ndarray:
    return np.geomspace(lo, hi, n)


@dataclass
class HolderFit:
    eta: float
    lam: float
    beta1: float
    beta2: float
    beta: float
    gamma: float
    omega0: float
    rho0: float
    evidence: list[tuple[int, float, float, float]] = field(default_factory=list)
    verdict: str = "ok"
    pairs_tested: int = 0
    pairs_passed: int = 0

    def report(self) -> str:
        lines = [
            f"verdict: {self.verdict}",
            f"beta = {self.beta:.6g} (beta1 = {self.beta1:.6g}, beta2 = {self.beta2:.6g})",
            f"gamma = {self.gamma:.6g}",
            f"eta = {self.eta:.6g}, lambda = {self.lam:.6g}",
            f"omega0 = {self.omega0:.6g}, rho0 = {self.rho0:.6g}",
            f"pairs passed {self.pairs_passed}/{self.pairs_tested}",
            "i, rho_i, omega_i, osc_i",
        ]
        lines += [f"{i}, {r:.6g}, {w:.6g}, {o:.6g}" for i, r, w, o in self.evidence]
        return "\n".join(lines)


def holder_exponents(eta: float, lam: float, alpha: float) -> tuple[float, float] | None:
    """(β₁, β₂) from ω_i = η^i ω₀ and ρ_i = λ^i ρ₀; None when λ̃ = η^{−α/2}λ ≥ 1."""
    lam_t = eta ** (-alpha / 2) * lam
    if lam_t >= 1:
        return None
    return math.log(eta) / math.log(lam), math.log(eta) / math.log(lam_t)


def fit_gamma(
    s: SpaceTimeSeries,
    cylinder: Box,
    omega0: float,
    rho0: float,
    alpha: float,
    beta: float,
    n_pairs: int = 2000,
    seed: int = 0,
) -> float:
    """Max over random point pairs in the cylinder of |Δn| / (ω₀ ((|Δx| + ω₀^{α/2}|Δt|^{1/2}) / ρ₀)^β)."""
    if omega0 == 0:
        return 0.0
    from .field import time_indices

    idx, coords = box_axes(s.grid, cylinder)
    ti = time_indices(s.times, cylinder)
    rng = np.random.default_rng(seed)
    best = 0.0
    tscale = omega0 ** (alpha / 2) if alpha else 1.0
    for _ in range(n_pairs):
        a = [rng.integers(len(ii)) for ii in idx]
        b = [rng.integers(len(ii)) for ii in idx]
        ta, tb = rng.choice(ti), rng.choice(ti)
        va = s.fields[ta].values[tuple(ii[k] for ii, k in zip(idx, a))]
        vb = s.fields[tb].values[tuple(ii[k] for ii, k in zip(idx, b))]
        dx = math.sqrt(sum((c[i] - c[j]) ** 2 for c, i, j in zip(coords, a, b)))
        dist = dx + tscale * math.sqrt(abs(s.times[ta] - s.times[tb]))
        if dist == 0:
            continue
        best = max(best, abs(va - vb) / (omega0 * (dist / rho0) ** beta))
    return float(best)


def fit_holder(
    s: SpaceTimeSeries,
    center: Sequence[float],
    t0: float,
    rho0: float,
    alpha: float,
    etas: Sequence[float] | None = None,
    lambdas: Sequence[float] | None = None,
    levels: int = 8,
    min_cells: float = 2.0,
    n_pairs: int = 2000,
    seed: int = 0,
) -> HolderFit:
    """Largest β = min(β₁, β₂) over (η, λ) pairs whose oscillation decay holds at every resolved level.

    Pairs must resolve at least one level beyond the base cylinder. Ties are
    broken lexicographically on (β, λ, η). β is capped at 1.
    """
    etas = default_search_grid() if etas is None else np.asarray(etas, float)
    lambdas = default_search_grid() if lambdas is None else np.asarray(lambdas, float)
    osc = _SuffixOsc(s, center, t0)
    omega0 = self_consistent_omega(s, center, t0, rho0, alpha, osc)
    if omega0 == 0 or osc(rho0, osc.available_depth) == 0:
        return HolderFit(math.nan, math.nan, 1.0, 1.0, 1.0, 0.0, 0.0, rho0, [(0, rho0, 0.0, 0.0)], "constant")
    best = None
    tested = passed = 0
    for lam in lambdas:
        for eta in etas:
            ex = holder_exponents(float(eta), float(lam), alpha)
            if ex is None:
                continue
            tested += 1
            ev = oscillation_decay(
                s, center, t0, rho0, float(eta), float(lam), alpha, levels, omega0, min_cells, warn=False, _osc=osc
            )
            if len(ev.levels) < 2 or not ev.passed:
                continue
            passed += 1
            b1, b2 = ex
            key = (min(b1, b2, 1.0), float(lam), float(eta))
            if best is None or key > best[0]:
                best = (key, b1, b2, ev)
    if best is None:
        return HolderFit(
            math.nan, math.nan, 0.0, 0.0, 0.0, math.inf, omega0, rho0, [],
            "no Hölder evidence at this resolution", tested, 0,
        )
    (beta, lam, eta), b1, b2, ev = best
    base = IntrinsicCylinder(tuple(center), t0, rho0, omega0, alpha).box()
    gamma = fit_gamma(s, base, omega0, rho0, alpha, beta, n_pairs, seed)
    evidence = [(e.i, e.rho, e.omega, e.osc) for e in ev.levels]
    verdict = "ok"
    if alpha > 0 and omega0 <= _min_omega(osc, rho0, alpha) * (1 + 1e-12):
        verdict = "ok (omega0 clamped at the data-fit limit; record a longer history for a sharper fit)"
    return HolderFit(eta, lam, b1, b2, beta, gamma, omega0, rho0, evidence, verdict, tested, passed)


# ---------------------------------------------------------------- geometric iteration


def iteration_threshold(C: float, b: float, kappa: float, alpha: float) -> float:
    """(2C)^{−(1+κ)/σ} b^{−(1+κ)/σ²} with σ = min(κ, α)."""
    sigma = min(kappa, alpha)
    return (2 * C) ** (-(1 + kappa) / sigma) * b ** (-(1 + kappa) / sigma**2)


@dataclass
class GeometricTrace:
    Y: list[float]
    Z: list[float]
    stop_index: int
    reason: str


def geometric_sequence_limit(
    Y0: float, Z0: float, C: float, b: float, kappa: float, alpha: float, max_iter: int = 200, tol: float = 1e-12
) -> tuple[bool, GeometricTrace]:
    """Iterate the coupled recursion with equality until both sequences drop below ``tol``.

    Y_{n+1} = C bⁿ (Y_n^{1+α} + Z_n^{1+κ} Y_n^α),  Z_{n+1} = C bⁿ (Y_n + Z_n^{1+κ}).
    """
    for name, v in (("C", C), ("b", b)):
        if not v > 1:
            raise ValueError(f"{name} must be > 1, got {v}")
    if not (kappa > 0 and alpha > 0):
        raise ValueError("kappa and alpha must be positive")
    if Y0 < 0 or Z0 < 0:
        raise ValueError("initial values must be nonnegative")
    Y, Z = [float(Y0)], [float(Z0)]
    y, z = float(Y0), float(Z0)
    for n in range(max_iter + 1):
        if y < tol and z < tol:
            return True, GeometricTrace(Y, Z, n, "converged")
        if n == max_iter:
            break
        f = C * b**n
        with np.errstate(over="ignore"):
            try:
                y_new = f * (y ** (1 + alpha) + z ** (1 + kappa) * y**alpha)
                z_new = f * (y + z ** (1 + kappa))
            except OverflowError:
                return False, GeometricTrace(Y, Z, n + 1, "overflow")
        if not (math.isfinite(y_new) and math.isfinite(z_new)):
            return False, GeometricTrace(Y, Z, n + 1, "overflow")
        y, z = y_new, z_new
        Y.append(y)
        Z.append(z)
    return False, GeometricTrace(Y, Z, max_iter, "max_iter")


# ---------------------------------------------------------------- drift exponents


class ExponentError(ValueError):
    """An exponent lies outside its admissible range; ``bound`` names the violated condition."""

    def __init__(self, bound: str, message: str):
        self.bound = bound
        super().__init__(f"{bound}: {message}")


@dataclass(frozen=True)
class DriftExponents:
    d: int
    kappa_exp: float
    qhat1: float
    qhat2: float
    q1: float
    q2: float

    def residuals(self) -> dict[str, float]:
        k = self.kappa_exp
        return {
            "scaling": 2 / self.qhat2 + self.d / self.qhat1 - (2 - self.d * k),
            "q1": self.q1 - 2 * self.qhat1 * (1 + k) / (self.qhat1 - 1),
            "q2": self.q2 - 2 * self.qhat2 * (1 + k) / (self.qhat2 - 1),
        }


def drift_exponents(d: int, kappa_exp: float, qhat1: float) -> DriftExponents:
    """Solve 2/q̂₂ + d/q̂₁ = 2 − dκ for q̂₂ and derive q₁, q₂."""
    if int(d) != d or d < 1:
        raise ExponentError("dimension", f"d must be a positive integer, got {d}")
    d = int(d)
    if not 0 < kappa_exp < 2 / d:
        raise ExponentError("kappa_range", f"kappa_exp must lie in (0, 2/d) = (0, {2 / d:.6g}), got {kappa_exp}")
    if not qhat1 > 1:
        raise ExponentError("qhat1_gt_1", f"qhat1 must be > 1, got {qhat1}")
    rhs = 2 - d * kappa_exp - d / qhat1
    if not rhs > 0:
        raise ExponentError(
            "qhat2_feasible", f"2 - d*kappa - d/qhat1 = {rhs:.6g} <= 0, no qhat2 > 1 solves the scaling relation"
        )
    qhat2 = 2 / rhs
    if not qhat2 > 1:
        raise ExponentError("qhat2_gt_1", f"qhat2 = {qhat2} is not > 1")
    q1 = 2 * qhat1 * (1 + kappa_exp) / (qhat1 - 1)
    q2 = 2 * qhat2 * (1 + kappa_exp) / (qhat2 - 1)
    return DriftExponents(d, float(kappa_exp), float(qhat1), qhat2, q1, q2)


def vpq_pair(d: int, p: float, q1: float) -> float:
    """q₂ from 1/q₂ + d/(p q₁) = d/p², with the admissible (q₁, q₂) range checked per case."""
    if int(d) != d or d < 1:
        raise ExponentError("dimension", f"d must be a positive integer, got {d}")
    if not p > 1:
        raise ExponentError("p_gt_1", f"p must be > 1, got {p}")
    if d == 1:
        case, q1_hi, q2_lo = "d=1", math.inf, p * p
    elif p < d:
        case, q1_hi, q2_lo = "1<p<d", d * p / (d - p), p
    else:
        case, q1_hi, q2_lo = "1<d<=p", math.inf, p * p / d
    if not p < q1 < q1_hi:
        raise ExponentError(f"q1_range[{case}]", f"q1 = {q1} must lie in ({p}, {q1_hi})")
    inv = d / p**2 - d / (p * q1)
    q2 = 1 / inv
    if not q2 > q2_lo:
        raise ExponentError(f"q2_range[{case}]", f"q2 = {q2} must exceed {q2_lo}")
    return q2


def k_rho_condition(k: float, rho: float, alpha: float, exps: DriftExponents) -> bool:
    """Whether k^{−α − 2α(1+κ)/q₂} ρ^{dκ} < 1 (recorded only; no semantics attached)."""
    e = -alpha - 2 * alpha * (1 + exps.kappa_exp) / exps.q2
    return k**e * rho ** (exps.d * exps.kappa_exp) < 1


@dataclass(frozen=True)
class DriftNormReport:
    b_norm: float
    grad_b_norm: float
    exponents: DriftExponents


def drift_norm_check(times: Sequence[float], fields: Sequence[VectorField], exps: DriftExponents) -> DriftNormReport:
    """||B||_{2q̂₁,2q̂₂} and ||∇B||_{q̂₁,q̂₂} over the sampled family."""
    if len(times) != len(fields):
        raise ValueError("times and fields differ in length")
    grid = fields[0].grid
    h = grid.spacing
    mags, grads = [], []
    for B in fields:
        arrs = B.arrays()
        mags.append(ScalarField(grid, np.sqrt(sum(a * a for a in arrs))))
        g2 = sum(centered_diff(a, j, h) ** 2 for a in arrs for j in range(grid.dim))
        grads.append(ScalarField(grid, np.sqrt(g2)))
    bn = mixed_norm(SpaceTimeSeries(times, mags), 2 * exps.qhat1, 2 * exps.qhat2)
    gn = mixed_norm(SpaceTimeSeries(times, grads), exps.qhat1, exps.qhat2)
    return DriftNormReport(bn, gn, exps)
