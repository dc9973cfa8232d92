"""Periodic cell-centred grid fields, finite-difference operators and measurements.

Every reduction goes through ``np.sum``/``np.max`` on C-contiguous arrays in
row-major order. NumPy's pairwise summation is single-threaded and depends only
on the array shape, so results are bit-reproducible across runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

_SNAP_TOL = 1e-9


@dataclass(frozen=True)
class Grid:
    dim: int
    cells: int
    length: float
    origin: float = 0.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.cells < 8:
            raise ValueError(f"cells_per_axis must be >= 8, got {self.cells}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")

    @property
    def spacing(self) -> float:
        return self.length / self.cells

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.cells,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return self.length**self.dim

    def centers_1d(self) -> np.ndarray:
        return self.origin + (np.arange(self.cells) + 0.5) * self.spacing

    def coords(self) -> list[np.ndarray]:
        """Cell-centre coordinate arrays, one per axis, each of full grid shape."""
        x = self.centers_1d()
        return list(np.meshgrid(*([x] * self.dim), indexing="ij"))


def _check_finite(values: np.ndarray, what: str) -> None:
    bad = ~np.isfinite(values)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ValueError(f"{what} has non-finite value {values[idx]!r} at index {idx}")


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        _check_finite(v, "ScalarField")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    def integral(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume)


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    components: tuple[ScalarField, ...]

    def __post_init__(self):
        comps = tuple(
            c if isinstance(c, ScalarField) else ScalarField(self.grid, c) for c in self.components
        )
        if len(comps) != self.grid.dim:
            raise ValueError(f"expected {self.grid.dim} components, got {len(comps)}")
        if any(c.grid != self.grid for c in comps):
            raise ValueError("vector components live on different grids")
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_arrays(cls, grid: Grid, arrays: Sequence[np.ndarray]) -> "VectorField":
        return cls(grid, tuple(ScalarField(grid, a) for a in arrays))

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls.from_arrays(grid, [np.zeros(grid.shape)] * grid.dim)

    @classmethod
    def constant(cls, grid: Grid, vec: Sequence[float]) -> "VectorField":
        if len(vec) != grid.dim:
            raise ValueError(f"constant vector has {len(vec)} entries, grid dim is {grid.dim}")
        return cls.from_arrays(grid, [np.full(grid.shape, float(v)) for v in vec])

    def arrays(self) -> list[np.ndarray]:
        return [c.values for c in self.components]

    def magnitude(self) -> ScalarField:
        return ScalarField(self.grid, np.sqrt(sum(a * a for a in self.arrays())))


@dataclass(frozen=True, eq=False)
class SpaceTimeSeries:
    times: np.ndarray
    fields: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("times must be a nonempty 1-d sequence")
        if t.size != len(self.fields):
            raise ValueError(f"{t.size} times but {len(self.fields)} fields")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        grid = self.fields[0].grid
        if any(f.grid != grid for f in self.fields):
            raise ValueError("all fields in a series must share one grid")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "fields", tuple(self.fields))

    @property
    def grid(self) -> Grid:
        return self.fields[0].grid

    def __len__(self) -> int:
        return len(self.fields)

    def stack(self) -> np.ndarray:
        """Scalar series as one array of shape (nt, *grid.shape)."""
        return np.stack([f.values for f in self.fields])


# ---------------------------------------------------------------- boxes

@dataclass(frozen=True)
class Box:
    """Axis-aligned space-time box ``[lo, hi] x [t_lo, t_hi]`` in physical units."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    t_lo: float = -math.inf
    t_hi: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if len(self.lo) != len(self.hi):
            raise ValueError("lo and hi must have the same length")
        if any(h < l for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"empty box: lo={self.lo} hi={self.hi}")
        if self.t_hi < self.t_lo:
            raise ValueError(f"empty time window [{self.t_lo}, {self.t_hi}]")

    @classmethod
    def cube(cls, center: Sequence[float], radius: float, t_lo=-math.inf, t_hi=math.inf) -> "Box":
        return cls(tuple(c - radius for c in center), tuple(c + radius for c in center), t_lo, t_hi)

    @classmethod
    def full(cls, grid: Grid) -> "Box":
        lo = (grid.origin,) * grid.dim
        hi = (grid.origin + grid.length,) * grid.dim
        return cls(lo, hi)


def _snap_floor(x: float) -> int:
    r = round(x)
    return int(r) if abs(x - r) < _SNAP_TOL else math.floor(x)


def _snap_ceil(x: float) -> int:
    r = round(x)
    return int(r) if abs(x - r) < _SNAP_TOL else math.ceil(x)


def box_indices(grid: Grid, box: Box) -> tuple[np.ndarray, ...]:
    """Per-axis cell index arrays of the cells covered by ``box`` snapped outward.

    Indices wrap periodically. A box wider than the domain after snapping is an
    error, since it would cover some cells twice.
    """
    if len(box.lo) != grid.dim:
        raise ValueError(f"box has {len(box.lo)} axes, grid has {grid.dim}")
    h = grid.spacing
    out = []
    for lo, hi in zip(box.lo, box.hi):
        i0 = _snap_floor((lo - grid.origin) / h)
        i1 = _snap_ceil((hi - grid.origin) / h)
        if i1 == i0:
            i1 = i0 + 1  # degenerate box still touches one cell
        if i1 - i0 > grid.cells:
            raise ValueError(
                f"box [{lo}, {hi}] spans {i1 - i0} cells, domain has {grid.cells}: region larger than domain"
            )
        out.append(np.arange(i0, i1) % grid.cells)
    return tuple(out)


def box_slice(values: np.ndarray, grid: Grid, box: Box) -> np.ndarray:
    idx = box_indices(grid, box)
    return values[np.ix_(*idx)]


def time_indices(times: np.ndarray, box: Box) -> np.ndarray:
    span = max(1.0, abs(float(times[-1])))
    sel = (times >= box.t_lo - 1e-12 * span) & (times <= box.t_hi + 1e-12 * span)
    return np.nonzero(sel)[0]


def trapezoid_weights(times: np.ndarray) -> np.ndarray:
    """Quadrature weights of the trapezoid rule on ``times`` (zeros for one node)."""
    w = np.zeros(len(times))
    if len(times) > 1:
        dt = np.diff(times)
        w[:-1] += dt / 2
        w[1:] += dt / 2
    return w


# ---------------------------------------------------------------- norms

def lp_norm(f: ScalarField, p: float) -> float:
    if isinstance(p, str) and p.lower() in ("inf", "infinity"):
        p = math.inf
    if not (p >= 1):
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    a = np.abs(f.values)
    if math.isinf(p):
        return float(np.max(a))
    return float((f.grid.cell_volume * np.sum(a**p)) ** (1.0 / p))


def mixed_norm(s: SpaceTimeSeries, q1: float, q2: float) -> float:
    """``|| ||f(., t)||_{L^q1_x} ||_{L^q2_t}`` with trapezoid quadrature in time."""
    if not (q1 >= 1 and q2 >= 1):
        raise ValueError(f"exponents must be >= 1, got q1={q1}, q2={q2}")
    if len(s) < 2:
        raise ValueError("mixed_norm needs at least two snapshots (no temporal measure)")
    inner = np.array([lp_norm(f, q1) for f in s.fields])
    if math.isinf(q2):
        return float(np.max(inner))
    return float(np.sum(trapezoid_weights(s.times) * inner**q2) ** (1.0 / q2))


# ---------------------------------------------------------------- difference operators

def centered_diff(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(a, -1, axis) - np.roll(a, 1, axis)) / (2 * h)


def forward_diff(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Difference across face ``i+1/2`` along ``axis``."""
    return (np.roll(a, -1, axis) - a) / h


def face_divergence(fluxes: Sequence[np.ndarray], h: float) -> np.ndarray:
    """Cell divergence of face fluxes; ``fluxes[j]`` sits on faces ``i+1/2`` of axis j."""
    out = np.zeros_like(fluxes[0])
    for j, F in enumerate(fluxes):
        out = out + (F - np.roll(F, 1, j)) / h
    return out


def laplacian_array(a: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(a)
    for j in range(a.ndim):
        out = out + (np.roll(a, -1, j) - 2 * a + np.roll(a, 1, j))
    return out / (h * h)


def face_average(a: np.ndarray, axis: int) -> np.ndarray:
    return 0.5 * (a + np.roll(a, -1, axis))


def gradient(f: ScalarField) -> VectorField:
    h = f.grid.spacing
    return VectorField.from_arrays(f.grid, [centered_diff(f.values, j, h) for j in range(f.grid.dim)])


def divergence(g: VectorField) -> ScalarField:
    h = g.grid.spacing
    out = np.zeros(g.grid.shape)
    for j, a in enumerate(g.arrays()):
        out = out + centered_diff(a, j, h)
    return ScalarField(g.grid, out)


def laplacian(f):
    if isinstance(f, VectorField):
        return VectorField.from_arrays(f.grid, [laplacian_array(a, f.grid.spacing) for a in f.arrays()])
    return ScalarField(f.grid, laplacian_array(f.values, f.grid.spacing))


def diff_ops(f, kind: str):
    """Dispatch ``gradient`` / ``divergence`` / ``laplacian`` with rank checks."""
    if kind == "gradient":
        if not isinstance(f, ScalarField):
            raise TypeError("gradient expects a ScalarField")
        return gradient(f)
    if kind == "divergence":
        if not isinstance(f, VectorField):
            raise TypeError("divergence expects a VectorField")
        return divergence(f)
    if kind == "laplacian":
        if not isinstance(f, (ScalarField, VectorField)):
            raise TypeError("laplacian expects a ScalarField or VectorField")
        return laplacian(f)
    raise ValueError(f"unknown operator kind {kind!r}")


def inner(a, b) -> float:
    """Discrete L2 inner product of two scalar or two vector fields."""
    if isinstance(a, VectorField):
        return float(sum(np.sum(x * y) for x, y in zip(a.arrays(), b.arrays())) * a.grid.cell_volume)
    return float(np.sum(a.values * b.values) * a.grid.cell_volume)


# ---------------------------------------------------------------- level sets, oscillation

def _level_mask(values: np.ndarray, mu: float, k: float, sign: str) -> np.ndarray:
    if sign == "plus":
        return values > mu - k
    if sign == "minus":
        return values < mu + k
    raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")


def level_set_measure(f, mu: float, k: float, sign: str, region: Box | None = None) -> float:
    """Measure of ``{f > mu - k}`` (plus) or ``{f < mu + k}`` (minus) inside ``region``.

    For a :class:`SpaceTimeSeries` the spatial measures are integrated in time
    with the trapezoid rule over the snapshots inside the region's time window.
    """
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    grid = f.grid
    region = region or Box.full(grid)
    if isinstance(f, ScalarField):
        sub = box_slice(f.values, grid, region)
        return float(np.count_nonzero(_level_mask(sub, mu, k, sign)) * grid.cell_volume)
    ti = time_indices(f.times, region)
    if ti.size == 0:
        raise ValueError("region time window contains no snapshot")
    meas = np.array(
        [np.count_nonzero(_level_mask(box_slice(f.fields[i].values, grid, region), mu, k, sign)) for i in ti]
    )
    w = trapezoid_weights(f.times[ti])
    return float(np.sum(w * meas) * grid.cell_volume)


def essosc_box(s: SpaceTimeSeries, region: Box | None = None) -> tuple[float, float, float]:
    """Return ``(omega, mu_plus, mu_minus)`` over grid samples in a space-time box."""
    region = region or Box.full(s.grid)
    ti = time_indices(s.times, region)
    if ti.size == 0:
        raise ValueError("essosc_box: region contains no snapshot")
    idx = np.ix_(*box_indices(s.grid, region))
    hi = -math.inf
    lo = math.inf
    for i in ti:
        sub = s.fields[i].values[idx]
        hi = max(hi, float(np.max(sub)))
        lo = min(lo, float(np.min(sub)))
    return hi - lo, hi, lo


def box_axes(grid: Grid, box: Box) -> tuple[tuple[np.ndarray, ...], list[np.ndarray]]:
    """Wrapped cell indices and the matching unwrapped cell-centre coordinates per axis."""
    idx = box_indices(grid, box)
    h = grid.spacing
    coords = []
    for lo, ii in zip(box.lo, idx):
        i0 = _snap_floor((lo - grid.origin) / h)
        coords.append(grid.origin + (np.arange(i0, i0 + len(ii)) + 0.5) * h)
    return idx, coords
