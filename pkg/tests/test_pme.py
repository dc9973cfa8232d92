import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from kspme.field import Box, Grid, ScalarField, SpaceTimeSeries, VectorField
from kspme.pme import (
    CFLError,
    PhiSandwich,
    ScalarPmeProblem,
    barenblatt,
    barenblatt_constants,
    barenblatt_field,
    barenblatt_radius,
    cfl_bound,
    check_phi_bounds,
    evolve_scalar_pme,
    step_scalar_pme,
    weak_residual,
)

seeds = st.integers(0, 2**31 - 1)


@pytest.mark.parametrize("alpha,dim,mass", [(1.0, 2, 1.0), (2.0, 2, 0.7), (0.5, 3, 1.0), (1.5, 3, 2.0)])
def test_barenblatt_mass_by_radial_quadrature(alpha, dim, mass):
    t = 0.3
    R = barenblatt_radius(t, alpha, dim, mass)
    area = 2 * np.pi if dim == 2 else 4 * np.pi
    f = lambda r: area * r ** (dim - 1) * barenblatt(np.array([r] + [0.0] * (dim - 1)), t, alpha, dim, mass)
    m, _ = integrate.quad(f, 0, R, limit=200)
    assert m == pytest.approx(mass, abs=1e-6)


def test_barenblatt_support_and_rejects_t():
    R = barenblatt_radius(0.5, 1.0, 2)
    assert barenblatt(np.array([R * 1.0001, 0.0]), 0.5, 1.0, 2) == 0.0
    assert barenblatt(np.array([R * 0.99, 0.0]), 0.5, 1.0, 2) > 0.0
    with pytest.raises(ValueError):
        barenblatt(np.zeros(2), 0.0, 1.0, 2)


@given(st.floats(0.2, 5.0), st.floats(0.5, 2.0), st.floats(0.0, 1.5))
def test_barenblatt_self_similarity(s, t, r):
    alpha, dim = 1.0, 2
    beta = barenblatt_constants(alpha, dim, 1.0)[0]
    x = np.array([r, 0.3 * r])
    lhs = barenblatt(s**beta * x, s * t, alpha, dim)
    rhs = s ** (-dim * beta) * barenblatt(x, t, alpha, dim)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


def test_barenblatt_pde_residual_second_order():
    """n_t − Δ n^{1+α} by centred differences at an interior point, shrinking like h²."""
    alpha, dim, t = 1.0, 2, 0.4
    x0 = np.array([0.1, 0.05])
    errs = []
    for h in (0.02, 0.01):
        dt = h * h
        nt = (barenblatt(x0, t + dt, alpha, dim) - barenblatt(x0, t - dt, alpha, dim)) / (2 * dt)
        m = lambda x: barenblatt(x, t, alpha, dim) ** (1 + alpha)
        lap = sum(
            (m(x0 + h * e) - 2 * m(x0) + m(x0 - h * e)) / h**2 for e in np.eye(dim)
        )
        errs.append(abs(nt - lap))
    assert errs[1] < errs[0] / 3
    assert errs[1] < 1e-3


def test_constant_is_fixed_point():
    g = Grid(2, 16, 1.0)
    n = ScalarField.constant(g, 0.7)
    out = step_scalar_pme(n, ScalarPmeProblem(alpha=1.3), cfl_bound(n, ScalarPmeProblem(alpha=1.3)))
    assert np.array_equal(out.values, n.values)


@given(seeds, st.floats(0.0, 2.5), st.floats(0.0, 0.5), st.floats(0.05, 1.0))
def test_step_conserves_mass_and_positivity(seed, alpha, eps, sigma):
    g = Grid(2, 12, 1.0)
    rng = np.random.default_rng(seed)
    v = rng.random(g.shape) * (rng.random(g.shape) > 0.5)
    n = ScalarField(g, v)
    B = VectorField.from_arrays(g, [rng.normal(size=g.shape) for _ in range(2)])
    prob = ScalarPmeProblem(alpha=alpha, drift=B, epsilon=eps)
    out = step_scalar_pme(n, prob, cfl_bound(n, prob, sigma=sigma))
    assert np.min(out.values) >= 0.0
    m0, m1 = n.integral(), out.integral()
    assert abs(m1 - m0) <= 1e-13 * max(m0, 1e-300) or m0 == 0


def test_step_refuses_above_cfl_and_negative_input():
    g = Grid(2, 16, 1.0)
    n = ScalarField.constant(g, 1.0)
    prob = ScalarPmeProblem(alpha=1.0)
    limit = cfl_bound(n, prob, sigma=1.0)
    with pytest.raises(CFLError) as exc:
        step_scalar_pme(n, prob, 1.5 * limit)
    assert exc.value.limit == pytest.approx(limit)
    neg = np.ones(g.shape)
    neg[2, 3] = -1e-3
    with pytest.raises(ValueError, match="negative"):
        step_scalar_pme(ScalarField(g, neg), prob, 1e-6)


def test_barenblatt_run_error_small_and_converging():
    errs = []
    for N in (32, 64):
        g = Grid(2, N, 3.0, origin=-1.5)
        n0 = barenblatt_field(g, 0.01, 1.0)
        n1, _ = evolve_scalar_pme(n0, ScalarPmeProblem(alpha=1.0), 0.01, 0.06)
        exact = barenblatt_field(g, 0.06, 1.0)
        errs.append(np.sum(np.abs(n1.values - exact.values)) * g.cell_volume)
    assert errs[1] < errs[0] / 1.5
    assert errs[1] < 0.02


def test_evolve_hits_snapshot_times_exactly():
    g = Grid(2, 16, 2.0, origin=-1.0)
    n0 = barenblatt_field(g, 0.05, 1.0)
    _, snaps = evolve_scalar_pme(n0, ScalarPmeProblem(alpha=1.0), 0.05, 0.1, snapshot_times=[0.07, 0.1])
    assert [t for t, _ in snaps] == [0.07, 0.1]


# weak form


def _bump(g, center, radius):
    r2 = sum((x - c) ** 2 for x, c in zip(g.coords(), center))
    return np.where(r2 < radius**2, (1 - r2 / radius**2) ** 3, 0.0)


def test_weak_residual_constant_test_function_is_mass_balance():
    g = Grid(2, 32, 2.0, origin=-1.0)
    n0 = barenblatt_field(g, 0.02, 1.0)
    _, snaps = evolve_scalar_pme(n0, ScalarPmeProblem(alpha=1.0), 0.02, 0.04, snapshot_times=[0.02, 0.03, 0.04])
    s = SpaceTimeSeries([t for t, _ in snaps], [f for _, f in snaps])
    phi = ScalarField.constant(g, 1.0)
    # φ ≡ 1 everywhere: no flux, the residual is the total mass change (zero)
    assert abs(weak_residual(s, None, 1.0, phi)) < 1e-13


def test_weak_residual_rejects_support_in_margin():
    g = Grid(2, 16, 1.0)
    s = SpaceTimeSeries([0.0, 0.1], [ScalarField.constant(g, 1.0)] * 2)
    phi = ScalarField.constant(g, 1.0)
    with pytest.raises(ValueError, match="margin"):
        weak_residual(s, None, 1.0, phi, box=Box((0.25, 0.25), (0.75, 0.75)))


def test_weak_residual_heat_kernel_refines():
    """α = 0 closed-form heat kernel: residual shrinks under (h, dt) refinement."""

    def heat(g, t):
        r2 = sum(x * x for x in g.coords())
        return ScalarField(g, np.exp(-r2 / (4 * t)) / (4 * np.pi * t))

    res = []
    for N in (32, 64):
        g = Grid(2, N, 4.0, origin=-2.0)
        ts = np.linspace(0.05, 0.1, N // 2 + 1)
        s = SpaceTimeSeries(ts, [heat(g, t) for t in ts])
        phi = ScalarField(g, _bump(g, (0.2, 0.0), 0.8))
        box = Box((-1.2, -1.2), (1.2, 1.2))
        res.append(abs(weak_residual(s, None, 0.0, phi, box)))
    assert res[1] < res[0] / 2
    assert res[1] < 1e-3


def test_weak_residual_of_solver_trajectory_refines():
    res = []
    for N in (32, 64):
        g = Grid(2, N, 3.0, origin=-1.5)
        n0 = barenblatt_field(g, 0.02, 1.0)
        times = list(np.linspace(0.02, 0.05, 7))
        _, snaps = evolve_scalar_pme(n0, ScalarPmeProblem(alpha=1.0), 0.02, 0.05, snapshot_times=times)
        s = SpaceTimeSeries([t for t, _ in snaps], [f for _, f in snaps])
        phi = ScalarField(g, _bump(g, (0.3, 0.1), 0.6))
        res.append(abs(weak_residual(s, None, 1.0, phi)))
    assert res[1] < res[0]


# generalized nonlinearity


def test_phi_bounds_pure_power():
    s = np.geomspace(1e-3, 1e3, 200)
    rep = check_phi_bounds(PhiSandwich.from_callables(lambda x: x**2, lambda x: 2 * x, s))
    assert rep.ok
    assert rep.implied_alpha0 == pytest.approx(1.0, abs=1e-14)
    assert rep.implied_alpha1 == pytest.approx(1.0, abs=1e-14)


def test_phi_bounds_linear_and_mixed():
    s = np.geomspace(1e-4, 1e4, 400)
    lin = check_phi_bounds(PhiSandwich.from_callables(lambda x: x, lambda x: np.ones_like(x), s))
    assert lin.implied_alpha0 == pytest.approx(0.0, abs=1e-14) and lin.implied_alpha1 == pytest.approx(0.0, abs=1e-14)
    mixed = check_phi_bounds(PhiSandwich.from_callables(lambda x: x**2 + x**3, lambda x: 2 * x + 3 * x**2, s, 1.0, 2.0))
    assert mixed.ok
    # sφ/Φ = (2 + 3s)/(1 + s) runs over (2, 3): implied interval approaches [1, 2]
    assert 1.0 <= mixed.implied_alpha0 < 1.001 and 1.999 < mixed.implied_alpha1 <= 2.0


def test_phi_bounds_detects_violation_and_rejects_nonpositive():
    s = np.geomspace(0.1, 10, 50)
    bad = check_phi_bounds(PhiSandwich.from_callables(lambda x: x**3, lambda x: 3 * x**2, s, 0.0, 1.0))
    assert not bad.upper_ok
    with pytest.raises(ValueError):
        check_phi_bounds(PhiSandwich(s, np.zeros_like(s), np.ones_like(s)))
