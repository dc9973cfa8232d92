import numpy as np
import pytest
from hypothesis import given, strategies as st

from kspme.field import Grid, ScalarField, VectorField, centered_diff
from kspme.pme import ScalarPmeProblem, cfl_bound, step_scalar_pme
from kspme.system import (
    InvariantError,
    ModelParams,
    SystemState,
    chemotaxis_flux,
    check_state,
    leray_project,
    spectral_divergence,
    step_oxygen,
    step_system,
    stokes_step,
    system_cfl,
    vorticity,
)

seeds = st.integers(0, 2**31 - 1)


def _rand_vec(g, rng):
    return VectorField.from_arrays(g, [rng.normal(size=g.shape) for _ in range(g.dim)])


def _zero_vec(g):
    return VectorField.from_arrays(g, [np.zeros(g.shape) for _ in range(g.dim)])


# Leray projection


def test_gradient_projects_to_zero():
    g = Grid(2, 32, 1.0)
    x, y = g.coords()
    k = 2 * np.pi
    # ∇(sin(kx)cos(2ky)) written out analytically
    u = VectorField.from_arrays(g, [k * np.cos(k * x) * np.cos(2 * k * y), -2 * k * np.sin(k * x) * np.sin(2 * k * y)])
    p = leray_project(u)
    assert max(np.max(np.abs(a)) for a in p.arrays()) < 1e-12


def test_divergence_free_field_unchanged():
    g = Grid(2, 32, 1.0)
    x, y = g.coords()
    k = 2 * np.pi
    # curl of the stream function sin(kx)sin(ky)
    u = VectorField.from_arrays(g, [k * np.sin(k * x) * np.cos(k * y), -k * np.cos(k * x) * np.sin(k * y)])
    p = leray_project(u)
    for a, b in zip(p.arrays(), u.arrays()):
        assert np.max(np.abs(a - b)) < 1e-12


@given(seeds, st.sampled_from([(2, 16), (2, 17), (3, 8)]))
def test_projection_idempotent_and_divergence_free(seed, shape):
    g = Grid(shape[0], shape[1], 1.0)
    u = _rand_vec(g, np.random.default_rng(seed))
    p = leray_project(u)
    pp = leray_project(p)
    assert max(np.max(np.abs(a - b)) for a, b in zip(p.arrays(), pp.arrays())) < 1e-12
    assert np.max(np.abs(spectral_divergence(p).values)) < 1e-12


def test_centred_divergence_of_smooth_projection_is_second_order():
    errs = []
    for N in (32, 64):
        g = Grid(2, N, 1.0)
        x, y = g.coords()
        k = 2 * np.pi
        # mode (1, 2): the centred and spectral divergence symbols are not parallel here
        u = VectorField.from_arrays(g, [np.sin(k * x + 2 * k * y), np.zeros(g.shape)])
        a = leray_project(u).arrays()
        div = centered_diff(a[0], 0, g.spacing) + centered_diff(a[1], 1, g.spacing)
        errs.append(np.max(np.abs(div)))
    assert errs[1] < errs[0] / 3.5


# Stokes


def test_stokes_single_mode_decay():
    g = Grid(2, 32, 1.0)
    x, y = g.coords()
    kx = 2 * np.pi * 3
    u = VectorField.from_arrays(g, [np.zeros(g.shape), np.sin(kx * x)])
    dt = 1e-3
    out = stokes_step(u, ScalarField.constant(g, 0.0), ModelParams(grad_phi=(0.0, 0.0)), dt)
    np.testing.assert_allclose(out.arrays()[1], np.exp(-kx**2 * dt) * np.sin(kx * x), atol=1e-13)
    assert np.max(np.abs(out.arrays()[0])) < 1e-14


def test_stokes_constant_forcing_drives_mean_only():
    g = Grid(2, 16, 1.0)
    n = ScalarField.constant(g, 2.0)
    out = stokes_step(_zero_vec(g), n, ModelParams(grad_phi=(0.0, 0.5)), 0.1)
    # −n∇φ = (0, −1) uniformly: only the zero mode responds, and it grows linearly in time
    np.testing.assert_allclose(out.arrays()[1], -0.1, atol=1e-14)
    np.testing.assert_allclose(out.arrays()[0], 0.0, atol=1e-14)


@given(seeds)
def test_unforced_stokes_energy_nonincreasing(seed):
    g = Grid(2, 16, 1.0)
    u = leray_project(_rand_vec(g, np.random.default_rng(seed)))
    e0 = sum(np.sum(a * a) for a in u.arrays())
    out = stokes_step(u, ScalarField.constant(g, 0.0), ModelParams(), 1e-3)
    e1 = sum(np.sum(a * a) for a in out.arrays())
    assert e1 <= e0 * (1 + 1e-14)


# chemotaxis and oxygen


def test_chemotaxis_flux_linear_c():
    g = Grid(2, 16, 1.0)
    x, _ = g.coords()
    # c = 0.1 + 0.5x is not periodic; use a sine with constant slope at the test faces instead
    c = ScalarField(g, 1.0 + 0.2 * np.sin(2 * np.pi * x))
    n = ScalarField.constant(g, 2.0)
    f = chemotaxis_flux(n, c, ModelParams(chi=(3.0,), q=2.0))
    h = g.spacing
    slope = (np.roll(c.values, -1, 0) - c.values) / h
    np.testing.assert_allclose(f.arrays()[0], 3.0 * 4.0 * slope, rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(f.arrays()[1], 0.0, atol=1e-14)


def test_chemotaxis_flux_zero_where_empty():
    g = Grid(2, 16, 1.0)
    x, _ = g.coords()
    c = ScalarField(g, 1.0 + np.sin(2 * np.pi * x))
    f = chemotaxis_flux(ScalarField.constant(g, 0.0), c, ModelParams(epsilon=0.3))
    assert all(np.max(np.abs(a)) == 0.0 for a in f.arrays())


def test_oxygen_uniform_consumption():
    g = Grid(2, 16, 1.0)
    c = ScalarField.constant(g, 1.0)
    n = ScalarField.constant(g, 1.0)
    dt = 1e-4
    out = step_oxygen(c, n, _zero_vec(g), ModelParams(kappa=(0.0, 1.0)), dt)
    np.testing.assert_allclose(out.values, 1.0 - dt, rtol=1e-15)


def test_oxygen_requires_kappa_vanishing_at_zero():
    g = Grid(2, 16, 1.0)
    c = ScalarField.constant(g, 1.0)
    with pytest.raises(ValueError):
        step_oxygen(c, c, _zero_vec(g), ModelParams(kappa=(0.1, 1.0)), 1e-4)


@given(seeds, st.floats(0.1, 1.0))
def test_oxygen_maximum_principle(seed, sigma):
    g = Grid(2, 12, 1.0)
    rng = np.random.default_rng(seed)
    c = ScalarField(g, rng.random(g.shape))
    n = ScalarField(g, 3 * rng.random(g.shape))
    u = leray_project(_rand_vec(g, rng))
    params = ModelParams(kappa=(0.0, 1.0, 0.5))
    state = SystemState(n, c, u)
    out = step_oxygen(c, n, u, params, system_cfl(state, params, sigma))
    assert np.min(out.values) >= 0.0
    assert np.max(out.values) <= np.max(c.values) + 1e-15


# coupled step


def _gauss_state(g, rng=None):
    r2 = sum((x - 0.5) ** 2 for x in g.coords())
    n = ScalarField(g, np.exp(-r2 / 0.02))
    c = ScalarField(g, 0.5 + 0.3 * np.cos(2 * np.pi * g.coords()[0]))
    u = leray_project(_rand_vec(g, rng)) if rng is not None else _zero_vec(g)
    return SystemState(n, c, u)


def test_zero_density_decouples():
    g = Grid(2, 16, 1.0)
    s0 = _gauss_state(g)
    s0 = SystemState(ScalarField.constant(g, 0.0), s0.c, s0.u)
    params = ModelParams(grad_phi=(0.0, 1.0))
    dt = system_cfl(s0, params)
    s1 = step_system(s0, params, dt)
    assert np.max(s1.n.values) == 0.0
    assert all(np.max(np.abs(a)) == 0.0 for a in s1.u.arrays())
    heat_only = step_oxygen(s0.c, s0.n, s0.u, params, dt)
    assert np.array_equal(s1.c.values, heat_only.values)


def test_no_chemotaxis_no_flow_matches_scalar_pme():
    g = Grid(2, 16, 1.0)
    s = _gauss_state(g)
    params = ModelParams(alpha=1.0, chi=(0.0,), grad_phi=(0.0, 0.0))
    n = s.n
    prob = ScalarPmeProblem(alpha=1.0)
    for _ in range(5):
        dt = min(system_cfl(s, params), cfl_bound(n, prob))
        s = step_system(s, params, dt)
        n = step_scalar_pme(n, prob, dt)
    assert np.max(np.abs(s.n.values - n.values)) <= 1e-13


@given(seeds, st.integers(0, 15), st.integers(0, 15))
def test_step_translation_equivariant(seed, sx, sy):
    g = Grid(2, 16, 1.0)
    rng = np.random.default_rng(seed)
    s = _gauss_state(g, rng)
    params = ModelParams(grad_phi=(0.0, 1.0), chi=(1.0,))

    def roll(a):
        return np.roll(a, (sx, sy), axis=(0, 1))

    t = SystemState(
        ScalarField(g, roll(s.n.values)),
        ScalarField(g, roll(s.c.values)),
        VectorField.from_arrays(g, [roll(a) for a in s.u.arrays()]),
    )
    dt = system_cfl(s, params)
    a, b = step_system(s, params, dt), step_system(t, params, dt)
    assert np.array_equal(roll(a.n.values), b.n.values)
    assert np.array_equal(roll(a.c.values), b.c.values)
    for ua, ub in zip(a.u.arrays(), b.u.arrays()):
        assert np.max(np.abs(roll(ua) - ub)) <= 1e-12 * max(1.0, np.max(np.abs(ua)))


def test_coupled_step_invariants_and_mass():
    g = Grid(2, 16, 1.0)
    s = _gauss_state(g, np.random.default_rng(1))
    params = ModelParams(grad_phi=(0.0, 1.0))
    m0 = s.n.integral()
    cap = float(np.max(s.c.values))
    for _ in range(20):
        s = step_system(s, params, system_cfl(s, params), c_cap=cap)
    assert abs(s.n.integral() - m0) <= 1e-12 * m0
    assert np.min(s.n.values) >= 0 and np.min(s.c.values) >= 0


def test_check_state_flags_violations():
    g = Grid(2, 16, 1.0)
    s = _gauss_state(g)
    bad = np.array(s.n.values)
    bad[0, 0] = -1e-3
    with pytest.raises(InvariantError, match="negative"):
        check_state(SystemState(ScalarField(g, bad), s.c, s.u), 1.0)
    with pytest.raises(InvariantError, match="exceeded"):
        check_state(s, 0.1)
    x, _ = g.coords()
    u = VectorField.from_arrays(g, [np.sin(2 * np.pi * x), np.zeros(g.shape)])
    with pytest.raises(InvariantError, match="divergence"):
        check_state(SystemState(s.n, s.c, u), 1.0)


def test_vorticity_examples():
    g = Grid(2, 32, 1.0)
    x, y = g.coords()
    k = 2 * np.pi
    # u = (sin ky, 0): curl = −k cos ky, centred difference gives −sin(kh)/h cos ky
    u = VectorField.from_arrays(g, [np.sin(k * y), np.zeros(g.shape)])
    h = g.spacing
    np.testing.assert_allclose(vorticity(u).values, -np.sin(k * h) / h * np.cos(k * y), atol=1e-12)
    g3 = Grid(3, 8, 1.0)
    const = VectorField.from_arrays(g3, [np.ones(g3.shape)] * 3)
    assert all(np.max(np.abs(a)) == 0 for a in vorticity(const).arrays())
