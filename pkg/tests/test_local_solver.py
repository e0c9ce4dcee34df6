import numpy as np
import pytest

from frontlab import local_solver as L
from frontlab import problem as P
from frontlab.errors import CflViolation, DegenerateDomain, OutOfHorizon, PositivityLoss


@pytest.fixture(scope="module")
def stefan_short():
    return P.validate(P.symmetric_stefan(T=0.25))


def quadratic_state(n=128, g=-1.0, h=1.0):
    xi = np.arange(n + 1) / n
    x = (1.0 - xi) * g + xi * h
    w = 1.0 - x**2
    w[0] = w[-1] = 0.0
    return L.FixedDomainState(t=0.0, g=g, h=h, values=w)


def test_transform_to_physical():
    st = quadratic_state()
    assert L.transform_to_physical(L.FixedDomainState(0, -1, 1, st.values), 0.5) == 0.0
    assert L.transform_to_physical(L.FixedDomainState(0, -1, 3, st.values), 0.25) == 0.0
    assert L.transform_to_physical(L.FixedDomainState(0, -2, 2, st.values), 1.0) == 2.0


def test_boundary_velocities_quadratic_oracle():
    # v(x) = 1 - x^2 has v_x(-1) = 2 and v_x(1) = -2: speeds (-2, 2) at mu = 1.
    st = quadratic_state(n=256)
    g_dot, h_dot = L.boundary_velocities(st, L.INERT_KNOBS, mu=1.0)
    assert g_dot == pytest.approx(-2.0, abs=1e-10)
    assert h_dot == pytest.approx(2.0, abs=1e-10)


def test_boundary_velocities_zero_interior_leaves_shift():
    n = 64
    st = L.FixedDomainState(0.0, -1.0, 1.0, np.zeros(n + 1))
    knobs = L.PerturbationKnobs(A=0.0, B=1.5, gamma1=0.4, eps=0.1)
    g_dot, h_dot = L.boundary_velocities(st, knobs, mu=1.0)
    shift = 1.5 * 0.1**0.4
    assert g_dot == pytest.approx(-shift, rel=1e-15)
    assert h_dot == pytest.approx(shift, rel=1e-15)


def test_boundary_velocities_symmetric_is_exactly_antisymmetric():
    st = quadratic_state(n=128)
    g_dot, h_dot = L.boundary_velocities(st, L.INERT_KNOBS, mu=0.7)
    assert g_dot == -h_dot


def test_boundary_velocities_degenerate_domain():
    st = L.FixedDomainState(0.0, 0.0, 1e-9, np.zeros(65))
    with pytest.raises(DegenerateDomain):
        L.boundary_velocities(st, L.INERT_KNOBS, mu=1.0)


def test_step_preserves_symmetry_exactly(stefan_short):
    state = L.initial_state(stefan_short, 128)
    for _ in range(50):
        state = L.step(state, 1e-4, stefan_short)
    assert state.g + state.h == 0.0
    assert np.array_equal(state.values, state.values[::-1])


def test_step_one_step_boundary_growth(stefan_short):
    # |v0'(h0)| = 2V/h0, so h moves at mu*2V/h0 to leading order.
    dt = 1e-5
    state = L.step(L.initial_state(stefan_short, 256), dt, stefan_short)
    assert state.h == pytest.approx(1.0 + dt * 2.0, abs=1e-7)
    assert state.g == pytest.approx(-1.0 - dt * 2.0, abs=1e-7)


def test_step_cfl_violation(stefan_short):
    state = L.initial_state(stefan_short, 128)
    with pytest.raises(CflViolation):
        L.step(state, 0.1, stefan_short)


def test_step_positivity_loss(stefan_short):
    state = L.initial_state(stefan_short, 64)
    with pytest.raises(PositivityLoss):
        st = state
        for _ in range(200):
            st = L.step(st, 1e-3, stefan_short, source=lambda t, x: -30.0 * np.ones_like(x),
                        velocity_override=(0.0, 0.0))


def test_manufactured_solution_convergence(stefan_short):
    # Frozen boundaries, forcing chosen so v*(t,x) = exp(-t)(1 - x^2) is exact.
    vconf = P.validate(P.symmetric_stefan(T=0.1))

    def exact(t, x):
        return np.exp(-t) * (1.0 - x**2)

    def forcing(t, x):
        return -np.exp(-t) * (1.0 - x**2) + 2.0 * np.exp(-t)

    errors = []
    cells = [32, 64, 128, 256]
    for n in cells:
        sol = L.solve(vconf, n_cells=n, dt=0.1 / n, source=forcing,
                      velocity_override=(0.0, 0.0))
        x, w = sol.snapshot_nodes(len(sol.snapshots) - 1)
        errors.append(np.max(np.abs(w - exact(0.1, x))))
    order = np.polyfit(np.log(1.0 / np.asarray(cells, float)), np.log(errors), 1)[0]
    assert order >= 1.8


def test_solve_monotone_boundaries(stefan_short):
    sol = L.solve(stefan_short, n_cells=128, dt=2e-4)
    assert np.all(np.diff(sol.boundary_h) > 0.0)
    assert np.all(np.diff(sol.boundary_g) < 0.0)


def test_solve_eps_zero_matches_inert_bitwise(stefan_short):
    for preset in ("i1", "i2"):
        knobs = L.preset_knobs(preset, eps=0.0)
        a = L.solve(stefan_short, knobs, n_cells=64, dt=5e-4)
        b = L.solve(stefan_short, L.INERT_KNOBS, n_cells=64, dt=5e-4)
        assert np.array_equal(a.boundary_h, b.boundary_h)
        assert np.array_equal(a.boundary_g, b.boundary_g)
        assert all(
            np.array_equal(sa.values, sb.values)
            for sa, sb in zip(a.snapshots, b.snapshots)
        )


def test_solve_reproducible_bitwise(stefan_short):
    a = L.solve(stefan_short, n_cells=64, dt=5e-4)
    b = L.solve(stefan_short, n_cells=64, dt=5e-4)
    assert np.array_equal(a.boundary_h, b.boundary_h)
    assert all(np.array_equal(sa.values, sb.values) for sa, sb in zip(a.snapshots, b.snapshots))


def test_solve_symmetric_run_exact(stefan_short):
    sol = L.solve(stefan_short, n_cells=128, dt=2e-4)
    assert np.max(np.abs(sol.boundary_g + sol.boundary_h)) == 0.0
    for s in sol.snapshots:
        assert np.array_equal(s.values, s.values[::-1])
        assert np.min(s.values) >= 0.0


def test_solve_perturbation_sandwich():
    vconf = P.validate(P.symmetric_stefan(T=0.4))
    kw = dict(n_cells=1024, dt=1e-4)
    upper = L.solve(vconf, L.preset_knobs("i1", 0.05), **kw)
    lower = L.solve(vconf, L.preset_knobs("i2", 0.05), **kw)
    mid = L.solve(vconf, L.INERT_KNOBS, **kw)
    ts = np.linspace(0.0, 0.4, 33)
    assert np.all(lower.g_of(ts) >= mid.g_of(ts) - 1e-12)
    assert np.all(mid.g_of(ts) >= upper.g_of(ts) - 1e-12)
    assert np.all(lower.h_of(ts) <= mid.h_of(ts) + 1e-12)
    assert np.all(mid.h_of(ts) <= upper.h_of(ts) + 1e-12)
    xs = np.linspace(-2.5, 2.5, 1024)
    for t in ts:
        assert np.max(lower.sample(t, xs) - mid.sample(t, xs)) <= 1e-6
        assert np.max(mid.sample(t, xs) - upper.sample(t, xs)) <= 1e-6


def test_solve_mass_balance_residual_shrinks():
    vconf = P.validate(P.symmetric_stefan(T=0.25))

    def residual(sol):
        masses = [np.trapezoid(*reversed(sol.snapshot_nodes(k))) for k in range(len(sol.snapshots))]
        masses = np.asarray(masses)
        ts = sol.snapshot_times
        return np.max(np.abs(masses - masses[0] + sol.h_of(ts) - sol.g_of(ts) - 2.0))

    coarse = residual(L.solve(vconf, n_cells=256, dt=4e-4))
    fine = residual(L.solve(vconf, n_cells=512, dt=2e-4))
    assert coarse < 1e-3
    assert fine < coarse / 2.5


def test_solve_mu_comparison(stefan_short):
    cfg2 = P.validate(P.ProblemConfig(mu=2.0, T=0.25))
    slow = L.solve(stefan_short, n_cells=128, dt=2e-4)
    fast = L.solve(cfg2, n_cells=128, dt=2e-4)
    ts = np.linspace(0.0, 0.25, 26)
    assert np.all(slow.h_of(ts) <= fast.h_of(ts) + 10.0 * 2e-4)


def test_sample_semantics(stefan_short):
    sol = L.solve(stefan_short, n_cells=128, dt=2e-4)
    assert sol.sample(0.0, 0.0) == pytest.approx(1.0, abs=1e-12)
    t = 0.2
    assert sol.sample(t, float(sol.g_of(t))) == 0.0
    assert sol.sample(t, float(sol.g_of(t)) - 1.0) == 0.0
    assert sol.sample(t, float(sol.h_of(t)) + 0.3) == 0.0
    assert sol.sample(t, 0.0) > 0.0
    with pytest.raises(OutOfHorizon):
        sol.sample(0.26, 0.0)


def test_knobs_validation():
    with pytest.raises(ValueError):
        L.PerturbationKnobs(A=-1.0)
    with pytest.raises(ValueError):
        L.PerturbationKnobs(gamma1=0.6)
    with pytest.raises(ValueError):
        L.preset_knobs("i3", 0.1)


def test_solve_rejects_invalid_config():
    bad = P.validate(P.ProblemConfig(initial=P.InitialDataSpec(V=0.0)))
    with pytest.raises(ValueError):
        L.solve(bad, n_cells=64, dt=1e-3)
