from math import factorial

import numpy as np
import pytest

from epcircle import equations as eq
from epcircle import evolution as ev
from epcircle.oracles import burgers_characteristics
from epcircle.spectral import DegenerateFlowError, FlowMap, GaugeError, Grid, GridFunction

PRESETS = ["burgers", "ch", "much", "dp", "mudp", "hs", "muburgers"]
G = Grid(64)
X = G.points


def spec(name):
    return eq.preset(name).spec


# right-hand sides ------------------------------------------------------------


def test_rhs_burgers_cos():
    rhs = ev.rhs_momentum(spec("burgers"), G.function(np.cos(X)))
    np.testing.assert_allclose(rhs.values, 1.5 * np.sin(2 * X), atol=1e-14)


def test_rhs_dp_sine():
    m = eq.momentum(spec("dp"), G.function(np.sin(X)))
    np.testing.assert_allclose(ev.rhs_momentum(spec("dp"), m).values, -4 * np.sin(2 * X), atol=1e-12)


@pytest.mark.parametrize("name", PRESETS)
def test_constant_state_is_steady(name):
    s = spec(name)
    u = G.function(np.full(G.n, 0.9))
    m = eq.momentum(s, u)
    rhs = ev.rhs_momentum(s, m, 0.9)
    assert np.max(np.abs(rhs.values)) < 1e-15


def test_rhs_requires_gauge_for_fixed_mean():
    with pytest.raises(ValueError):
        ev.rhs_momentum(spec("hs"), G.function(np.sin(X)))


def test_velocity_tendency_muburgers_is_burgers():
    # in the fixed-mean gauge u_t = -u u'
    s = spec("muburgers")
    u = G.function(0.4 + 0.3 * np.sin(X) + 0.1 * np.cos(2 * X))
    ut = ev.velocity_tendency(s, eq.momentum(s, u), 0.4, dealias=False).values
    np.testing.assert_allclose(ut, -u.values * G.deriv_array(u.values), atol=1e-13)


# Eulerian stepping -----------------------------------------------------------


def test_constant_flow_rotates_rigidly():
    s = spec("ch")
    cfg = ev.IntegratorConfig(dt=0.01, t_end=0.5)
    state = ev.initial_state(s, G.function(np.full(G.n, 0.7)))
    for _ in range(50):
        state = ev.step(s, state, cfg)
    np.testing.assert_allclose(state.u.values, 0.7, atol=1e-15)
    np.testing.assert_allclose(state.flow.displacement, 0.7 * 0.5, atol=1e-13)
    np.testing.assert_allclose(state.flow.derivative, 1.0, atol=1e-13)


def lagrange_series(u0, c, t, terms=5):
    """``u = sum_k (-c t)^k / (k+1)! d^k (u0^(k+1))``, the Taylor series of the characteristics solution."""
    out = np.zeros_like(u0)
    for k in range(terms):
        power = u0 ** (k + 1)
        term = G.deriv_array(power, k) if k else power
        out += (-c * t) ** k / factorial(k + 1) * term
    return out


def test_lagrange_series_matches_characteristics():
    u0 = 0.1 * np.sin(X)
    exact = burgers_characteristics(lambda s: 0.1 * np.sin(s), X, 0.05)
    np.testing.assert_allclose(lagrange_series(u0, 3.0, 0.05, terms=8), exact, atol=1e-13)


def test_one_burgers_step_matches_taylor():
    s = spec("burgers")
    dt = 1e-3
    u0 = 0.1 * np.sin(X)
    state = ev.step(s, ev.initial_state(s, G.function(u0)), ev.IntegratorConfig(dt=dt, t_end=dt))
    np.testing.assert_allclose(state.u.values, lagrange_series(u0, 3.0, dt), atol=1e-15)


def test_ch_ten_steps_conserve_momentum():
    s = spec("ch")
    cfg = ev.IntegratorConfig(dt=1e-3, t_end=1e-2)
    state = ev.initial_state(s, G.function(1 + 0.2 * np.cos(X)))
    m0 = state.m.values.sum()
    for _ in range(10):
        state = ev.step(s, state, cfg)
    assert abs(state.m.values.sum() - m0) <= 1e-10 * (1 + abs(m0))


def test_step_propagates_gauge_errors():
    s = spec("hs")
    cfg = ev.IntegratorConfig(dt=1e-3, t_end=1e-3)
    bad = ev.SimulationState(0.0, G.function(np.zeros(G.n)), G.function(np.ones(G.n)), FlowMap.identity(G), 0.0)
    with pytest.raises(GaugeError):
        ev.step(s, bad, cfg)


def test_integrate_sign_condition_completes():
    g = Grid(128)
    cfg = ev.IntegratorConfig(dt=2e-3, t_end=5.0, record_every=100)
    result = ev.integrate(spec("ch"), g.function(1 + 0.1 * np.sin(g.points)), cfg)
    assert result.verdict.status == ev.COMPLETED
    assert result.series.times[-1] == pytest.approx(5.0)
    trajectory, series, verdict = result
    assert len(trajectory) == len(series)


def test_integrate_breaking_data_stops():
    g = Grid(128)
    cfg = ev.IntegratorConfig(dt=2e-3, t_end=5.0, record_every=50)
    result = ev.integrate(spec("ch"), g.function(np.sin(g.points)), cfg)
    assert result.verdict.status == ev.BREAKDOWN
    assert "gamma'" in result.verdict.reason
    assert result.series.times[-1] == pytest.approx(result.verdict.t)


def test_hs_keeps_zero_mean():
    g = Grid(128)
    cfg = ev.IntegratorConfig(dt=2e-3, t_end=1.0, record_every=50)
    result = ev.integrate(spec("hs"), g.function(np.sin(g.points)), cfg)
    assert result.verdict.status == ev.COMPLETED
    for state in result.trajectory:
        assert abs(np.mean(state.u.values)) < 1e-15


@pytest.mark.parametrize("name", ["hs", "muburgers"])
def test_gauge_consistency(name):
    u0 = G.function(0.25 + 0.3 * np.sin(X) + 0.1 * np.cos(2 * X))
    result = ev.integrate(spec(name), u0, ev.IntegratorConfig(dt=1e-3, t_end=0.3, record_every=50))
    for state in result.trajectory:
        assert abs(np.mean(state.m.values)) <= 1e-10
        assert abs(np.mean(state.u.values) - 0.25) <= 1e-12


def test_temporal_convergence_rate():
    s = spec("ch")
    u0 = G.function(np.sin(X))

    def final(dt):
        return ev.integrate(s, u0, ev.IntegratorConfig(dt=dt, t_end=0.4, record_every=1000)).final.u.values

    ref = final(2.5e-4)
    e1 = np.max(np.abs(final(4e-3) - ref))
    e2 = np.max(np.abs(final(2e-3) - ref))
    assert 16 * 0.8 <= e1 / e2 <= 16 * 1.2


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        ev.IntegratorConfig(dt=0, t_end=1)
    with pytest.raises(ValueError):
        ev.IntegratorConfig(dt=0.1, t_end=-1)
    with pytest.raises(ValueError):
        ev.IntegratorConfig(dt=0.1, t_end=1, breakdown_c1=0)
    with pytest.raises(ValueError):
        ev.IntegratorConfig(dt=0.1, t_end=1, scheme="euler")
    assert ev.IntegratorConfig(dt=0.1, t_end=1.0).n_steps == 10


# Lagrangian backend ----------------------------------------------------------


def test_rhs_lagrangian_rigid_rotation():
    gamma = FlowMap.from_displacement(G, np.full(G.n, 0.4))
    F = ev.rhs_lagrangian(spec("ch"), gamma, G.function(np.full(G.n, 0.4)))
    assert np.max(np.abs(F.values)) < 1e-14


def test_rhs_lagrangian_at_identity_ch_cos():
    s = spec("ch")
    u = G.function(np.cos(X))
    F = ev.rhs_lagrangian(s, FlowMap.identity(G), u).values
    ut = ev.velocity_tendency(s, eq.momentum(s, u)).values
    np.testing.assert_allclose(F, ut + u.values * G.deriv_array(u.values), atol=1e-11)


@pytest.mark.parametrize("name", PRESETS)
def test_rhs_lagrangian_assemblies_agree(name):
    s = spec(name)
    g = Grid(128)
    x = g.points
    gamma = FlowMap.from_displacement(g, 0.3 + 0.2 * np.sin(x) + 0.05 * np.cos(2 * x))
    v = g.function(0.5 + 0.3 * np.cos(x) + 0.1 * np.sin(3 * x))
    a = ev.rhs_lagrangian(s, gamma, v, "conjugated").values
    b = ev.rhs_lagrangian(s, gamma, v, "eulerian").values
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_rhs_lagrangian_degenerate_flow():
    folded = FlowMap(G, 1.5 * np.sin(X), 1 + 1.5 * np.cos(X))
    with pytest.raises(DegenerateFlowError, match="flow map degenerate"):
        ev.rhs_lagrangian(spec("ch"), folded, G.function(np.ones(G.n)))


def test_rhs_lagrangian_unknown_assembly():
    with pytest.raises(ValueError):
        ev.rhs_lagrangian(spec("ch"), FlowMap.identity(G), G.function(np.ones(G.n)), "other")


def test_lagrangian_constant_flow():
    cfg = ev.IntegratorConfig(dt=0.01, t_end=0.3, record_every=10)
    result = ev.integrate_lagrangian(spec("dp"), G.function(np.full(G.n, -0.5)), cfg)
    final = result.final
    np.testing.assert_allclose(final.flow.displacement, -0.15, atol=1e-13)
    np.testing.assert_allclose(final.u.values, -0.5, atol=1e-14)


@pytest.mark.parametrize("name", ["ch", "dp", "much", "hs"])
def test_backends_agree(name):
    u0 = G.function(0.5 + 0.2 * np.cos(X))
    cfg = ev.IntegratorConfig(dt=2e-3, t_end=0.3, record_every=50)
    a = ev.integrate(spec(name), u0, cfg)
    b = ev.integrate_lagrangian(spec(name), u0, cfg)
    for x, y in zip(a.trajectory, b.trajectory):
        assert np.max(np.abs(x.u.values - y.u.values)) <= 1e-10


def test_lagrangian_burgers_matches_characteristics():
    cfg = ev.IntegratorConfig(dt=1e-3, t_end=1.0, record_every=250)
    result = ev.integrate_lagrangian(spec("burgers"), G.function(0.1 * np.sin(X)), cfg)
    for state in result.trajectory:
        exact = burgers_characteristics(lambda s: 0.1 * np.sin(s), X, state.t)
        assert np.max(np.abs(state.u.values - exact)) <= 1e-6


def test_lagrangian_records_particle_slopes():
    cfg = ev.IntegratorConfig(dt=1e-2, t_end=0.1, record_every=5)
    result = ev.integrate_lagrangian(spec("ch"), G.function(np.sin(X)), cfg)
    state = result.final
    assert state.particle_ux is not None
    expected = G.deriv_array(G.interp_array(state.u.values, state.flow.values)) / state.flow.derivative
    np.testing.assert_allclose(state.particle_ux, expected, atol=1e-9)


def test_grid_function_types():
    state = ev.initial_state(spec("ch"), G.function(np.ones(G.n)))
    assert isinstance(state.u, GridFunction) and isinstance(state.m, GridFunction)
