import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lwrdisc import engine
from lwrdisc.engine import (
    BC,
    GridState,
    Limiter,
    RunStats,
    SolverConfig,
    SolverError,
    compute_interface_waves,
    godunov_flux,
    interface_waves,
    limiter_function,
    lookahead_index,
    lookahead_states,
    run,
    select_dt,
    step_first_order,
    step_high_resolution,
)
from lwrdisc.exact import PiecewiseConstant
from lwrdisc.flux import FluxKind, FluxModel, ParameterError, eval_flux
from lwrdisc.initial import gaussian_cells, riemann_cells

MODEL = FluxModel()


def grid(n, lo=-1.0, hi=1.0):
    return np.linspace(lo, hi, n + 1)


# --- state and config ---------------------------------------------------------


def test_grid_state_geometry():
    s = GridState(0.0, 1.0, np.full(4, 0.2))
    assert s.dx == 0.25
    np.testing.assert_allclose(s.centers, [0.125, 0.375, 0.625, 0.875])
    assert s.mass == pytest.approx(0.2)


def test_grid_state_q_is_read_only():
    s = GridState(0.0, 1.0, [0.1, 0.2])
    with pytest.raises(ValueError):
        s.q[0] = 0.5


def test_grid_state_validation():
    with pytest.raises(ValueError):
        GridState(1.0, 0.0, [0.1])
    with pytest.raises(ValueError):
        GridState(0.0, 1.0, [])
    with pytest.raises(ValueError):
        GridState(0.0, 1.0, [0.1], bc="reflect")


@pytest.mark.parametrize("cfl", [0.0, 1.0, 1.5])
def test_solver_config_cfl(cfl):
    with pytest.raises(ValueError):
        SolverConfig(cfl=cfl)


def test_solver_config_rejects_mollified():
    with pytest.raises(ParameterError):
        SolverConfig(FluxModel(FluxKind.MOLLIFIED, 0.5, 0.5, 0.1))
    with pytest.raises(ValueError):
        SolverConfig(delta=-1.0)


# --- limiters -----------------------------------------------------------------


def test_limiter_values():
    theta = np.array([-1.0, 0.0, 0.25, 0.5, 1.0, 1.5, 3.0])
    np.testing.assert_allclose(limiter_function(Limiter.NONE, theta), 0.0)
    np.testing.assert_allclose(limiter_function(Limiter.MINMOD, theta), [0, 0, 0.25, 0.5, 1, 1, 1])
    np.testing.assert_allclose(limiter_function(Limiter.SUPERBEE, theta), [0, 0, 0.5, 1, 1, 1.5, 2])
    np.testing.assert_allclose(limiter_function(Limiter.MC, theta), [0, 0, 0.5, 0.75, 1, 1.25, 2])


# --- look-ahead ---------------------------------------------------------------


def test_lookahead_examples():
    q = np.array([0.2, 0.3, 0.5, 0.5, 0.9, 0.1])
    assert lookahead_index(q, 1, 0.5, 1e-5, BC.OUTFLOW) == 0.9
    assert lookahead_index(q, 3, 0.5, 1e-5, BC.OUTFLOW) == 0.1
    assert lookahead_index(q, 4, 0.5, 1e-5, BC.OUTFLOW) == 0.5
    assert lookahead_index(q, 4, 0.5, 1e-5, BC.PERIODIC) == 0.2


def test_lookahead_all_plateau_returns_sentinel():
    q = np.full(5, 0.5)
    assert lookahead_index(q, 0, 0.5, 0.0, BC.PERIODIC) == 0.5


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.sampled_from([0.1, 0.5, 0.5 + 2e-6, 0.5, 0.8]), min_size=1, max_size=25),
    st.sampled_from([BC.PERIODIC, BC.OUTFLOW]),
    st.sampled_from([0.0, 1e-5]),
)
def test_lookahead_vectorized_matches_scalar(values, bc, delta):
    q = np.array(values)
    got = lookahead_states(q, 0.5, delta, bc)
    want = [lookahead_index(q, j, 0.5, delta, bc) for j in range(q.size)]
    np.testing.assert_array_equal(got, want)


# --- interface waves ----------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.sampled_from([0.0, 0.1, 0.3, 0.4, 0.5, 0.6, 0.9, 1.0]), min_size=2, max_size=20),
    st.sampled_from([BC.PERIODIC, BC.OUTFLOW]),
)
def test_scalar_fans_match_vectorized_waves(values, bc):
    q = np.array(values)
    config = SolverConfig(delta=1e-5)
    fans = compute_interface_waves(GridState(0.0, 1.0, q, bc), config)
    waves = interface_waves(q, config, bc)
    g = engine.GHOST
    if bc is BC.PERIODIC:
        sel = slice(g, g + q.size)
    else:
        sel = slice(g - 1, g + q.size)
    strengths = waves.strengths[sel]
    assert len(fans) == strengths.shape[0]
    for fan, w, s in zip(fans, strengths, waves.speeds[sel]):
        np.testing.assert_allclose(w, fan.strengths, atol=1e-15)
        expect = [sp if st_ != 0.0 else 0.0 for sp, st_ in zip(fan.speeds, fan.strengths)]
        np.testing.assert_allclose(s, expect, rtol=1e-14)


@pytest.mark.parametrize(
    "model",
    [FluxModel(FluxKind.CONTINUOUS, 0.5, 0.5), FluxModel(FluxKind.REGULARIZED, 0.5, 0.5, 0.02)],
)
def test_godunov_flux_brute_force(model):
    rng = np.random.default_rng(7)
    ql = rng.uniform(0, 1, 400)
    qr = rng.uniform(0, 1, 400)
    got = godunov_flux(model, ql, qr)
    for a, b, g in zip(ql, qr, got):
        u = np.concatenate((np.linspace(min(a, b), max(a, b), 2001), [a, b]))
        u = np.concatenate((u, [x for x in model.breakpoints() if min(a, b) <= x <= max(a, b)]))
        fu = eval_flux(model, u)
        want = fu.min() if a <= b else fu.max()
        assert g == pytest.approx(want, abs=1e-14)


def test_godunov_fluctuations_sum_to_flux_difference():
    model = FluxModel(FluxKind.CONTINUOUS, 0.5, 0.5)
    q = np.array([0.1, 0.7, 0.3, 0.9, 0.45])
    w = interface_waves(q, SolverConfig(model), BC.PERIODIC)
    qp = engine._pad(q, BC.PERIODIC)
    np.testing.assert_allclose(
        w.amdq + w.apdq, eval_flux(model, qp[1:]) - eval_flux(model, qp[:-1]), atol=1e-15
    )


def test_select_dt():
    assert select_dt([0.5, -2.0, 1.0], 0.1, 0.9, 1.0) == pytest.approx(0.045)
    assert select_dt([0.0, 0.0], 0.1, 0.9, 0.3) == 0.3


# --- stepping -----------------------------------------------------------------


@pytest.mark.parametrize("stepper", [step_first_order, step_high_resolution])
def test_courant_one_translation(stepper):
    # free flow moves at speed 1, so dt = dx shifts the data by one cell
    q0 = gaussian_cells(grid(64), 0.1, 0.3, 0.05)
    state = GridState(-1.0, 1.0, q0)
    config = SolverConfig(cfl=0.9, delta=1e-5)
    for _ in range(50):
        state = stepper(state, config, dt=state.dx)
    assert np.max(np.abs(state.q - np.roll(q0, 50))) <= 1e-12


def test_limiter_none_is_first_order_bitwise():
    q0 = gaussian_cells(grid(100), 0.1, 0.5, 0.4)
    s0 = GridState(-1.0, 1.0, q0)
    a = run(s0, SolverConfig(limiter=Limiter.NONE, t_end=0.3), [0.3], high_resolution=True)[0]
    b = run(s0, SolverConfig(t_end=0.3), [0.3], high_resolution=False)[0]
    np.testing.assert_array_equal(a.q, b.q)


def test_single_step_free_flow_exact():
    edges = grid(20)
    state = GridState(-1.0, 1.0, riemann_cells(edges, 0.1, 0.4), BC.OUTFLOW)
    nu = 0.6
    new = step_first_order(state, SolverConfig(), dt=nu * state.dx)
    exact = PiecewiseConstant((nu * state.dx,), (0.1, 0.4)).cell_averages(edges)
    np.testing.assert_allclose(new.q, exact, atol=1e-15)


@pytest.mark.parametrize("high_resolution", [False, True])
def test_periodic_single_branch_conserves_exactly(high_resolution):
    q0 = gaussian_cells(grid(200), 0.1, 0.3, 0.1)
    s0 = GridState(-1.0, 1.0, q0)
    out = run(s0, SolverConfig(t_end=0.5), [0.5], high_resolution)[0]
    assert abs(out.mass - s0.mass) / s0.mass <= 1e-13


def test_run_lands_on_output_times():
    s0 = GridState(-1.0, 1.0, riemann_cells(grid(80), 0.9, 0.2), BC.OUTFLOW)
    stats = RunStats()
    times = [0.0, 0.05, 0.1234, 0.2]
    snaps = run(s0, SolverConfig(t_end=0.2), times, stats=stats)
    assert [s.time for s in snaps] == times
    assert stats.steps > 0 and stats.min_dt <= stats.max_dt
    assert np.all(snaps[-1].q >= 0.0) and np.all(snaps[-1].q <= 1.0)


def test_run_validation():
    s0 = GridState(0.0, 1.0, np.full(4, 0.2))
    config = SolverConfig(t_end=0.5)
    with pytest.raises(ValueError):
        run(s0, config, [0.3, 0.1])
    with pytest.raises(ValueError):
        run(s0, config, [0.6])


def test_empty_output_times():
    s0 = GridState(0.0, 1.0, np.full(4, 0.2))
    assert run(s0, SolverConfig(), []) == []


def test_solver_error_after_repeated_rejection(monkeypatch):
    def bad_update(q, waves, dt, dx, limiter):
        return q + 2.0

    monkeypatch.setattr(engine, "_update", bad_update)
    s0 = GridState(0.0, 1.0, np.full(4, 0.2))
    with pytest.raises(SolverError):
        run(s0, SolverConfig(t_end=0.1), [0.1])


def test_step_limit():
    s0 = GridState(0.0, 1.0, gaussian_cells(grid(50, 0, 1), 0.1, 0.3))
    with pytest.raises(SolverError):
        run(s0, SolverConfig(t_end=1.0), [1.0], max_steps=3)


@pytest.mark.parametrize("rl, rr", [(0.9, 0.2), (0.4, 0.9), (0.3, 0.98), (0.1, 0.4), (0.6, 0.9)])
def test_riemann_runs_stay_in_range(rl, rr):
    s0 = GridState(-1.0, 1.0, riemann_cells(grid(200), rl, rr), BC.OUTFLOW)
    out = run(s0, SolverConfig(cfl=0.95, delta=1e-7, t_end=0.2), [0.2])[0]
    assert np.all(out.q >= -1e-12) and np.all(out.q <= 1.0 + 1e-12)


@pytest.mark.parametrize(
    "model",
    [FluxModel(FluxKind.CONTINUOUS, 0.5, 0.5), FluxModel(FluxKind.REGULARIZED, 0.5, 0.5, 1e-3)],
)
def test_continuous_flux_runs_conserve(model):
    q0 = gaussian_cells(grid(200), 0.1, 0.5, 0.4)
    s0 = GridState(-1.0, 1.0, q0)
    out = run(s0, SolverConfig(model, t_end=0.3), [0.3])[0]
    assert abs(out.mass - s0.mass) <= 1e-13
