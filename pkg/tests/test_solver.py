import math
from fractions import Fraction

import numpy as np
import pytest

from wavekit.core import BoundarySpec, ConfigError, Grid1D, Grid2D, NumericalError, State, cell_average_of, pad
from wavekit.problems import setup_acoustics_pulse, setup_shallow_hump, setup_stegoton
from wavekit.recon import ReconMode
from wavekit.riemann import Acoustics, Advection, ShallowFWave, ShallowRoe
from wavekit.solver import (RunStats, SemiDiscreteConfig, compute_dt, evolve, rhs_1d, rhs_2d, ssprk104,
                            ssprk104_step, total_fluctuation)

# stability polynomial of the two-register scheme, expanded symbolically from
# the stage recursion and frozen here
STABILITY_COEFFS = [Fraction(1), Fraction(1), Fraction(1, 2), Fraction(1, 6), Fraction(1, 24),
                    Fraction(17, 2160), Fraction(7, 6480), Fraction(1, 9720), Fraction(1, 155520),
                    Fraction(1, 4199040), Fraction(1, 251942400)]


def _amplification(z):
    y, _ = ssprk104(np.array([1.0 + 0j]), 0.0, 1.0, lambda q, t: (z * q, ()))
    return y[0]


def test_stability_polynomial_matches_expansion():
    for z in (-2.45, -1.0, 0.3, 1.5j, -3.0 + 2.0j):
        poly = sum(float(c) * z ** k for k, c in enumerate(STABILITY_COEFFS))
        assert abs(_amplification(z) - poly) <= 1e-13 * max(1.0, abs(poly))


def test_stability_polynomial_agrees_with_exp_to_fourth_order():
    for k in range(5):
        assert STABILITY_COEFFS[k] == Fraction(1, math.factorial(k))
    assert STABILITY_COEFFS[5] != Fraction(1, 120)
    # consequently R(z) - e^z = O(z^5)
    errs = [abs(_amplification(z) - np.exp(z)) for z in (0.1, 0.05)]
    assert 4.8 < math.log2(errs[0] / errs[1]) < 5.2


def test_zero_and_unit_rhs():
    q = np.array([[1.0, 2.0, 3.0]])
    out, _ = ssprk104(q, 0.0, 0.3, lambda y, t: (np.zeros_like(y), ()))
    np.testing.assert_array_equal(out, q)
    out, _ = ssprk104(q, 0.0, 0.3, lambda y, t: (np.ones_like(y), ()))
    np.testing.assert_allclose(out, q + 0.3, rtol=0, atol=1e-15)


def test_stage_times_follow_the_stage_values():
    # F = t integrates to t^2/2 exactly for a 4th-order method
    out, _ = ssprk104(np.zeros(1), 1.0, 0.5, lambda y, t: (np.full_like(y, t), ()))
    assert out[0] == pytest.approx(0.5 * (1.5 ** 2 - 1.0), rel=1e-14)


def test_fourth_order_on_nonlinear_ode():
    # y' = -y^2 + cos(t) y on [0, 2], compared with a fine run of itself
    def f(y, t):
        return -y * y + np.cos(t) * y, ()

    def run(n):
        y, dt = np.array([1.0]), 2.0 / n
        for k in range(n):
            y, _ = ssprk104(y, k * dt, dt, f)
        return y[0]

    ref = run(4096)
    errs = [abs(run(n) - ref) for n in (16, 32, 64)]
    orders = [math.log2(errs[k] / errs[k + 1]) for k in range(2)]
    assert all(3.9 <= p <= 4.1 for p in orders), orders


def test_nonfinite_stage_reports_stage():
    def blow(y, t):
        return np.full_like(y, np.inf), ()

    with pytest.raises(NumericalError) as info:
        ssprk104(np.zeros(2), 0.0, 1.0, blow)
    assert info.value.stage == 0


def test_step_wrapper_advances_time():
    state = State(np.zeros((1, 8)))
    out = ssprk104_step(state, 0.25, lambda q, t: np.ones_like(q))
    assert out.t == 0.25
    np.testing.assert_allclose(out.interior(), 0.25, atol=1e-15)
    with pytest.raises(ConfigError):
        ssprk104_step(state, 0.0, lambda q, t: q)


def test_compute_dt():
    assert compute_dt([2.0], Grid1D(0, 1, 10), 2.45) == pytest.approx(0.1225)
    g2 = Grid2D(Grid1D(0, 1, 10), Grid1D(0, 1, 10))
    assert compute_dt([1.0, 1.0], g2, 2.45) == pytest.approx(0.1225)
    assert compute_dt([0.0], Grid1D(0, 1, 10), 2.45, dt_fallback=7.0) == 7.0


def test_config_checks():
    with pytest.raises(ConfigError):
        SemiDiscreteConfig("componentwise", Advection(), cfl_target=2.0, cfl_max=1.0)
    assert SemiDiscreteConfig("componentwise", Advection()).cfl_max == pytest.approx(1.2 * 2.45)


def test_total_fluctuation_examples():
    np.testing.assert_array_equal(total_fluctuation([[1.0], [0.3]], [[1.0], [0.3]], np.zeros((0, 1)),
                                                    ShallowRoe(1.0)), 0.0)
    tf = total_fluctuation([[1.0], [0.0]], [[2.0], [0.0]], np.zeros((0, 1)), ShallowRoe(1.0))
    np.testing.assert_allclose(tf[:, 0], [0.0, 1.5])
    rho, c = 2.0, 0.5
    K = rho * c * c
    tf = total_fluctuation([[0.0], [0.0]], [[0.3], [-0.2]], [[rho], [c]], Acoustics())
    np.testing.assert_allclose(tf[:, 0], [K * -0.2, 0.3 / rho], rtol=1e-14)


def _advection_setup(n, fn=np.sin):
    grid = Grid1D(0.0, 2 * np.pi, n)
    q = cell_average_of(fn, grid, 8, ghosts=True)[None]
    return grid, State(q), BoundarySpec.uniform("periodic"), SemiDiscreteConfig("componentwise", Advection(1.5))


def test_constant_state_rhs_is_zero():
    grid, state, bc, cfg = _advection_setup(20, lambda x: 0 * x + 3.0)
    np.testing.assert_array_equal(rhs_1d(state, grid, bc, cfg).dqdt, 0.0)


def test_advection_rhs_fifth_order():
    errs = []
    for n in (20, 40, 80, 160):
        grid, state, bc, cfg = _advection_setup(n)
        exact = -1.5 * cell_average_of(np.cos, grid, 8)
        errs.append(np.abs(rhs_1d(state, grid, bc, cfg).dqdt[0] - exact).max())
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders[1:] > 4.5), orders


def test_first_order_reduction_to_godunov():
    # with the one-cell stencil (edges = averages) only the interface
    # fluctuations survive; check against upwind differencing
    grid, state, bc, cfg = _advection_setup(16)
    q = state.q
    from wavekit import solver as solver_mod
    rs = Advection(1.5).solve(q[:, 2:-3], q[:, 3:-2], None, None)
    total = rs.apdq[:, :-1] + rs.amdq[:, 1:]
    upwind = 1.5 * (q[:, 3:-3] - q[:, 2:-4])
    np.testing.assert_allclose(total, upwind, atol=1e-14)
    assert hasattr(solver_mod, "_sweep")


def test_lake_at_rest_rhs_1d_and_2d():
    grid = Grid1D(0.0, 1.0, 30)
    b = np.where(grid.centers_with_ghosts > 0.4, 0.3, 0.1) + 0.05 * np.sin(7 * grid.centers_with_ghosts)
    # bathymetry continued into the ghosts the way extrapolation continues h
    b[:3], b[-3:] = b[3], b[-4]
    q = np.vstack([1.0 - b, np.zeros_like(b)])
    state = State(q, aux=b[None])
    cfg = SemiDiscreteConfig("fwaveslope", ShallowFWave(9.81))
    out = rhs_1d(state, grid, BoundarySpec.uniform("extrapolation"), cfg)
    assert np.abs(out.dqdt).max() <= 1e-12
    s = setup_shallow_hump("zero_perturb", 100, 50)
    for compiled in (True, False):
        s.config.compiled = compiled
        assert np.abs(rhs_2d(s.state, s.grid, s.bc, s.config).dqdt).max() <= 1e-12


def test_compiled_sweep_matches_array_code():
    s = setup_shallow_hump("smooth", 100, 50)
    rng = np.random.default_rng(2)
    s.state.q[:, 3:-3, 3:-3] += 1e-3 * rng.normal(size=(3, 100, 50))
    fast = rhs_2d(s.state, s.grid, s.bc, s.config)
    s.config.compiled = False
    slow = rhs_2d(s.state, s.grid, s.bc, s.config)
    np.testing.assert_allclose(fast.dqdt, slow.dqdt, rtol=0, atol=1e-12)
    np.testing.assert_allclose(fast.max_wave_speed, slow.max_wave_speed, rtol=1e-14)


def test_y_invariant_2d_matches_rowwise_1d():
    n = 24
    g1 = Grid1D(0.0, 1.0, n)
    x = g1.centers_with_ghosts
    h = 1.0 + 0.2 * np.exp(-40 * (x - 0.5) ** 2)
    q1 = np.vstack([h, 0.1 * h])
    cfg = SemiDiscreteConfig("characteristicwise", ShallowRoe(1.0))
    r1 = rhs_1d(State(q1), g1, BoundarySpec.uniform("periodic"), cfg)
    g2 = Grid2D(g1, Grid1D(0.0, 1.0, 5))
    q2 = np.zeros((3, n + 6, 11))
    q2[0] = h[:, None]
    q2[1] = 0.1 * h[:, None]
    r2 = rhs_2d(State(q2), g2, BoundarySpec.uniform("periodic", 2), cfg)
    for j in range(5):
        np.testing.assert_allclose(r2.dqdt[:2, :, j], r1.dqdt, atol=1e-13)
    np.testing.assert_allclose(r2.dqdt[2], 0.0, atol=1e-13)


def test_evolve_initial_frame_only():
    grid, state, bc, cfg = _advection_setup(20)
    frames = evolve(state, grid, bc, cfg, 0.0)
    assert len(frames) == 1 and frames[0].t == 0.0


def test_evolve_constant_state_and_frame_times():
    grid, _, bc, cfg = _advection_setup(20)
    state = State(np.full((1, 26), 2.0))
    frames = evolve(state, grid, bc, cfg, 1.0, frame_times=[0.25, 0.5])
    assert [f.t for f in frames] == [0.0, 0.25, 0.5, 1.0]
    for f in frames:
        np.testing.assert_array_equal(f.interior(), 2.0)


def test_evolve_acoustics_translation():
    # pulse carried by c t, compared with translated exact cell averages
    errs = []
    for mx in (400, 800):
        setup = setup_acoustics_pulse("homogeneous", mx=mx)
        stats = RunStats()
        frames = evolve(setup.state, setup.grid, setup.bc, setup.config, 1.0, stats=stats)
        p = setup.exact(setup.grid, 1.0)[0]
        errs.append(np.abs(frames[-1].interior()[0] - p).max())
        assert stats.max_cfl <= setup.config.cfl_max
    assert math.log2(errs[0] / errs[1]) > 4.0, errs


def test_evolve_is_deterministic():
    runs = []
    for _ in range(2):
        s = setup_acoustics_pulse("interface", mx=100, solver="fwave")
        runs.append(evolve(s.state, s.grid, s.bc, s.config, 1.0)[-1].q)
    np.testing.assert_array_equal(runs[0], runs[1])


def test_conservation_periodic_stegoton():
    s = setup_stegoton(8, length=8, periodic=True)
    x = s.grid.centers_with_ghosts
    s.state.q[0] = 0.05 * np.exp(-((x - 4.0) / 0.8) ** 2)
    frames = evolve(s.state, s.grid, s.bc, s.config, 20.0)
    before = s.state.interior().sum(axis=1) * s.grid.dx
    after = frames[-1].interior().sum(axis=1) * s.grid.dx
    assert np.all(np.abs(after - before) <= 1e-12 * np.abs(before).max())


def test_lake_at_rest_stays_at_rest():
    s = setup_shallow_hump("zero_perturb", 100, 50)
    stats = RunStats()
    out = evolve(s.state, s.grid, s.bc, s.config, 0.05, stats=stats)[-1].interior()
    b = s.state.aux[0, 3:-3, 3:-3]
    assert np.abs(out[0] + b - 1.0).max() <= 1e-11
    assert np.abs(out[1:]).max() <= 1e-11


def test_positivity_loss_is_reported():
    grid = Grid1D(0.0, 1.0, 20)
    x = grid.centers_with_ghosts
    # strongly diverging flow opens a vacuum in the middle
    q = np.vstack([np.ones_like(x), np.where(x < 0.5, -5.0, 5.0)])
    state = State(q, positive=(0,))
    cfg = SemiDiscreteConfig("componentwise", ShallowRoe(1.0))
    with pytest.raises(NumericalError):
        evolve(state, grid, BoundarySpec.uniform("extrapolation"), cfg, 1.0)


def test_source_term_added():
    grid, state, bc, _ = _advection_setup(10, lambda x: 0 * x + 1.0)
    cfg = SemiDiscreteConfig("componentwise", Advection(1.0), source=lambda q, g, t: 2.0 * q)
    np.testing.assert_allclose(rhs_1d(state, grid, bc, cfg).dqdt, 2.0)


def test_capacity_scales_rhs():
    grid, state, bc, cfg = _advection_setup(30)
    base = rhs_1d(state, grid, bc, cfg).dqdt
    state.kappa = np.full_like(state.kappa, 2.0)
    np.testing.assert_allclose(rhs_1d(state, grid, bc, cfg).dqdt, base / 2.0, rtol=1e-14)
