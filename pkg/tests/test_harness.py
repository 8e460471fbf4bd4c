import math
import warnings

import numpy as np
import pytest

from wavekit.core import ConfigError, Grid1D, Grid2D
from wavekit.harness import (CHARACTERISTICS, FINE_GRID, ConvergenceRow, ReferenceSolution, block_average,
                             build_reference, convergence_study, envelope_distance, fill_orders, l1_error, l2_error,
                             load_references, mirror_half, radial_scatter, rms_pressure, save_references,
                             time_reversibility_test, transpose_asymmetry)
from wavekit.problems import setup_problem


def test_block_average_is_exact_mean():
    fine = np.arange(24.0).reshape(1, 4, 6)
    out = block_average(fine, (2, 3))
    np.testing.assert_array_equal(out[0], [[4.0, 7.0], [16.0, 19.0]])
    with pytest.raises(ConfigError):
        block_average(fine, (3, 3))


def test_reference_restriction():
    fine = Grid1D(0.0, 1.0, 8)
    ref = ReferenceSolution(fine, np.arange(8.0)[None], FINE_GRID)
    np.testing.assert_array_equal(ref.on(Grid1D(0.0, 1.0, 2))[0], [1.5, 5.5])
    with pytest.raises(ConfigError):
        ref.on(Grid1D(0.0, 1.0, 3))
    with pytest.raises(ConfigError):
        ref.on(Grid1D(0.1, 1.1, 2))


def test_error_norms():
    grid = Grid1D(0.0, 2.0, 4)
    q = np.array([[1.0, 1.0, 1.0, 1.0], [0.0, 0.0, 0.0, 2.0]])
    ref = np.zeros_like(q)
    assert l1_error(q, ref, grid, (0,)) == pytest.approx(2.0)
    assert l1_error(q, ref, grid) == pytest.approx(3.0)
    assert l2_error(q, ref, grid, (1,)) == pytest.approx(math.sqrt(0.5 * 4.0))
    g2 = Grid2D(Grid1D(0, 1, 2), Grid1D(0, 1, 2))
    assert l1_error(np.ones((1, 2, 2)), np.zeros((1, 2, 2)), g2) == pytest.approx(1.0)


def test_fill_orders():
    rows = [ConvergenceRow(100, 1e-2), ConvergenceRow(200, 1e-2 / 32), ConvergenceRow(400, 0.0)]
    fill_orders(rows)
    assert rows[0].order is None
    assert rows[1].order == pytest.approx(5.0)
    assert math.isnan(rows[2].order)
    # non-doubling spacing
    rows = fill_orders([ConvergenceRow(10, 1.0), ConvergenceRow(30, 1.0 / 81)], spacing=[0.1, 1 / 30])
    assert rows[1].order == pytest.approx(4.0)


def test_convergence_study_checks_input():
    make = lambda n: setup_problem("acoustics_homog", mx=n)
    with pytest.raises(ConfigError):
        convergence_study(make, [200, 400])
    with pytest.raises(ConfigError):
        convergence_study(make, [200, 400, 800], norm="linf")


def test_convergence_study_thread_order_independent():
    make = lambda n: setup_problem("acoustics_homog", mx=n, t_final=1.0)
    a = convergence_study(make, [200, 400, 800], components=(0,), workers=1)
    b = convergence_study(make, [200, 400, 800], components=(0,), workers=3)
    assert [r.resolution for r in b] == [200, 400, 800]
    assert [r.error for r in a] == [r.error for r in b]


def test_build_reference_kinds():
    s = setup_problem("acoustics_homog", mx=200, t_final=1.0)
    ref = build_reference(s)
    assert ref.kind == CHARACTERISTICS and ref.t == 1.0
    with pytest.raises(ConfigError):
        build_reference("sw_radial_1d")
    with pytest.raises(ConfigError):
        build_reference(s, FINE_GRID, factor=4, make_setup=lambda f: s)
    with pytest.raises(ConfigError):
        build_reference(s, "guess")


def test_fine_grid_reference_converges():
    make = lambda n: setup_problem("sw_radial_1d", mr=n, t_final=0.1)
    ref = build_reference(make(100), FINE_GRID, factor=8, make_setup=lambda f: make(100 * f))
    assert ref.q.shape == (2, 800)
    rows = convergence_study(make, [100, 200], ref, min_resolutions=2)
    assert rows[1].error < rows[0].error


def test_reference_file_roundtrip(tmp_path):
    grid = Grid2D(Grid1D(0, 2, 4), Grid1D(0, 1, 2))
    rng = np.random.default_rng(0)
    refs = {0.1: ReferenceSolution(grid, rng.normal(size=(3, 4, 2)), FINE_GRID, 0.1),
            0.2: ReferenceSolution(grid, rng.normal(size=(3, 4, 2)), FINE_GRID, 0.2)}
    save_references(refs, tmp_path / "r.npz", factor=8)
    back = load_references(tmp_path / "r.npz")
    assert sorted(back) == [0.1, 0.2]
    np.testing.assert_array_equal(back[0.2].q, refs[0.2].q)
    assert back[0.1].grid.shape == (4, 2)


def test_mirror_half():
    q = np.arange(12.0).reshape(3, 2, 2)
    full = mirror_half(q)
    assert full.shape == (3, 2, 4)
    np.testing.assert_array_equal(full[0], [[0, 1, 1, 0], [2, 3, 3, 2]])
    np.testing.assert_array_equal(full[2, 0], [8, 9, -9, -8])


def test_rms_pressure():
    t = np.linspace(0.0, 2 * np.pi, 2001)
    p = np.sin(t)[:, None] * np.array([1.0, 2.0])
    np.testing.assert_allclose(rms_pressure(p, t, period=2 * np.pi), [1 / math.sqrt(2), math.sqrt(2)], rtol=1e-6)
    np.testing.assert_array_equal(rms_pressure(np.zeros((3, 2)), [0, 1, 2]), 0.0)
    with pytest.warns(RuntimeWarning):
        rms_pressure(p[:10], t[:10], period=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rms_pressure(p, t, period=2 * np.pi)
    with pytest.raises(ConfigError):
        rms_pressure(p[:1], t[:1])


def test_radial_helpers():
    grid = Grid2D(Grid1D(-1, 1, 4), Grid1D(-1, 1, 4))
    X, Y = grid.mesh()
    h = np.hypot(X, Y)
    r, v = radial_scatter(h, grid)
    np.testing.assert_allclose(r, v)
    assert np.all(np.diff(r) >= 0)
    assert transpose_asymmetry(h) == 0.0
    h[0, 1] += 1e-3
    assert transpose_asymmetry(h) == pytest.approx(1e-3)
    r_ref = np.linspace(0, 1, 11)
    d = envelope_distance([0.5, 0.5, 0.5], [0.5, 0.7, 0.3], r_ref, r_ref, 0.1)
    np.testing.assert_allclose(d, [0.0, 0.1, 0.1], atol=1e-15)


def test_reversibility_small_run():
    r = time_reversibility_test(8, T=12.0, t0=4.0)
    assert r.valid
    assert 0.0 < r.max_diff < 5e-2
    assert r.stats["forward_steps"] > 0 and r.stats["backward_steps"] > 0
    with pytest.raises(ConfigError):
        time_reversibility_test(8, T=5.0, t0=6.0)
