"""Error norms, convergence studies and diagnostics built on the solver."""
from __future__ import annotations

import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import ConfigError, Grid1D, Grid2D, NumericalError
from .problems import Setup, setup_problem, setup_shallow_radial_1d, setup_stegoton, wall_velocity
from .solver import RunStats, evolve

log = logging.getLogger(__name__)

CHARACTERISTICS = "analytic-characteristics"
FINE_GRID = "fine-grid-self"


def block_average(fine: np.ndarray, factors: Sequence[int]) -> np.ndarray:
    """Exact block means of a component-first interior array."""
    out = fine
    for axis, f in enumerate(factors, start=1):
        n = out.shape[axis]
        if f < 1 or n % f:
            raise ConfigError(f"fine grid ({n} cells) is not a multiple of {f}")
        shape = out.shape[:axis] + (n // f, f) + out.shape[axis + 1:]
        out = out.reshape(shape).mean(axis=axis + 1)
    return out


def _grid_axes(grid):
    return (grid,) if isinstance(grid, Grid1D) else (grid.x, grid.y)


@dataclass
class ReferenceSolution:
    """Cell averages of a reference on ``grid`` with a provenance tag."""

    grid: Grid1D | Grid2D
    q: np.ndarray
    kind: str
    t: float = 0.0

    def on(self, grid) -> np.ndarray:
        """Conservative restriction onto a coarser grid with nested cells."""
        factors = []
        for fine, coarse in zip(_grid_axes(self.grid), _grid_axes(grid)):
            ratio = coarse.dx / fine.dx
            f = int(round(ratio))
            if abs(ratio - f) > 1e-9 * ratio or abs(fine.x_lower - coarse.x_lower) > 1e-12:
                raise ConfigError("reference grid is not an integer refinement of the test grid")
            factors.append(f)
        q = block_average(self.q, factors)
        if q.shape[1:] != grid.shape:
            raise ConfigError(f"reference covers {q.shape[1:]} cells, test grid has {grid.shape}")
        return q


def _resolve(ref, grid):
    if isinstance(ref, ReferenceSolution):
        return ref.on(grid)
    ref = np.asarray(ref, dtype=float)
    return ref


def _pointwise(q, ref, grid, components):
    q = np.asarray(q, dtype=float)
    r = _resolve(ref, grid)
    if r.shape != q.shape:
        raise ConfigError(f"solution shape {q.shape} and reference shape {r.shape} differ")
    if components is not None:
        q, r = q[list(components)], r[list(components)]
    return q - r


def cell_volume(grid) -> float:
    return float(np.prod(grid.deltas))


def l1_error(q, ref, grid, components: Sequence[int] | None = None) -> float:
    """dx * sum |Q - Qref| per component, summed over components.

    ``ref`` is an array on the same grid or a :class:`ReferenceSolution`,
    which is block-averaged onto ``grid`` first.
    """
    e = _pointwise(q, ref, grid, components)
    return float(cell_volume(grid) * np.abs(e).sum())


def l2_error(q, ref, grid, components: Sequence[int] | None = None) -> float:
    """sqrt(dx dy sum |Q - Qref|^2) over the selected components."""
    e = _pointwise(q, ref, grid, components)
    return float(math.sqrt(cell_volume(grid) * np.square(e).sum()))


NORMS = {"l1": l1_error, "l2": l2_error}


@dataclass
class ConvergenceRow:
    resolution: int
    error: float
    order: float | None = None
    seconds: float = 0.0


def fill_orders(rows: list[ConvergenceRow], spacing: Sequence[float] | None = None):
    """Observed orders between consecutive rows.

    With ``spacing`` (cell sizes) the order is log(e0/e1)/log(h0/h1), which
    reduces to log2 of the error ratio for doubled resolution.
    """
    h = spacing if spacing is not None else [1.0 / r.resolution for r in rows]
    for k, row in enumerate(rows):
        if k == 0:
            row.order = None
            continue
        prev = rows[k - 1]
        if row.error > 0 and prev.error > 0:
            row.order = math.log(prev.error / row.error) / math.log(h[k - 1] / h[k])
        else:
            row.order = float("nan")
    return rows


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("WAVEKIT_THREADS", "1")))
    except ValueError:
        return 1


def run_setup(setup: Setup, t_final: float | None = None, frame_times=(), stats: RunStats | None = None):
    t_final = setup.t_final if t_final is None else t_final
    return evolve(setup.state, setup.grid, setup.bc, setup.config, t_final, frame_times=frame_times, stats=stats)


def build_reference(setup: Setup | str, kind: str = CHARACTERISTICS, factor: int = 8,
                    t_final: float | None = None, make_setup: Callable[[int], Setup] | None = None,
                    **setup_kw) -> ReferenceSolution:
    """Reference cell averages at the setup's final time.

    ``kind`` is ``analytic-characteristics`` (linear acoustics in
    piecewise-constant media only) or ``fine-grid-self``, which reruns the
    problem on a ``factor``-times finer grid.  For the fine-grid kind pass
    ``make_setup(multiplier)`` building the refined setup, or rely on
    ``setup_problem`` with ``mx``/``my`` scaled.
    """
    if isinstance(setup, str):
        setup = setup_problem(setup, **setup_kw)
    t = setup.t_final if t_final is None else t_final
    if kind == CHARACTERISTICS:
        if setup.exact is None:
            raise ConfigError(f"no characteristics solution for {setup.problem}")
        return ReferenceSolution(setup.grid, setup.exact(setup.grid, t), kind, t)
    if kind != FINE_GRID:
        raise ConfigError(f"unknown reference kind {kind!r}")
    if factor < 8:
        raise ConfigError("fine-grid references need at least 8x the test resolution")
    if make_setup is None:
        raise ConfigError("fine-grid references need make_setup")
    fine = make_setup(factor)
    frames = run_setup(fine, t)
    return ReferenceSolution(fine.grid, frames[-1].interior().copy(), kind, t)


def mirror_half(q: np.ndarray, negate: Sequence[int] = (2,)) -> np.ndarray:
    """Full-height field from the lower half of a field symmetric in y."""
    top = q[:, :, ::-1].copy()
    for m in negate:
        top[m] *= -1.0
    return np.concatenate([q, top], axis=2)


def hump_reference(mx: int = 200, my: int = 100, factor: int = 8, t_final: float = 0.6,
                   frame_times: Sequence[float] = (), cfl: float = 2.45, progress=None) -> dict:
    """Fine-grid references for the smooth hump perturbation.

    Runs ``factor`` times finer than ``mx x my`` on the lower half of the
    domain (the problem is symmetric about y = 1/2) and stores the block
    averages on the ``mx x my`` grid, from which coarser nested grids follow
    by further averaging.  Returns {time: ReferenceSolution}.
    """
    if factor < 8:
        raise ConfigError("fine-grid references need at least 8x the test resolution")
    fine = setup_problem("sw_hump_smooth", mx=mx * factor, my=my * factor, cfl=cfl, half=True)
    coarse_grid = setup_problem("sw_hump_smooth", mx=mx, my=my).grid
    times = sorted({float(t) for t in frame_times if 0 < t < t_final} | {float(t_final)})
    frames = evolve(fine.state, fine.grid, fine.bc, fine.config, t_final, frame_times=times,
                    callback=progress)
    out = {}
    for f in frames[1:]:
        q = block_average(mirror_half(f.interior()), (factor, factor))
        out[round(f.t, 12)] = ReferenceSolution(coarse_grid, q, FINE_GRID, f.t)
    return out


def save_references(refs: dict, path, **meta):
    """Write {time: ReferenceSolution} (all on one grid) to an npz file."""
    items = sorted(refs.items())
    grid = items[0][1].grid
    np.savez_compressed(path, times=np.array([t for t, _ in items]), q=np.stack([r.q for _, r in items]),
                        bounds=np.array([grid.x.x_lower, grid.x.x_upper, grid.y.x_lower, grid.y.x_upper]),
                        shape=np.array(grid.shape), kinds=np.array([r.kind for _, r in items]),
                        meta=np.array(repr(sorted(meta.items()))))


def load_references(path) -> dict:
    with np.load(path) as z:
        x0, x1, y0, y1 = z["bounds"]
        nx, ny = (int(v) for v in z["shape"])
        grid = Grid2D(Grid1D(float(x0), float(x1), nx), Grid1D(float(y0), float(y1), ny))
        return {round(float(t), 12): ReferenceSolution(grid, q, str(k), float(t))
                for t, q, k in zip(z["times"], z["q"], z["kinds"])}


def convergence_study(make_setup: Callable[[int], Setup], resolutions: Sequence[int],
                      reference: Callable[[Setup], np.ndarray | ReferenceSolution] | ReferenceSolution | None = None,
                      norm: str = "l1", components: Sequence[int] | None = None,
                      spacing: Sequence[float] | None = None, workers: int | None = None,
                      min_resolutions: int = 3) -> list[ConvergenceRow]:
    """Run ``make_setup(n)`` for every resolution and tabulate errors.

    ``reference`` is a fixed :class:`ReferenceSolution`, a callable giving
    the reference for a setup, or None to use the setup's exact solution.
    Runs are independent and may go to ``workers`` threads; the table order
    follows ``resolutions`` regardless.
    """
    import time

    if len(resolutions) < min_resolutions:
        raise ConfigError(f"a convergence study needs at least {min_resolutions} resolutions")
    if norm not in NORMS:
        raise ConfigError(f"unknown norm {norm!r}")
    measure = NORMS[norm]

    def one(n):
        t0 = time.perf_counter()
        try:
            setup = make_setup(n)
            frames = run_setup(setup)
        except NumericalError as exc:
            raise NumericalError(f"resolution {n}: {exc}", stage=exc.stage, index=exc.index) from exc
        q = frames[-1].interior()
        if reference is None:
            if setup.exact is None:
                raise ConfigError(f"{setup.problem} has no exact solution; pass a reference")
            ref = setup.exact(setup.grid, frames[-1].t)
        elif isinstance(reference, ReferenceSolution):
            ref = reference
        else:
            ref = reference(setup)
        err = measure(q, ref, setup.grid, components)
        return ConvergenceRow(n, err, None, time.perf_counter() - t0)

    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(one, resolutions))
    else:
        rows = [one(n) for n in resolutions]
    return fill_orders(rows, spacing)


def acoustics_study(medium="homogeneous", a=1.0, resolutions=(200, 400, 800, 1600), solver="qwave",
                    recon=None, cfl=2.45, **kw) -> list[ConvergenceRow]:
    """Pulse convergence against the characteristics solution, measured on
    the first component (pressure, or strain in the conservative form)."""
    def make(n):
        return setup_problem("acoustics_homog" if medium == "homogeneous" else "acoustics_interface",
                             a=a, mx=n, solver=solver, recon=recon, cfl=cfl, **kw)
    return convergence_study(make, resolutions, None, "l1", components=(0,))


# ------------------------------------------------------------- reversibility

@dataclass
class ReversibilityResult:
    cells_per_layer: int
    T: float
    t0: float
    max_diff: float
    valid: bool = True
    total_variation: float = 0.0
    stats: dict = field(default_factory=dict)


def _tv(q):
    return float(np.abs(np.diff(q, axis=-1)).sum())


def time_reversibility_test(cells_per_layer: int = 24, T: float = 100.0, t0: float = 10.0,
                            length: float | None = None, tv_limit: float = 50.0, **kw) -> ReversibilityResult:
    """Stegoton forward to T, reverse the velocity, continue to 2T - t0 and
    compare with the forward solution at t0.

    The wall pulse is reversed as well (wall velocity -v(2T - s)), so an
    exactly reversible scheme would return the state at t0.  A strain total
    variation above ``tv_limit`` at time T marks the result invalid (a shock
    has formed and the dynamics is no longer reversible).
    """
    if not 0 <= t0 <= T:
        raise ConfigError("need 0 <= t0 <= T")
    if length is None:
        length = float(math.ceil(1.2 * T + 10.0))
    fwd = setup_stegoton(cells_per_layer, length=length, t_final=T, **kw)
    amp, pt0 = fwd.params["amplitude"], fwd.params["t0"]
    stats = RunStats()
    frames = evolve(fwd.state, fwd.grid, fwd.bc, fwd.config, T, frame_times=[t0], stats=stats)
    at_t0 = frames[0] if t0 == 0 else next(f for f in frames if abs(f.t - t0) <= 1e-9 * max(1.0, T))
    at_T = frames[-1]
    tv = _tv(at_T.interior()[0])
    t_end = 2.0 * T - t0

    def reversed_wall(s):
        return -wall_velocity(2.0 * T - s, amp, pt0)

    back = setup_stegoton(cells_per_layer, length=length, t_final=t_end, velocity=reversed_wall, **kw)
    state = at_T.copy()
    state.q[1] *= -1.0
    state.t = T
    stats_back = RunStats()
    out = evolve(state, back.grid, back.bc, back.config, t_end, stats=stats_back)[-1]
    q_end = out.interior().copy()
    q_end[1] *= -1.0
    diff = float(np.max(np.abs(q_end - at_t0.interior())))
    return ReversibilityResult(cells_per_layer, T, t0, diff, tv <= tv_limit, tv,
                               dict(forward_steps=stats.steps, backward_steps=stats_back.steps,
                                    rejected=stats.rejected + stats_back.rejected))


# ----------------------------------------------------------------- pressure

def rms_pressure(frames, times, period: float | None = None) -> np.ndarray:
    """sqrt((1/T) int p^2 dt) per cell by the trapezoidal rule.

    ``frames`` stacks the pressure field over time along axis 0.  A window
    shorter than ``period`` triggers a warning.
    """
    p = np.asarray(frames, dtype=float)
    t = np.asarray(times, dtype=float)
    if p.shape[0] != t.size or t.size < 2:
        raise ConfigError("need at least two frames with matching times")
    window = t[-1] - t[0]
    if not window > 0:
        raise ConfigError("frame times must increase")
    if period is not None and window < period * (1 - 1e-12):
        warnings.warn(f"RMS window {window:g} is shorter than one period {period:g}", RuntimeWarning)
    dt = np.diff(t).reshape((-1,) + (1,) * (p.ndim - 1))
    sq = p * p
    integral = (0.5 * dt * (sq[1:] + sq[:-1])).sum(axis=0)
    return np.sqrt(integral / window)


# ----------------------------------------------------------- radial checks

def radial_scatter(h: np.ndarray, grid: Grid2D, center=(0.0, 0.0)):
    """(r, h) for every cell centre, sorted by r (stable)."""
    X, Y = grid.mesh()
    r = np.hypot(X - center[0], Y - center[1]).ravel()
    v = np.asarray(h, dtype=float).ravel()
    order = np.argsort(r, kind="stable")
    return r[order], v[order]


def transpose_asymmetry(h: np.ndarray) -> float:
    """max |h(i,j) - h(j,i)| of a square field."""
    h = np.asarray(h)
    return float(np.max(np.abs(h - h.T)))


def radial_reference(mr: int = 2000, t_final: float = 1.0, **kw) -> tuple[np.ndarray, np.ndarray]:
    """Cell centres and depth of a 1D radial run (the fine-grid curve)."""
    s = setup_shallow_radial_1d(mr, t_final=t_final, **kw)
    q = run_setup(s)[-1].interior()
    return s.grid.centers, q[0].copy()


def envelope_distance(r, h, r_ref, h_ref, r_window: float) -> np.ndarray:
    """Vertical distance from each scatter point to the reference curve,
    allowing the curve to be sampled anywhere within ``r_window`` of the
    point (the radial position of a cell is only known to about one cell).
    """
    r = np.asarray(r, float)
    h = np.asarray(h, float)
    lo = np.searchsorted(r_ref, r - r_window, side="left")
    hi = np.searchsorted(r_ref, r + r_window, side="right")
    # reference values bracketing the window, plus interpolated end points
    h_lo = np.interp(r - r_window, r_ref, h_ref)
    h_hi = np.interp(r + r_window, r_ref, h_ref)
    mins = np.minimum(h_lo, h_hi)
    maxs = np.maximum(h_lo, h_hi)
    # running extrema of the reference inside each window
    for k in range(r.size):
        if hi[k] > lo[k]:
            seg = h_ref[lo[k]:hi[k]]
            mins[k] = min(mins[k], seg.min())
            maxs[k] = max(maxs[k], seg.max())
    below = np.maximum(mins - h, 0.0)
    above = np.maximum(h - maxs, 0.0)
    return below + above
