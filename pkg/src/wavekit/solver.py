"""Semi-discrete fluctuation form and SSPRK(10,4) time stepping.

Per cell the right-hand side is

    dQ_i/dt = -(A+dq_{i-1/2} + A-dq_{i+1/2} + A dq_i) / (kappa_i dx) + psi(Q_i, x_i)

where the interface fluctuations come from Riemann problems between
reconstructed traces and the total fluctuation ``A dq_i`` from the cell's own
pair of traces.  In 2D the x and y contributions are summed.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (BoundarySpec, ConfigError, Grid1D, Grid2D, NumericalError, State,
                   fill_ghosts_array, pad)
from . import _fast
from .recon import FWAVESLOPE, SPEED_FLOOR, ZERO_DIFF_TOL, ReconMode, reconstruct_along
from .riemann import RiemannSolver, ShallowFWave

log = logging.getLogger(__name__)

DEFAULT_CFL = 2.45


@dataclass
class RadialSource:
    """Geometric source of the radially symmetric shallow water equations,
    evaluated at cell centers: (-hU/r, -hU^2/(h r))."""

    def __call__(self, q, grid, t):
        r = grid.centers
        out = np.empty_like(q)
        out[0] = -q[1] / r
        out[1] = -q[1] * q[1] / (q[0] * r)
        return out


@dataclass
class SemiDiscreteConfig:
    recon: ReconMode | str
    solver: RiemannSolver
    cfl_target: float = DEFAULT_CFL
    cfl_max: float | None = None
    source: Callable | None = None
    dt_min: float = 1e-12
    compiled: bool = True

    def __post_init__(self):
        if isinstance(self.recon, str):
            self.recon = ReconMode(self.recon)
        if self.cfl_max is None:
            self.cfl_max = 1.2 * self.cfl_target
        if not 0 < self.cfl_target <= self.cfl_max:
            raise ConfigError("need 0 < cfl_target <= cfl_max")


@dataclass
class RhsResult:
    dqdt: np.ndarray
    max_wave_speed: tuple[float, ...]


def total_fluctuation(q_lower, q_upper, aux_cell, solver: RiemannSolver, normal=1):
    """``A dq_i`` from the two traces of one cell (left trace, right trace)."""
    return solver.total_fluctuation(np.asarray(q_lower, float), np.asarray(q_upper, float),
                                    np.asarray(aux_cell, float), normal)


def _use_compiled(q, config: SemiDiscreteConfig):
    """The fused shallow water sweep covers 2D f-wave-slope runs only."""
    return (config.compiled and _fast.available() and q.ndim == 3 and q.shape[0] == 3
            and type(config.solver) is ShallowFWave and config.recon.tag == FWAVESLOPE
            and config.recon.tau0 == ZERO_DIFF_TOL)


def _sweep(qbc, auxbc, config: SemiDiscreteConfig, normal):
    """Fluctuation sum per interior cell along the last axis.

    ``qbc`` carries exactly three ghost cells on each end of the last axis.
    Returns (A+dq_{i-1/2} + A-dq_{i+1/2} + A dq_i, max |speed|).
    """
    solver = config.solver
    if _use_compiled(qbc, config):
        total, smax, status = _fast.shallow_fwave_sweep(qbc, auxbc[0], solver.g, normal, SPEED_FLOOR)
        if status >= 0:
            idx = np.unravel_index(status, qbc.shape[1:])
            raise NumericalError("dry state (h <= 0) is not supported", index=idx)
        return total, smax
    qL, qR = reconstruct_along(qbc, auxbc, config.recon, solver, normal)
    aux_c = auxbc[..., 2:-2]
    rs = solver.solve(qL[..., :-1], qR[..., 1:], aux_c[..., :-1], aux_c[..., 1:], normal)
    tf = solver.total_fluctuation(qR[..., 1:-1], qL[..., 1:-1], aux_c[..., 1:-1], normal)
    total = rs.apdq[..., :-1] + rs.amdq[..., 1:] + tf
    smax = float(np.max(np.abs(rs.speeds))) if rs.speeds.size else 0.0
    return total, smax


class Discretization:
    """Callable semi-discrete operator ``F(q_interior, t) -> (dqdt, speeds)``.

    Ghost cells are refilled from ``bc`` on every call, so boundary data is
    applied at each Runge-Kutta stage with the stage time.
    """

    def __init__(self, grid, bc: BoundarySpec, config: SemiDiscreteConfig, aux, kappa):
        self.grid = grid
        self.bc = bc
        self.config = config
        self.aux = aux
        self.g = grid.num_ghost
        g = self.g
        inner = (slice(g, -g),) * grid.ndim
        self.kappa_inner = kappa[inner]
        if g != 3:
            raise ConfigError("the WENO5 sweeps are written for three ghost cells")

    def fill(self, q, t):
        qbc = pad(q, self.g)
        fill_ghosts_array(qbc, self.bc, t, self.aux, self.g)
        return qbc

    def __call__(self, q, t):
        qbc = self.fill(q, t)
        cfg = self.config
        g = self.g
        if self.grid.ndim == 1:
            total, smax = _sweep(qbc, self.aux, cfg, 1)
            dq = -total / (self.kappa_inner * self.grid.dx)
            speeds = (smax,)
        else:
            qx = np.swapaxes(qbc[:, :, g:-g], 1, 2)
            ax = np.swapaxes(self.aux[:, :, g:-g], 1, 2)
            tx, sx = _sweep(qx, ax, cfg, 1)
            ty, sy = _sweep(qbc[:, g:-g, :], self.aux[:, g:-g, :], cfg, 2)
            dq = -(np.swapaxes(tx, 1, 2) / self.grid.dx + ty / self.grid.dy) / self.kappa_inner
            speeds = (sx, sy)
        if cfg.source is not None:
            dq = dq + cfg.source(q, self.grid, t)
        return dq, speeds


def rhs_1d(state: State, grid: Grid1D, bc: BoundarySpec, config: SemiDiscreteConfig) -> RhsResult:
    disc = Discretization(grid, bc, config, state.aux, state.kappa)
    dq, speeds = disc(state.interior(grid.num_ghost), state.t)
    return RhsResult(dq, speeds)


def rhs_2d(state: State, grid: Grid2D, bc: BoundarySpec, config: SemiDiscreteConfig) -> RhsResult:
    disc = Discretization(grid, bc, config, state.aux, state.kappa)
    dq, speeds = disc(state.interior(grid.num_ghost), state.t)
    return RhsResult(dq, speeds)


def _check_finite(q, stage):
    if not np.all(np.isfinite(q)):
        bad = np.unravel_index(np.argmax(~np.isfinite(q)), q.shape)
        raise NumericalError(f"non-finite value at stage {stage}, index {bad}", stage=stage, index=bad[1:])


def ssprk104(q, t, dt, rhs, first=None):
    """One SSPRK(10,4) step in two-register form.

    ``rhs(q, t)`` returns ``(dqdt, speeds)``.  ``first`` may carry an already
    computed ``rhs(q, t)``.  Returns the new array and the list of per-stage
    speeds.
    """
    speeds = []

    def F(y, ty, stage):
        if stage == 0 and first is not None:
            d, s = first
        else:
            d, s = rhs(y, ty)
        _check_finite(d, stage)
        speeds.append(s)
        return d

    # registers kept as offsets from q: r1 = q + e1, r2 = 0.4 q + e2 after the
    # first phase, so a vanishing F leaves q bit-for-bit unchanged
    e1 = np.zeros_like(q)
    tau = 0.0
    stage = 0
    for _ in range(5):
        e1 += (dt / 6.0) * F(q + e1, t + tau, stage)
        tau += dt / 6.0
        stage += 1
    e2 = 9.0 / 25.0 * e1
    tau2 = 9.0 / 25.0 * tau
    e1 = 15.0 * e2 - 5.0 * e1
    tau = 15.0 * tau2 - 5.0 * tau
    for _ in range(4):
        e1 += (dt / 6.0) * F(q + e1, t + tau, stage)
        tau += dt / 6.0
        stage += 1
    out = q + (e2 + 0.6 * e1 + (dt / 10.0) * F(q + e1, t + tau, stage))
    _check_finite(out, stage)
    return out, speeds


def ssprk104_step(state: State, dt: float, rhs_fn, num_ghost: int = 3) -> State:
    """Advance ``state`` by ``dt``; ``rhs_fn(q_interior, t)`` returns an array
    or an ``(array, speeds)`` pair."""
    if not dt > 0:
        raise ConfigError("dt must be positive")

    def rhs(y, ty):
        r = rhs_fn(y, ty)
        return r if isinstance(r, tuple) else (r, ())

    q_new, _ = ssprk104(state.interior(num_ghost).copy(), state.t, dt, rhs)
    out = state.copy()
    out.q = pad(q_new, num_ghost)
    out.t = state.t + dt
    return out


def compute_dt(max_wave_speed: Sequence[float], grid, cfl_target: float, dt_fallback: float = np.inf) -> float:
    rate = sum(s / d for s, d in zip(max_wave_speed, grid.deltas))
    if rate <= 0:
        return dt_fallback
    return cfl_target / rate


def _cfl(speeds, grid, dt):
    return dt * sum(s / d for s, d in zip(speeds, grid.deltas))


@dataclass
class RunStats:
    steps: int = 0
    rejected: int = 0
    rhs_evals: int = 0
    max_cfl: float = 0.0
    dts: list = field(default_factory=list)


def evolve(state: State, grid, bc: BoundarySpec, config: SemiDiscreteConfig, t_final: float,
           frame_times: Sequence[float] = (), callback=None, stats: RunStats | None = None,
           max_steps: int = 10_000_000) -> list[State]:
    """Integrate to ``t_final`` and return snapshots at ``frame_times``.

    The initial state is always the first frame and ``t_final`` the last.
    Steps are clipped to land exactly on every requested time.  The step
    size comes from the speeds of the first stage of each step; a step whose
    observed CFL exceeds ``config.cfl_max`` at any stage is redone with half
    the step.
    """
    if t_final < state.t:
        raise ConfigError("t_final is before the initial time")
    bc.check_components(state.num_eqn)
    g = grid.num_ghost
    disc = Discretization(grid, bc, config, state.aux, state.kappa)
    stats = stats if stats is not None else RunStats()
    targets = sorted({float(t) for t in frame_times if state.t < t < t_final} | {float(t_final)})
    if t_final == state.t:
        targets = []
    tol = 1e-12 * max(1.0, abs(t_final))

    def snapshot(q, t):
        s = state.copy()
        s.q = pad(q, g)
        fill_ghosts_array(s.q, bc, t, s.aux, g)
        s.t = t
        return s

    q = state.interior(g).copy()
    t = state.t
    frames = [snapshot(q, t)]
    for target in targets:
        while target - t > tol:
            if stats.steps >= max_steps:
                raise NumericalError(f"exceeded {max_steps} steps")
            first = disc(q, t)
            stats.rhs_evals += 1
            dt = compute_dt(first[1], grid, config.cfl_target, dt_fallback=target - t)
            if dt < config.dt_min:
                raise NumericalError(f"time step {dt:g} below floor at t={t:g}")
            while True:
                step = min(dt, target - t)
                if target - t - step <= tol:
                    step = target - t
                q_new, speeds = ssprk104(q, t, step, disc, first=first)
                stats.rhs_evals += len(speeds) - 1
                observed = max(_cfl(s, grid, step) for s in speeds)
                if observed <= config.cfl_max * (1 + 1e-12):
                    break
                stats.rejected += 1
                dt = step / 2.0
                log.debug("rejected step at t=%g (cfl %g), retrying with dt=%g", t, observed, dt)
                if dt < config.dt_min:
                    raise NumericalError(f"time step {dt:g} below floor at t={t:g}")
            q = q_new
            t = target if abs(target - (t + step)) <= tol else t + step
            stats.steps += 1
            stats.max_cfl = max(stats.max_cfl, observed)
            stats.dts.append(step)
            if state.positive:
                for m in state.positive:
                    if np.any(q[m] <= 0):
                        bad = np.unravel_index(np.argmin(q[m]), q[m].shape)
                        raise NumericalError(f"component {m} lost positivity at cell {bad}, t={t:g}", index=bad)
            if callback is not None:
                callback(q, t)
        frames.append(snapshot(q, t))
    return frames
