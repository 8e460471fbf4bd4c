"""Grids, solution state and ghost-cell boundary conditions.

Arrays are stored component-first: ``q[m, i]`` in 1D and ``q[m, i, j]`` in 2D,
with ``i`` the x index and ``j`` the y index.  Every stored array carries
``num_ghost`` ghost cells on each side of every spatial axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

NUM_GHOST = 3

PERIODIC = "periodic"
EXTRAPOLATION = "extrapolation"
WALL = "wall"
BC_KINDS = (PERIODIC, EXTRAPOLATION, WALL)


class ConfigError(ValueError):
    """Invalid problem, grid or solver configuration."""


class NumericalError(RuntimeError):
    """Numerical failure during a run (non-finite values, lost positivity...)."""

    def __init__(self, message, *, stage=None, index=None):
        super().__init__(message)
        self.stage = stage
        self.index = index


@dataclass(frozen=True)
class Grid1D:
    x_lower: float
    x_upper: float
    num_cells: int
    num_ghost: int = NUM_GHOST

    def __post_init__(self):
        if self.num_cells <= 0:
            raise ConfigError(f"num_cells must be positive, got {self.num_cells}")
        if not self.x_upper > self.x_lower:
            raise ConfigError("x_upper must exceed x_lower")
        if self.num_ghost < NUM_GHOST:
            raise ConfigError(f"num_ghost must be at least {NUM_GHOST} for WENO5")

    @property
    def dx(self) -> float:
        return (self.x_upper - self.x_lower) / self.num_cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_lower + (np.arange(self.num_cells) + 0.5) * self.dx

    @property
    def edges(self) -> np.ndarray:
        return self.x_lower + np.arange(self.num_cells + 1) * self.dx

    @property
    def centers_with_ghosts(self) -> np.ndarray:
        g = self.num_ghost
        return self.x_lower + (np.arange(-g, self.num_cells + g) + 0.5) * self.dx

    @property
    def shape(self) -> tuple[int]:
        return (self.num_cells,)

    @property
    def deltas(self) -> tuple[float]:
        return (self.dx,)

    @property
    def ndim(self) -> int:
        return 1


@dataclass(frozen=True)
class Grid2D:
    x: Grid1D
    y: Grid1D

    def __post_init__(self):
        if self.x.num_ghost != self.y.num_ghost:
            raise ConfigError("both axes must use the same ghost width")

    @property
    def num_ghost(self) -> int:
        return self.x.num_ghost

    @property
    def dx(self) -> float:
        return self.x.dx

    @property
    def dy(self) -> float:
        return self.y.dx

    @property
    def shape(self) -> tuple[int, int]:
        return (self.x.num_cells, self.y.num_cells)

    @property
    def deltas(self) -> tuple[float, float]:
        return (self.x.dx, self.y.dx)

    @property
    def ndim(self) -> int:
        return 2

    def mesh(self, ghosts: bool = False):
        """Cell-center coordinate arrays indexed ``[i, j]``."""
        if ghosts:
            return np.meshgrid(self.x.centers_with_ghosts, self.y.centers_with_ghosts, indexing="ij")
        return np.meshgrid(self.x.centers, self.y.centers, indexing="ij")


Grid = Grid1D | Grid2D


@dataclass
class State:
    """Cell averages ``q``, capacity ``kappa`` and auxiliary coefficients ``aux``.

    All three arrays include ghost cells.  ``positive`` lists components that
    must stay strictly positive (the depth for shallow water).
    """

    q: np.ndarray
    t: float = 0.0
    kappa: np.ndarray | None = None
    aux: np.ndarray | None = None
    positive: tuple[int, ...] = ()

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        spatial = self.q.shape[1:]
        if self.kappa is None:
            self.kappa = np.ones(spatial)
        if self.aux is None:
            self.aux = np.zeros((0,) + spatial)
        self.kappa = np.asarray(self.kappa, dtype=float)
        self.aux = np.asarray(self.aux, dtype=float)
        if self.kappa.shape != spatial or self.aux.shape[1:] != spatial:
            raise ConfigError("kappa/aux shapes do not match q")

    @property
    def num_eqn(self) -> int:
        return self.q.shape[0]

    def interior(self, num_ghost: int = NUM_GHOST) -> np.ndarray:
        return self.q[(slice(None),) + interior_slices(self.q.ndim - 1, num_ghost)]

    def copy(self) -> "State":
        return replace(self, q=self.q.copy(), kappa=self.kappa.copy(), aux=self.aux.copy())

    def validate(self, num_ghost: int = NUM_GHOST):
        inner = self.interior(num_ghost)
        if not np.all(np.isfinite(inner)):
            bad = np.argwhere(~np.isfinite(inner))[0]
            raise NumericalError(f"non-finite value at {tuple(bad)}", index=tuple(bad[1:]))
        if np.any(self.kappa <= 0):
            raise ConfigError("capacity must be positive")
        for m in self.positive:
            if np.any(inner[m] <= 0):
                bad = np.unravel_index(np.argmin(inner[m]), inner[m].shape)
                raise NumericalError(f"component {m} lost positivity at cell {bad}", index=bad)


def interior_slices(ndim: int, num_ghost: int = NUM_GHOST) -> tuple[slice, ...]:
    return (slice(num_ghost, -num_ghost),) * ndim


# custom ghost filler: fn(qbc, auxbc, t) writes ghost cells in place
GhostFn = Callable[[np.ndarray, np.ndarray, float], None]


@dataclass
class BoundarySpec:
    """Per-axis boundary kinds.

    ``lower[d]``/``upper[d]`` is one of periodic, extrapolation, wall.  At walls
    the components listed in ``negate[d]`` flip sign in the mirrored ghosts.
    ``custom`` maps ``(axis, "lower"|"upper")`` to a callable run after the
    standard fill, used for time-dependent inflow data.
    """

    lower: tuple[str, ...]
    upper: tuple[str, ...]
    negate: tuple[tuple[int, ...], ...] = ()
    custom: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lower = tuple(self.lower)
        self.upper = tuple(self.upper)
        if len(self.lower) != len(self.upper):
            raise ConfigError("lower/upper boundary lists differ in length")
        if not self.negate:
            self.negate = ((),) * len(self.lower)
        self.negate = tuple(tuple(n) for n in self.negate)
        for lo, hi in zip(self.lower, self.upper):
            for kind in (lo, hi):
                if kind not in BC_KINDS:
                    raise ConfigError(f"unknown boundary kind {kind!r}")
            if (lo == PERIODIC) != (hi == PERIODIC):
                raise ConfigError("periodic must be set on both opposing edges")

    @classmethod
    def uniform(cls, kind: str, ndim: int = 1, negate=()):
        return cls((kind,) * ndim, (kind,) * ndim, negate)

    def check_components(self, num_eqn: int):
        for axis_neg in self.negate:
            for m in axis_neg:
                if not 0 <= m < num_eqn:
                    raise ConfigError(f"wall negation index {m} out of range for {num_eqn} components")


def _fill_axis(a, axis, g, lower, upper, negate):
    """Fill the ghost layers of ``a`` along ``axis`` (counted over spatial dims + 1)."""
    n = a.shape[axis] - 2 * g

    def sl(start, stop, step=None):
        idx = [slice(None)] * a.ndim
        idx[axis] = slice(start, stop, step)
        return tuple(idx)

    for side, kind in (("lower", lower), ("upper", upper)):
        if side == "lower":
            ghost = sl(0, g)
            if kind == PERIODIC:
                src = sl(n, n + g)
            elif kind == EXTRAPOLATION:
                src = sl(g, g + 1)
            else:
                src = sl(2 * g - 1, g - 1, -1)
        else:
            ghost = sl(n + g, n + 2 * g)
            if kind == PERIODIC:
                src = sl(g, 2 * g)
            elif kind == EXTRAPOLATION:
                src = sl(n + g - 1, n + g)
            else:
                src = sl(n + g - 1, n - 1 if n > 0 else None, -1)
        a[ghost] = a[src]
        if kind == WALL and negate:
            for m in negate:
                a[(m,) + ghost[1:]] *= -1.0


def fill_ghosts_array(a: np.ndarray, bc: BoundarySpec, t: float = 0.0, aux: np.ndarray | None = None,
                      num_ghost: int = NUM_GHOST, apply_custom: bool = True, negate: bool = True):
    """In-place ghost fill of a component-first array ``a``.

    In 2D the x ghosts are filled over interior rows and the y ghosts over
    interior columns; corner ghosts are never read by the scheme.
    """
    g = num_ghost
    ndim = a.ndim - 1
    for d in range(ndim):
        view = a
        if ndim == 2:
            # restrict to interior of the other axis
            view = a[:, :, g:-g] if d == 0 else a[:, g:-g, :]
        _fill_axis(view, d + 1, g, bc.lower[d], bc.upper[d], bc.negate[d] if negate else ())
    if apply_custom:
        for key in sorted(bc.custom):
            bc.custom[key](a, aux, t)
    return a


def fill_ghost_cells(state: State, grid: Grid, bc: BoundarySpec) -> State:
    """Return a copy of ``state`` with ghost cells filled; interior untouched."""
    bc.check_components(state.num_eqn)
    out = state.copy()
    fill_ghosts_array(out.q, bc, state.t, out.aux, grid.num_ghost)
    return out


def pad(interior: np.ndarray, num_ghost: int = NUM_GHOST) -> np.ndarray:
    """Embed an interior array in a zero-initialized ghost-framed array."""
    g = num_ghost
    shape = interior.shape[:1] + tuple(n + 2 * g for n in interior.shape[1:])
    out = np.zeros(shape)
    out[(slice(None),) + interior_slices(interior.ndim - 1, g)] = interior
    return out


def gauss_nodes(order: int):
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def cell_average_of(fn: Callable, grid: Grid1D, quadrature_order: int = 5,
                    breakpoints: Sequence[float] = (), ghosts: bool = False) -> np.ndarray:
    """Gauss-Legendre cell averages of ``fn`` over each cell of ``grid``.

    Cells containing one of ``breakpoints`` are split there so that piecewise
    smooth functions are integrated piece by piece.
    """
    nodes, weights = gauss_nodes(quadrature_order)
    n = grid.num_cells + (2 * grid.num_ghost if ghosts else 0)
    lo = grid.x_lower - (grid.num_ghost * grid.dx if ghosts else 0.0)
    left = lo + np.arange(n) * grid.dx
    right = left + grid.dx
    x = left[:, None] + grid.dx * nodes[None, :]
    avg = np.asarray(fn(x), dtype=float) @ weights * np.ones(n)
    for b in breakpoints:
        for i in np.nonzero((left < b) & (b < right))[0]:
            total = 0.0
            for a0, a1 in ((left[i], b), (b, right[i])):
                xs = a0 + (a1 - a0) * nodes
                total += (a1 - a0) * np.dot(np.asarray(fn(xs), dtype=float) * np.ones_like(xs), weights)
            avg[i] = total / grid.dx
    return avg


def cell_average_2d(fn: Callable, grid: Grid2D, quadrature_order: int = 5, ghosts: bool = False) -> np.ndarray:
    """Tensor-product Gauss cell averages of ``fn(x, y)`` on a 2D grid."""
    nodes, weights = gauss_nodes(quadrature_order)
    out = None
    xs = grid.x.centers_with_ghosts if ghosts else grid.x.centers
    ys = grid.y.centers_with_ghosts if ghosts else grid.y.centers
    X, Y = np.meshgrid(xs - 0.5 * grid.dx, ys - 0.5 * grid.dy, indexing="ij")
    for a, wa in zip(nodes, weights):
        for b, wb in zip(nodes, weights):
            val = wa * wb * np.asarray(fn(X + a * grid.dx, Y + b * grid.dy), dtype=float)
            out = val if out is None else out + val
    return out
