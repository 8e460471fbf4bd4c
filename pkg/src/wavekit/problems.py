"""Problem setups: grids, media, initial and boundary data, solver choice.

Every ``setup_*`` function returns a :class:`Setup` whose state already
carries filled ghost cells for ``q`` and ``aux``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (EXTRAPOLATION, PERIODIC, WALL, BoundarySpec, ConfigError, Grid1D, Grid2D,
                   State, cell_average_2d, cell_average_of, fill_ghosts_array)
from .recon import (CHARACTERISTICWISE, COMPONENTWISE, FWAVESLOPE, WAVESLOPE, ReconMode)
from .riemann import Acoustics, ElasticityFWave, ShallowFWave, ShallowRoe
from .solver import DEFAULT_CFL, RadialSource, SemiDiscreteConfig

PROBLEMS = ("acoustics_homog", "acoustics_interface", "sonic_crystal", "stegoton",
            "sw_radial_1d", "sw_dambreak_2d", "sw_hump_perturb", "sw_hump_zero", "sw_hump_smooth")


@dataclass
class Setup:
    problem: str
    grid: Grid1D | Grid2D
    state: State
    bc: BoundarySpec
    config: SemiDiscreteConfig
    t_final: float
    params: dict = field(default_factory=dict)
    # exact cell averages at time t on a given grid, when known
    exact: Callable | None = None

    def unpack(self):
        return self.grid, self.state, self.bc, self.config


def _fill_aux(aux, kinds_lower, kinds_upper):
    spec = BoundarySpec(kinds_lower, kinds_upper)
    return fill_ghosts_array(aux, spec, apply_custom=False, negate=False)


# ---------------------------------------------------------------- acoustics

ACOUSTICS_X0 = -4.0
ACOUSTICS_DOMAIN = (-10.0, 10.0)
ACOUSTICS_TFINAL = 8.0
INTERFACE_MEDIA = ((1.0, 1.0), (4.0, 0.5))


def pulse_profile(a: float, x0: float = ACOUSTICS_X0):
    """Compact C^6 pressure bump of half width ``a`` centred at ``x0``."""
    if not a > 0:
        raise ConfigError("pulse width must be positive")

    def f(x):
        s = np.asarray(x, dtype=float) - x0
        return np.where(np.abs(s) <= a, ((s - a) * (s + a)) ** 6 / a ** 12, 0.0)

    return f


def acoustics_exact(a, media, x0=ACOUSTICS_X0):
    """Pressure and velocity of the right-moving pulse at time t.

    For x < 0 the incident pulse plus its reflection; for x > 0 the
    transmitted part, compressed by the speed ratio.  Returns
    ``fn(x, t) -> (p, u)``.
    """
    (rl, cl), (rr, cr) = media
    zl, zr = rl * cl, rr * cr
    refl = (zr - zl) / (zl + zr)
    trans = 2.0 * zr / (zl + zr)
    f = pulse_profile(a, x0)

    def fn(x, t):
        x = np.asarray(x, dtype=float)
        left = x < 0
        inc = f(x - cl * t)
        ref = f(-x - cl * t)
        tra = f(cl / cr * x - cl * t)
        p = np.where(left, inc + refl * ref, trans * tra)
        u = np.where(left, (inc - refl * ref) / zl, trans * tra / zr)
        return p, u

    def breakpoints(t):
        edges = (x0 - a, x0 + a)
        pts = [0.0]
        pts += [e + cl * t for e in edges]
        pts += [-(e + cl * t) for e in edges]
        pts += [cr / cl * (e + cl * t) for e in edges]
        return pts

    return fn, breakpoints


def setup_acoustics_pulse(medium: str = "homogeneous", a: float = 1.0, mx: int = 200,
                          solver: str = "qwave", recon: str | None = None,
                          cfl: float = DEFAULT_CFL, t_final: float = ACOUSTICS_TFINAL) -> Setup:
    """1D acoustic pulse on [-10, 10].

    ``solver="qwave"`` evolves (p, u) with the exact acoustics solver;
    ``solver="fwave"`` evolves the conservative form (strain, momentum) with
    a linear stress law, where p = -K strain.
    """
    if medium not in ("homogeneous", "interface"):
        raise ConfigError(f"unknown acoustics medium {medium!r}")
    if mx < 50:
        raise ConfigError("acoustics pulse needs mx >= 50")
    if not a > 0:
        raise ConfigError("pulse width must be positive")
    lo, hi = ACOUSTICS_DOMAIN
    grid = Grid1D(lo, hi, mx)
    if medium == "interface":
        if mx % 2:
            raise ConfigError("the material interface at x=0 needs an even mx")
        media = INTERFACE_MEDIA
    else:
        media = ((1.0, 1.0), (1.0, 1.0))
    (rl, cl), (rr, cr) = media
    xc = grid.centers_with_ghosts
    rho = np.where(xc < 0, rl, rr)
    c = np.where(xc < 0, cl, cr)
    fn, bps = acoustics_exact(a, media)

    if solver == "qwave":
        rsolver = Acoustics()
        aux = np.stack([rho, c])
        recon = recon or COMPONENTWISE

        def to_state(p, u, x):
            return np.stack([p, u])
    elif solver == "fwave":
        rsolver = ElasticityFWave("linear")
        aux = np.stack([rho, rho * c * c])
        recon = recon or CHARACTERISTICWISE

        def to_state(p, u, x):
            K = np.where(x < 0, rl * cl * cl, rr * cr * cr)
            R = np.where(x < 0, rl, rr)
            return np.stack([-p / K, R * u])
    else:
        raise ConfigError(f"acoustics solver must be qwave or fwave, got {solver!r}")

    def exact(grid_, t):
        # both media pieces are polynomial, so split-cell Gauss is exact
        x = grid_.centers
        p = cell_average_of(lambda s: fn(s, t)[0], grid_, 8, bps(t))
        u = cell_average_of(lambda s: fn(s, t)[1], grid_, 8, bps(t))
        return to_state(p, u, x)

    q = np.zeros((2, xc.size))
    g = grid.num_ghost
    q[:, g:-g] = exact(grid, 0.0)
    bc = BoundarySpec.uniform(EXTRAPOLATION)
    state = State(q, 0.0, aux=aux)
    fill_ghosts_array(state.q, bc, 0.0, aux, g)
    config = SemiDiscreteConfig(ReconMode(recon), rsolver, cfl_target=cfl)
    pid = "acoustics_homog" if medium == "homogeneous" else "acoustics_interface"
    return Setup(pid, grid, state, bc, config, t_final,
                 dict(a=a, medium=medium, solver=solver, media=media), exact)


# ------------------------------------------------------------ sonic crystal

CRYSTAL_PERIODS = 8
CRYSTAL_ROD_SIDE = 0.4
CRYSTAL_START = 2.0
CRYSTAL_LENGTH = 14.0
AIR = (1.0, 1.0)
ROD = (1000.0, 1.0)
# wavenumbers for a unit lattice: ~800 Hz and ~1500 Hz at a 10 cm lattice
CRYSTAL_WAVENUMBERS = {"long": 1.5, "bandgap": 2.75}


def rod_mask(grid: Grid2D, ghosts=False):
    """Cell-center mask of the square rods (one per unit lattice cell)."""
    X, Y = grid.mesh(ghosts)
    h = 0.5 * CRYSTAL_ROD_SIDE
    inside_x = (X > CRYSTAL_START) & (X < CRYSTAL_START + CRYSTAL_PERIODS)
    fx = np.mod(X - CRYSTAL_START, 1.0)
    fy = np.mod(Y, 1.0)
    return inside_x & (np.abs(fx - 0.5) < h) & (np.abs(fy - 0.5) < h)


def setup_sonic_crystal(mx: int = 280, my: int = 20, mode: str = "long", amplitude: float = 1.0,
                        rods: bool = True, recon: str = COMPONENTWISE, cfl: float = DEFAULT_CFL,
                        t_final: float = 30.0) -> Setup:
    """Plane wave hitting a square-rod array eight periods deep.

    Domain [0, 14] x [0, 1], periodic in y (an infinitely wide array).
    Lengths are in lattice units and speeds in units of the sound speed.
    """
    if mode not in CRYSTAL_WAVENUMBERS:
        raise ConfigError(f"incident mode must be one of {sorted(CRYSTAL_WAVENUMBERS)}")
    grid = Grid2D(Grid1D(0.0, CRYSTAL_LENGTH, mx), Grid1D(0.0, 1.0, my))
    cells_per_rod = min(CRYSTAL_ROD_SIDE / grid.dx, CRYSTAL_ROD_SIDE / grid.dy)
    if cells_per_rod < 8 - 1e-9:
        raise ConfigError(f"rods resolved by {cells_per_rod:.2f} cells; need at least 8")
    mask = rod_mask(grid, ghosts=True) if rods else np.zeros(tuple(n + 6 for n in grid.shape), bool)
    aux = np.stack([np.where(mask, ROD[0], AIR[0]), np.where(mask, ROD[1], AIR[1])])
    k = CRYSTAL_WAVENUMBERS[mode]
    z_air = AIR[0] * AIR[1]
    g = grid.num_ghost
    xg = grid.x.centers_with_ghosts[:g]

    def incident(qbc, auxbc, t):
        # right-going wave entering through the left ghosts
        phase = t - xg / AIR[1]
        p = np.where(phase > 0, amplitude * np.sin(k * AIR[1] * phase), 0.0)
        qbc[0, :g, :] = p[:, None]
        qbc[1, :g, :] = (p / z_air)[:, None]
        qbc[2, :g, :] = 0.0

    bc = BoundarySpec((EXTRAPOLATION, PERIODIC), (EXTRAPOLATION, PERIODIC),
                      custom={(0, "lower"): incident})
    q = np.zeros((3,) + aux.shape[1:])
    state = State(q, 0.0, aux=aux)
    fill_ghosts_array(state.q, bc, 0.0, aux, g)
    config = SemiDiscreteConfig(ReconMode(recon), Acoustics(), cfl_target=cfl)
    return Setup("sonic_crystal", grid, state, bc, config, t_final,
                 dict(mode=mode, k=k, amplitude=amplitude, rods=rods, fill_fraction=_fill_fraction(grid)))


def _fill_fraction(grid: Grid2D) -> float:
    """Rod area per lattice cell, measured on the cell-center mask."""
    m = rod_mask(grid)
    X, _ = grid.mesh()
    in_array = (X > CRYSTAL_START) & (X < CRYSTAL_START + CRYSTAL_PERIODS)
    return float(m[in_array].mean())


# ----------------------------------------------------------------- stegoton

STEGOTON_MEDIA = ((1.0, 1.0), (4.0, 4.0))
PULSE_AMPLITUDE = 0.2
PULSE_T0 = 10.0


def layered_aux(x):
    """(rho, K) of the layered medium: (1,1) on (j, j+1/2), (4,4) otherwise."""
    first = np.mod(x, 1.0) < 0.5
    (r1, k1), (r2, k2) = STEGOTON_MEDIA
    return np.stack([np.where(first, r1, r2), np.where(first, k1, k2)])


def wall_velocity(t, amplitude=PULSE_AMPLITUDE, t0=PULSE_T0):
    """Half-cosine velocity of the left wall; nonzero on [0, 2 t0].

    The wall moves in the negative direction, which stretches the material
    (positive strain) and feeds the stiffening branch of the stress law.
    """
    if 0.0 <= t <= 2.0 * t0:
        return -amplitude * 0.5 * (1.0 + np.cos(np.pi * (t - t0) / t0))
    return 0.0


def moving_wall_bc(velocity: Callable[[float], float], num_ghost: int = 3):
    """Left ghost filler: strain extrapolated, momentum reflected about the
    wall velocity so the interface velocity equals ``velocity(t)``."""
    g = num_ghost

    def fill(qbc, auxbc, t):
        v = velocity(t)
        qbc[0, :g] = qbc[0, g]
        for k in range(g):
            mirror = qbc[1, 2 * g - 1 - k] / auxbc[0, 2 * g - 1 - k]
            qbc[1, k] = auxbc[0, k] * (2.0 * v - mirror)

    return fill


def setup_stegoton(cells_per_layer: int = 24, length: float = 120.0, amplitude: float = PULSE_AMPLITUDE,
                   t0: float = PULSE_T0, recon: str = COMPONENTWISE, stress: str = "exponential",
                   cfl: float = DEFAULT_CFL, t_final: float = 100.0, periodic: bool = False,
                   velocity: Callable | None = None) -> Setup:
    """Nonlinear elastic waves in a periodic layered medium.

    ``periodic=True`` drops the wall pulse and uses periodic boundaries, for
    conservation checks with a user-supplied initial state.
    """
    if cells_per_layer < 2 or cells_per_layer % 2:
        raise ConfigError("cells_per_layer must be even so layer halves align with cell edges")
    n_layers = length
    if abs(n_layers - round(n_layers)) > 1e-12 or n_layers < 1:
        raise ConfigError("length must be a whole number of layers")
    mx = int(round(n_layers)) * cells_per_layer
    grid = Grid1D(0.0, float(round(n_layers)), mx)
    xc = grid.centers_with_ghosts
    aux = layered_aux(xc)
    g = grid.num_ghost
    if periodic:
        bc = BoundarySpec.uniform(PERIODIC)
    else:
        vel = velocity or (lambda t: wall_velocity(t, amplitude, t0))
        # mirror the medium across the wall; continue the last layer outward
        # so that zero-order extrapolation is a clean outflow condition
        aux[:, :g] = aux[:, 2 * g - 1:g - 1:-1]
        aux[:, -g:] = aux[:, -g - 1:-g]
        bc = BoundarySpec((WALL,), (EXTRAPOLATION,), custom={(0, "lower"): moving_wall_bc(vel, g)})
    if recon == WAVESLOPE:
        raise ConfigError("the elasticity solver is an f-wave solver; use fwaveslope")
    q = np.zeros((2, xc.size))
    state = State(q, 0.0, aux=aux)
    fill_ghosts_array(state.q, bc, 0.0, aux, g)
    config = SemiDiscreteConfig(ReconMode(recon), ElasticityFWave(stress), cfl_target=cfl)
    return Setup("stegoton", grid, state, bc, config, t_final,
                 dict(cells_per_layer=cells_per_layer, length=grid.x_upper, amplitude=amplitude,
                      t0=t0, stress=stress, periodic=periodic))


# ------------------------------------------------------------ shallow water

RADIAL_R = 2.5
DAM_RADIUS = 0.5
DAM_HALF_WIDTH = 1.25


def setup_shallow_radial_1d(mr: int = 500, recon: str = CHARACTERISTICWISE, cfl: float = DEFAULT_CFL,
                            t_final: float = 1.0) -> Setup:
    """Radially symmetric dam break: h = 2 for r <= 1/2, 1 beyond, g = 1."""
    if mr < 100:
        raise ConfigError("radial shallow water needs mr >= 100")
    grid = Grid1D(0.0, RADIAL_R, mr)
    xc = grid.centers_with_ghosts
    dx = grid.dx
    left = xc - 0.5 * dx
    # fraction of each cell inside r < 1/2
    frac = np.clip((DAM_RADIUS - left) / dx, 0.0, 1.0)
    q = np.zeros((2, xc.size))
    q[0] = 1.0 + frac
    bc = BoundarySpec((WALL,), (EXTRAPOLATION,), negate=((1,),))
    state = State(q, 0.0, aux=np.zeros((0, xc.size)), positive=(0,))
    fill_ghosts_array(state.q, bc, 0.0, state.aux, grid.num_ghost)
    config = SemiDiscreteConfig(ReconMode(recon), ShallowRoe(1.0), cfl_target=cfl, source=RadialSource())
    return Setup("sw_radial_1d", grid, state, bc, config, t_final, dict(g=1.0))


def _disk_quadrant_area(x, y, R):
    """Area of {X^2 + Y^2 < R^2, 0 < X < x, 0 < Y < y}, odd in x and y."""
    sx, sy = np.sign(x), np.sign(y)
    x, y = np.abs(x), np.abs(y)

    def prim(s):
        s = np.minimum(s, R)
        return 0.5 * (s * np.sqrt(np.maximum(R * R - s * s, 0.0)) + R * R * np.arcsin(s / R))

    xs = np.sqrt(np.maximum(R * R - y * y, 0.0))
    lo = np.minimum(x, xs)
    hi = np.minimum(x, R)
    return sx * sy * (y * lo + prim(hi) - prim(lo))


def disk_cell_fractions(edges, R):
    """Exact area fraction of every cell of a square tensor grid inside the
    disk of radius R, bitwise symmetric under transposition."""
    X, Y = np.meshgrid(edges, edges, indexing="ij")
    F = 0.5 * (_disk_quadrant_area(X, Y, R) + _disk_quadrant_area(Y, X, R))
    area = F[1:, 1:] - F[:-1, 1:] - F[1:, :-1] + F[:-1, :-1]
    d = np.diff(edges)
    frac = area / (d[:, None] * d[None, :])
    return 0.5 * (frac + frac.T)


def setup_shallow_dambreak_2d(mx: int = 125, my: int | None = None, recon: str = CHARACTERISTICWISE,
                              cfl: float = DEFAULT_CFL, t_final: float = 1.0) -> Setup:
    """Circular dam break on [-1.25, 1.25]^2 with g = 1 and a flat bottom."""
    my = mx if my is None else my
    if mx != my:
        raise ConfigError("the dam break needs mx == my")
    axis = Grid1D(-DAM_HALF_WIDTH, DAM_HALF_WIDTH, mx)
    grid = Grid2D(axis, axis)
    g = grid.num_ghost
    edges = axis.x_lower + (np.arange(-g, mx + g + 1)) * axis.dx
    frac = disk_cell_fractions(edges, DAM_RADIUS)
    # quadrature round-off breaks the octant symmetry at 1e-13; restore it exactly
    frac = frac + frac[::-1]
    frac = frac + frac[:, ::-1]
    frac = (frac + frac.T) / 8.0
    q = np.zeros((3,) + frac.shape)
    q[0] = 1.0 + frac
    bc = BoundarySpec.uniform(EXTRAPOLATION, 2)
    state = State(q, 0.0, aux=np.zeros((0,) + frac.shape), positive=(0,))
    fill_ghosts_array(state.q, bc, 0.0, state.aux, g)
    config = SemiDiscreteConfig(ReconMode(recon), ShallowRoe(1.0), cfl_target=cfl)
    return Setup("sw_dambreak_2d", grid, state, bc, config, t_final, dict(g=1.0))


HUMP_G = 9.81
HUMP_EPS = 0.01
HUMP_STRIP = (0.05, 0.15)


def hump_bathymetry(x, y):
    return 0.8 * np.exp(-5.0 * (x - 0.9) ** 2 - 50.0 * (y - 0.5) ** 2)


def smooth_perturbation(x):
    return np.exp(-50.0 * (x - 0.1) ** 2) / 100.0


def setup_shallow_hump(kind: str = "eps_perturb", mx: int = 200, my: int = 100, recon: str = FWAVESLOPE,
                       cfl: float = DEFAULT_CFL, t_final: float | None = None, eps: float = HUMP_EPS,
                       x_upper: float = 2.0, half: bool = False) -> Setup:
    """Lake at rest over an elliptical Gaussian hump on [0, 2] x [0, 1].

    ``kind`` is ``eps_perturb`` (surface raised by ``eps`` on 0.05 < x < 0.15),
    ``zero_perturb`` (unperturbed lake) or ``smooth`` (Gaussian surface bump
    centred at x = 0.1).  Bathymetry is stored as cell averages.
    ``x_upper`` may shorten the domain for references whose waves never
    reach the cut; the cell size stays 2/mx.  ``half=True`` uses the mirror
    symmetry about y = 1/2: only [0, 1/2] is computed (my/2 cells) with a wall
    at y = 1/2.
    """
    if kind not in ("eps_perturb", "zero_perturb", "smooth"):
        raise ConfigError(f"unknown hump variant {kind!r}")
    if kind != "smooth" and (mx < 100 or my < 50):
        raise ConfigError("perturbation runs need at least 100 x 50 cells")
    if eps < 0:
        raise ConfigError("perturbation amplitude must be nonnegative")
    dx = 2.0 / mx
    nx = int(round(x_upper / dx))
    if abs(nx * dx - x_upper) > 1e-12 * x_upper:
        raise ConfigError("x_upper must be a whole number of cells")
    if half and my % 2:
        raise ConfigError("the half domain needs an even my")
    y_axis = Grid1D(0.0, 0.5, my // 2) if half else Grid1D(0.0, 1.0, my)
    grid = Grid2D(Grid1D(0.0, x_upper, nx), y_axis)
    g = grid.num_ghost
    b = cell_average_2d(hump_bathymetry, grid, 5, ghosts=True)
    aux = b[None].copy()
    y_top = WALL if half else EXTRAPOLATION
    _fill_aux(aux, (EXTRAPOLATION,) * 2, (EXTRAPOLATION, y_top))
    b = aux[0]
    h = 1.0 - b
    if kind == "eps_perturb":
        xc = grid.x.centers_with_ghosts
        left = xc - 0.5 * grid.dx
        lo, hi = HUMP_STRIP
        frac = np.clip((np.minimum(left + grid.dx, hi) - np.maximum(left, lo)) / grid.dx, 0.0, 1.0)
        h = h + eps * frac[:, None]
    elif kind == "smooth":
        axis = Grid1D(grid.x.x_lower, grid.x.x_upper, grid.x.num_cells)
        bump = cell_average_of(smooth_perturbation, axis, 8, ghosts=True)
        h = h + bump[:, None]
    q = np.zeros((3,) + h.shape)
    q[0] = h
    if half:
        bc = BoundarySpec((EXTRAPOLATION,) * 2, (EXTRAPOLATION, WALL), negate=((), (2,)))
    else:
        bc = BoundarySpec.uniform(EXTRAPOLATION, 2)
    state = State(q, 0.0, aux=aux, positive=(0,))
    fill_ghosts_array(state.q, bc, 0.0, aux, g)
    config = SemiDiscreteConfig(ReconMode(recon), ShallowFWave(HUMP_G), cfl_target=cfl)
    if t_final is None:
        t_final = 0.12
    pid = {"eps_perturb": "sw_hump_perturb", "zero_perturb": "sw_hump_zero",
           "smooth": "sw_hump_smooth"}[kind]
    return Setup(pid, grid, state, bc, config, t_final, dict(kind=kind, g=HUMP_G, eps=eps, half=half))


def setup_problem(problem: str, **kw) -> Setup:
    """Dispatch on a problem id with keyword overrides."""
    if problem == "acoustics_homog":
        return setup_acoustics_pulse("homogeneous", **kw)
    if problem == "acoustics_interface":
        return setup_acoustics_pulse("interface", **kw)
    if problem == "sonic_crystal":
        return setup_sonic_crystal(**kw)
    if problem == "stegoton":
        return setup_stegoton(**kw)
    if problem == "sw_radial_1d":
        return setup_shallow_radial_1d(**kw)
    if problem == "sw_dambreak_2d":
        return setup_shallow_dambreak_2d(**kw)
    if problem == "sw_hump_perturb":
        return setup_shallow_hump("eps_perturb", **kw)
    if problem == "sw_hump_zero":
        return setup_shallow_hump("zero_perturb", **kw)
    if problem == "sw_hump_smooth":
        return setup_shallow_hump("smooth", **kw)
    raise ConfigError(f"unknown problem {problem!r}; choose from {', '.join(PROBLEMS)}")
