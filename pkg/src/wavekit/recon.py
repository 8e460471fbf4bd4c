"""Fifth-order WENO edge reconstruction.

The WENO5 increment is written in terms of the four neighbouring differences
around a cell, ``F(d1, d2, d3, d4)`` with ``d3`` the difference across the
edge being reconstructed.  The right edge of cell ``c`` is

    Q_c + F(D_{c-3/2}, D_{c-1/2}, D_{c+1/2}, D_{c+3/2})

and the left edge, by mirror symmetry,

    Q_c - F(D_{c+3/2}, D_{c+1/2}, D_{c-1/2}, D_{c-3/2}).

Component-wise and characteristic-wise reconstruction use the Jiang-Shu
weights with a vanishing regularization, so the limiter is (to round-off)
invariant under scaling of the data.  Wave-slope reconstruction feeds
the same increment with ratios of wave inner products, so there the limiter
only sees dimensionless quantities.

All functions reconstruct along the last array axis; leading axes are
components and (in 2D) the transverse index.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigError, NumericalError

COMPONENTWISE = "componentwise"
CHARACTERISTICWISE = "characteristicwise"
WAVESLOPE = "waveslope"
FWAVESLOPE = "fwaveslope"
MODES = (COMPONENTWISE, CHARACTERISTICWISE, WAVESLOPE, FWAVESLOPE)

# regularization of the smoothness weights; small enough that it never masks
# features of small amplitude (a pulse tail crossing a material jump)
WENO_EPS = 1e-36
ZERO_DIFF_TOL = 1e-12
SPEED_FLOOR = 1e-8

# linear weights for the right edge, stencils shifted left to right
_GAMMA = (0.1, 0.6, 0.3)


@dataclass(frozen=True)
class ReconMode:
    tag: str = COMPONENTWISE
    tau0: float = ZERO_DIFF_TOL

    def __post_init__(self):
        if self.tag not in MODES:
            raise ConfigError(f"unknown reconstruction mode {self.tag!r}")
        if not self.tau0 > 0:
            raise ConfigError("zero-difference threshold must be positive")


@dataclass
class ReconstructedEdges:
    """Edge values per cell.

    ``qL[..., k]`` is the value at the right edge of cell k (the left state
    of the interface to its right); ``qR[..., k]`` the value at its left edge.
    """

    qL: np.ndarray
    qR: np.ndarray


def weno_increment(d1, d2, d3, d4, eps=WENO_EPS):
    """WENO5 (Jiang-Shu) right-edge increment from the four differences."""
    p0 = (5.0 * d2 - 2.0 * d1) / 6.0
    p1 = (d2 + 2.0 * d3) / 6.0
    p2 = (4.0 * d3 - d4) / 6.0
    b0 = 13.0 / 12.0 * (d2 - d1) ** 2 + 0.25 * (3.0 * d2 - d1) ** 2
    b1 = 13.0 / 12.0 * (d3 - d2) ** 2 + 0.25 * (d2 + d3) ** 2
    b2 = 13.0 / 12.0 * (d4 - d3) ** 2 + 0.25 * (d4 - 3.0 * d3) ** 2
    a0 = _GAMMA[0] / (eps + b0) ** 2
    a1 = _GAMMA[1] / (eps + b1) ** 2
    a2 = _GAMMA[2] / (eps + b2) ** 2
    return (a0 * p0 + a1 * p1 + a2 * p2) / (a0 + a1 + a2)


def _limited_increment(d1, d2, d3, d4, scale, tau0):
    """Increment from raw differences.

    No zero-difference cut here: at a smooth extremum ``d3`` vanishes while
    the correct increment does not.  ``scale`` and ``tau0`` are kept for a
    uniform call signature.
    """
    return weno_increment(d1, d2, d3, d4)


def weno5_edge(values, tau0=ZERO_DIFF_TOL):
    """Reconstruct one cell from five cell averages ``v[i-2] .. v[i+2]``.

    Returns ``(right_edge_value, left_edge_value)``, i.e. the traces at
    ``x_{i+1/2}`` from inside cell i and at ``x_{i-1/2}``.
    """
    v = np.asarray(values, dtype=float)
    if v.shape != (5,):
        raise ValueError("weno5_edge takes exactly five values")
    upper, lower = _scalar_edges(v, tau0)
    return float(upper[0]), float(lower[0])


def _stencil_scale(v, n_out):
    """max(|v| over each 5-cell stencil, 1) for cells 2..n-3."""
    a = np.abs(v)
    s = np.maximum(np.maximum(a[..., 0:n_out], a[..., 1:n_out + 1]),
                   np.maximum(a[..., 2:n_out + 2], a[..., 3:n_out + 3]))
    s = np.maximum(s, a[..., 4:n_out + 4])
    return np.maximum(s, 1.0)


def _scalar_edges(v, tau0):
    """Component-wise WENO5 along the last axis.

    Returns (upper, lower) for cells 2..n-3 of ``v``.
    """
    n_out = v.shape[-1] - 4
    d = np.diff(v, axis=-1)
    d1, d2, d3, d4 = (d[..., k:k + n_out] for k in range(4))
    scale = _stencil_scale(v, n_out)
    center = v[..., 2:2 + n_out]
    # right and left edges in one pass
    inc = _limited_increment(np.stack([d1, d4]), np.stack([d2, d3]), np.stack([d3, d2]),
                             np.stack([d4, d1]), scale, tau0)
    return center + inc[0], center - inc[1]


def _characteristic_edges(q, aux, solver, normal, tau0):
    n_out = q.shape[-1] - 4
    qc = q[..., 2:2 + n_out]
    R, L = solver.eigenvectors(qc, aux[..., 2:2 + n_out], normal)
    # project the 5-cell stencil of every cell on its own eigenvectors
    w = np.stack([np.einsum("ij...,j...->i...", L, q[..., k:k + n_out]) for k in range(5)], axis=-1)
    d = np.diff(w, axis=-1)
    a = np.abs(w).max(axis=-1)
    scale = np.maximum(a, 1.0)
    d1, d2, d3, d4 = (d[..., k] for k in range(4))
    inc = _limited_increment(np.stack([d1, d4]), np.stack([d2, d3]), np.stack([d3, d2]),
                             np.stack([d4, d1]), scale, tau0)
    upper = qc + np.einsum("ij...,j...->i...", R, inc[0])
    lower = qc - np.einsum("ij...,j...->i...", R, inc[1])
    return upper, lower


def _wave_edges(q, aux, solver, normal, tau0, fwave):
    """Wave-slope reconstruction from Riemann problems between cell averages."""
    n_out = q.shape[-1] - 4
    decomp = solver.solve(q[..., :-1], q[..., 1:], aux[..., :-1], aux[..., 1:], normal)
    W = decomp.waves
    if fwave:
        s = decomp.speeds
        slow = np.abs(s) <= SPEED_FLOOR * np.max(np.abs(s), initial=0.0)
        W = W / np.where(slow, 1.0, s)[:, None]
        if np.any(slow):
            # Z / s has no limit to take at s = 0; use the state-jump wave
            try:
                qw = solver.qwaves(q[..., :-1], q[..., 1:], aux[..., :-1], aux[..., 1:], normal)
            except NotImplementedError:
                bad = np.unravel_index(np.argmax(slow), s.shape)
                raise NumericalError("f-wave-slope reconstruction hit a (near) zero wave speed",
                                     index=bad[1:]) from None
            W = np.where(slow[:, None], qw, W)
    # data scale: max |Q| over the stencil and components
    scale = _stencil_scale(np.abs(q).max(axis=0), n_out)
    qc = q[..., 2:2 + n_out]
    # interfaces c-3/2 .. c+3/2 for cell c (interface k sits between cells k and k+1)
    Wk = [W[..., k:k + n_out] for k in range(4)]
    upper = qc.copy()
    lower = qc.copy()
    for ref_idx, sign, out in ((2, 1.0, upper), (1, -1.0, lower)):
        ref = Wk[ref_idx]
        norm2 = np.einsum("pm...,pm...->p...", ref, ref)
        small = norm2 <= (tau0 * scale) ** 2
        safe = np.where(small, 1.0, norm2)
        theta = [np.einsum("pm...,pm...->p...", Wk[j], ref) / safe for j in range(4)]
        one = np.ones_like(norm2)
        if sign > 0:
            phi = weno_increment(theta[0], theta[1], one, theta[3])
        else:
            phi = weno_increment(theta[3], theta[2], one, theta[0])
        phi = np.where(small, 0.0, phi)
        out += sign * np.einsum("p...,pm...->m...", phi, ref)
    return upper, lower


def reconstruct_along(q, aux, mode: ReconMode | str, solver=None, normal=1):
    """Edge values for cells 2..n-3 along the last axis of ``q``.

    Returns ``(qL, qR)``: right-edge and left-edge traces of each cell.
    """
    if isinstance(mode, str):
        mode = ReconMode(mode)
    tag = mode.tag
    if tag == COMPONENTWISE:
        return _scalar_edges(q, mode.tau0)
    if solver is None:
        raise ConfigError(f"{tag} reconstruction needs a Riemann solver")
    if tag == CHARACTERISTICWISE:
        return _characteristic_edges(q, aux, solver, normal, mode.tau0)
    if tag == WAVESLOPE:
        if solver.is_fwave:
            raise ConfigError("waveslope reconstruction needs a q-wave solver; use fwaveslope")
        return _wave_edges(q, aux, solver, normal, mode.tau0, fwave=False)
    if not solver.is_fwave:
        raise ConfigError("fwaveslope reconstruction needs an f-wave solver")
    return _wave_edges(q, aux, solver, normal, mode.tau0, fwave=True)


def reconstruct(state, grid, mode, solver=None) -> ReconstructedEdges:
    """Reconstruct a ghost-filled 1D state.

    The result covers the interior cells plus one ghost cell on each side, so
    that every interior interface has both of its traces.
    """
    qL, qR = reconstruct_along(state.q, state.aux, mode, solver)
    g = grid.num_ghost
    trim = slice(g - 3, qL.shape[-1] - (g - 3)) if g > 3 else slice(None)
    return ReconstructedEdges(qL[..., trim], qR[..., trim])


def reconstruct_2d_rows_cols(state, grid, mode, solver=None):
    """x-sweep and y-sweep edges of a ghost-filled 2D state.

    Returns ``(x_edges, y_edges)``; arrays are indexed ``[m, i, j]`` with the
    swept axis extended by one ghost cell on each side.
    """
    g = grid.num_ghost
    q, aux = state.q, state.aux
    qx = np.swapaxes(q[:, :, g:-g], 1, 2)
    ax = np.swapaxes(aux[:, :, g:-g], 1, 2)
    xl, xr = reconstruct_along(qx, ax, mode, solver, normal=1)
    yl, yr = reconstruct_along(q[:, g:-g, :], aux[:, g:-g, :], mode, solver, normal=2)
    x_edges = ReconstructedEdges(np.swapaxes(xl, 1, 2), np.swapaxes(xr, 1, 2))
    y_edges = ReconstructedEdges(yl, yr)
    return x_edges, y_edges
