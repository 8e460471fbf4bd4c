"""Wave-propagation Riemann solvers.

Every solver works on whole arrays of interfaces at once: states have shape
``(m, ...)`` and auxiliary data ``(num_aux, ...)``.  The ``normal`` argument
is the index of the velocity-like component normal to the interface (1 for
x sweeps, 2 for y sweeps of the 2D systems).

Waves are returned as an array ``(num_waves, m, ...)`` together with speeds
``(num_waves, ...)`` and the left/right-going fluctuations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigError, NumericalError


@dataclass
class WaveDecomposition:
    waves: np.ndarray
    speeds: np.ndarray
    amdq: np.ndarray
    apdq: np.ndarray
    is_fwave: bool = False


def fluctuations_from_waves(decomp: WaveDecomposition):
    """Recompute (amdq, apdq) from the waves and speeds alone.

    For q-waves the fluctuations are speed-weighted sums; for f-waves each
    wave goes wholly to the side it travels to, a zero-speed f-wave is split
    evenly.
    """
    s = decomp.speeds[:, None]
    W = decomp.waves
    if decomp.is_fwave:
        left = np.where(s < 0, 1.0, np.where(s == 0, 0.5, 0.0))
        right = np.where(s > 0, 1.0, np.where(s == 0, 0.5, 0.0))
        return (left * W).sum(axis=0), (right * W).sum(axis=0)
    return (np.minimum(s, 0.0) * W).sum(axis=0), (np.maximum(s, 0.0) * W).sum(axis=0)


def _perm(m, normal):
    """Component order putting the normal velocity second."""
    if m == 2:
        if normal != 1:
            raise ConfigError("1D systems only have normal index 1")
        return [0, 1]
    if normal not in (1, 2):
        raise ConfigError(f"normal index must be 1 or 2, got {normal}")
    return [0, normal, 3 - normal]


class RiemannSolver:
    """Base class.  Subclasses define ``solve``, ``total_fluctuation`` and
    ``eigenvectors`` (used by characteristic-wise reconstruction)."""

    kind = ""
    is_fwave = False
    conservative = True
    num_aux = 0

    def solve(self, ql, qr, auxl, auxr, normal=1) -> WaveDecomposition:
        raise NotImplementedError

    def flux(self, q, aux, normal=1):
        raise NotImplementedError

    def total_fluctuation(self, q_lower, q_upper, aux, normal=1):
        """In-cell contribution from the edge values of one cell.

        ``q_lower`` is the value at the cell's left edge, ``q_upper`` at its
        right edge.  Conservative systems difference the flux directly.
        """
        return self.flux(q_upper, aux, normal) - self.flux(q_lower, aux, normal)

    def eigenvectors(self, q, aux, normal=1):
        raise NotImplementedError

    def qwaves(self, ql, qr, auxl, auxr, normal=1):
        """State-jump waves in the same ordering as the f-waves of ``solve``.

        f-wave-slope reconstruction uses these in place of ``Z / s`` for
        waves whose speed is (numerically) zero.
        """
        raise NotImplementedError


def _stack_waves(waves_perm, perm):
    """Undo a component permutation on a (num_waves, m, ...) array."""
    out = np.empty_like(waves_perm)
    out[:, perm] = waves_perm
    return out


def _unperm(v, perm):
    out = np.empty_like(v)
    out[perm] = v
    return out


class Advection(RiemannSolver):
    """Scalar advection q_t + a q_x = 0 with constant speed ``a``."""

    kind = "advection"

    def __init__(self, speed=1.0):
        self.speed = float(speed)

    def solve(self, ql, qr, auxl, auxr, normal=1):
        W = (qr - ql)[None]
        s = np.full((1,) + ql.shape[1:], self.speed)
        amdq = min(self.speed, 0.0) * W[0]
        apdq = max(self.speed, 0.0) * W[0]
        return WaveDecomposition(W, s, amdq, apdq)

    def flux(self, q, aux, normal=1):
        return self.speed * q

    def eigenvectors(self, q, aux, normal=1):
        one = np.ones((1, 1) + q.shape[1:])
        return one, one


class Acoustics(RiemannSolver):
    """Exact solver for linear acoustics in piecewise-homogeneous media.

    State (p, u) or (p, u, v); aux holds (rho, c) per cell.  The system is
    nonconservative, so the in-cell term is ``A_i (q_upper - q_lower)``.
    """

    kind = "acoustics_exact"
    conservative = False
    num_aux = 2

    def solve(self, ql, qr, auxl, auxr, normal=1):
        rho_l, c_l = auxl[0], auxl[1]
        rho_r, c_r = auxr[0], auxr[1]
        if np.any(rho_l <= 0) or np.any(c_l <= 0) or np.any(rho_r <= 0) or np.any(c_r <= 0):
            raise ConfigError("acoustics requires positive density and sound speed")
        m = ql.shape[0]
        perm = _perm(m, normal)
        zl = rho_l * c_l
        zr = rho_r * c_r
        dp = qr[0] - ql[0]
        du = qr[normal] - ql[normal]
        a1 = (-dp + zr * du) / (zl + zr)
        a2 = (dp + zl * du) / (zl + zr)
        num_waves = 2 if m == 2 else 3
        W = np.zeros((num_waves, m) + ql.shape[1:])
        W[0, 0] = -a1 * zl
        W[0, 1] = a1
        W[1, 0] = a2 * zr
        W[1, 1] = a2
        s = np.empty((num_waves,) + ql.shape[1:])
        s[0] = -c_l
        s[1] = c_r
        if m == 3:
            # transverse velocity rides a zero-speed wave
            W[2, 2] = qr[perm[2]] - ql[perm[2]]
            s[2] = 0.0
        W = _stack_waves(W, perm)
        amdq = s[0] * W[0]
        apdq = s[1] * W[1]
        return WaveDecomposition(W, s, amdq, apdq)

    def total_fluctuation(self, q_lower, q_upper, aux, normal=1):
        rho, c = aux[0], aux[1]
        d = q_upper - q_lower
        out = np.zeros_like(d)
        out[0] = rho * c * c * d[normal]
        out[normal] = d[0] / rho
        return out

    def eigenvectors(self, q, aux, normal=1):
        m = q.shape[0]
        perm = _perm(m, normal)
        z = aux[0] * aux[1]
        shape = (m, m) + q.shape[1:]
        R = np.zeros(shape)
        L = np.zeros(shape)
        R[0, 0], R[1, 0] = -z, 1.0
        R[0, 1], R[1, 1] = z, 1.0
        L[0, 0], L[0, 1] = -0.5 / z, 0.5
        L[1, 0], L[1, 1] = 0.5 / z, 0.5
        if m == 3:
            R[2, 2] = 1.0
            L[2, 2] = 1.0
        # rows of R / columns of L follow the state permutation
        Rp = np.empty_like(R)
        Rp[perm] = R
        Lp = np.empty_like(L)
        Lp[:, perm] = L
        return Rp, Lp


def _shallow_flux(q, g, normal):
    h = q[0]
    un = q[normal] / h
    f = np.empty_like(q)
    f[0] = q[normal]
    f[normal] = q[normal] * un + 0.5 * g * h * h
    if q.shape[0] == 3:
        t = 3 - normal
        f[t] = q[t] * un
    return f


def _check_depth(ql, qr):
    if np.any(ql[0] <= 0) or np.any(qr[0] <= 0):
        bad = np.argmin(np.minimum(ql[0], qr[0]))
        raise NumericalError("dry state (h <= 0) is not supported", index=np.unravel_index(bad, ql.shape[1:]))


def _roe_averages(hl, hr, ul, ur, g):
    sl = np.sqrt(hl)
    sr = np.sqrt(hr)
    u_hat = (sl * ul + sr * ur) / (sl + sr)
    c_hat = np.sqrt(0.5 * g * (hl + hr))
    return u_hat, c_hat, sl, sr


class _Shallow(RiemannSolver):
    def __init__(self, g=1.0):
        if g <= 0:
            raise ConfigError("gravitational acceleration must be positive")
        self.g = float(g)

    def flux(self, q, aux, normal=1):
        return _shallow_flux(q, self.g, normal)

    def eigenvectors(self, q, aux, normal=1):
        m = q.shape[0]
        perm = _perm(m, normal)
        _check_depth(q, q)
        h = q[0]
        u = q[normal] / h
        c = np.sqrt(self.g * h)
        shape = (m, m) + q.shape[1:]
        R = np.zeros(shape)
        L = np.zeros(shape)
        R[0, 0], R[1, 0] = 1.0, u - c
        R[0, 1], R[1, 1] = 1.0, u + c
        L[0, 0], L[0, 1] = (u + c) / (2 * c), -1.0 / (2 * c)
        L[1, 0], L[1, 1] = -(u - c) / (2 * c), 1.0 / (2 * c)
        if m == 3:
            v = q[perm[2]] / h
            R[2, 0] = v
            R[2, 1] = v
            R[2, 2] = 1.0
            L[2, 0] = -v
            L[2, 2] = 1.0
        Rp = np.empty_like(R)
        Rp[perm] = R
        Lp = np.empty_like(L)
        Lp[:, perm] = L
        return Rp, Lp

    def _decompose(self, delta, ql, qr, perm):
        """Project ``delta`` (already permuted) on Roe eigenvectors."""
        m = ql.shape[0]
        hl, hr = ql[0], qr[0]
        ul, ur = ql[perm[1]] / hl, qr[perm[1]] / hr
        u_hat, c_hat, sl, sr = _roe_averages(hl, hr, ul, ur, self.g)
        b1 = ((u_hat + c_hat) * delta[0] - delta[1]) / (2 * c_hat)
        b2 = (delta[1] - (u_hat - c_hat) * delta[0]) / (2 * c_hat)
        num_waves = 2 if m == 2 else 3
        W = np.zeros((num_waves, m) + hl.shape)
        W[0, 0] = b1
        W[0, 1] = b1 * (u_hat - c_hat)
        W[1, 0] = b2
        W[1, 1] = b2 * (u_hat + c_hat)
        s = np.empty((num_waves,) + hl.shape)
        s[0] = u_hat - c_hat
        s[1] = u_hat + c_hat
        if m == 3:
            vl, vr = ql[perm[2]] / hl, qr[perm[2]] / hr
            v_hat = (sl * vl + sr * vr) / (sl + sr)
            W[0, 2] = b1 * v_hat
            W[1, 2] = b2 * v_hat
            W[2, 2] = delta[2] - v_hat * delta[0]
            s[2] = u_hat
        return W, s


class ShallowRoe(_Shallow):
    """Roe solver for the shallow water equations with the Harten-Hyman
    entropy fix for transonic rarefactions."""

    kind = "shallow_roe"

    def __init__(self, g=1.0, entropy_fix=True):
        super().__init__(g)
        self.entropy_fix = entropy_fix

    def solve(self, ql, qr, auxl=None, auxr=None, normal=1):
        _check_depth(ql, qr)
        m = ql.shape[0]
        perm = _perm(m, normal)
        qlp, qrp = ql[perm], qr[perm]
        W, s = self._decompose(qrp - qlp, qlp, qrp, perm=list(range(m)))
        df = (s[:, None] * W).sum(axis=0)
        if self.entropy_fix:
            amdq = self._efix_amdq(qlp, qrp, W, s)
        else:
            amdq = (np.minimum(s, 0.0)[:, None] * W).sum(axis=0)
        apdq = df - amdq
        return WaveDecomposition(_stack_waves(W, perm), s, _unperm(amdq, perm), _unperm(apdq, perm))

    def _efix_amdq(self, ql, qr, W, s):
        g = self.g
        # 1-wave: left state vs state just right of the wave
        s0 = ql[1] / ql[0] - np.sqrt(g * ql[0])
        h1 = ql[0] + W[0, 0]
        hu1 = ql[1] + W[0, 1]
        s1 = hu1 / h1 - np.sqrt(g * np.maximum(h1, 0.0))
        trans1 = (s0 < 0) & (s1 > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            frac1 = np.where(trans1, s0 * (s1 - s[0]) / (s1 - s0), np.minimum(s[0], 0.0))
        # 2-wave: state just left of the wave vs right state
        s3 = qr[1] / qr[0] + np.sqrt(g * qr[0])
        h2 = qr[0] - W[1, 0]
        hu2 = qr[1] - W[1, 1]
        s2 = hu2 / h2 + np.sqrt(g * np.maximum(h2, 0.0))
        trans2 = (s2 < 0) & (s3 > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            frac2 = np.where(trans2, s2 * (s3 - s[1]) / (s3 - s2), np.minimum(s[1], 0.0))
        # fully supersonic right-going flow: nothing goes left
        right_super = (s0 >= 0) & (s[0] > 0)
        frac1 = np.where(right_super, 0.0, frac1)
        frac2 = np.where(right_super, 0.0, frac2)
        amdq = frac1 * W[0] + frac2 * W[1]
        if W.shape[0] == 3:
            amdq = amdq + np.minimum(s[2], 0.0) * W[2]
        return amdq


class ShallowFWave(_Shallow):
    """f-wave solver with the bathymetry source folded into the interface
    flux difference.  aux holds the piecewise-constant bottom elevation.

    The interface source uses the mean depth, so a lake at rest yields a
    vanishing flux-difference-minus-source and therefore zero f-waves.
    """

    kind = "shallow_fwave_bathymetry"
    is_fwave = True
    num_aux = 1

    def solve(self, ql, qr, auxl, auxr, normal=1):
        _check_depth(ql, qr)
        m = ql.shape[0]
        perm = _perm(m, normal)
        qlp, qrp = ql[perm], qr[perm]
        delta = _shallow_flux(qrp, self.g, 1) - _shallow_flux(qlp, self.g, 1)
        delta[1] += 0.5 * self.g * (qlp[0] + qrp[0]) * (auxr[0] - auxl[0])
        Z, s = self._decompose(delta, qlp, qrp, perm=list(range(m)))
        Z = _stack_waves(Z, perm)
        decomp = WaveDecomposition(Z, s, None, None, is_fwave=True)
        decomp.amdq, decomp.apdq = fluctuations_from_waves(decomp)
        return decomp

    def qwaves(self, ql, qr, auxl, auxr, normal=1):
        _check_depth(ql, qr)
        m = ql.shape[0]
        perm = _perm(m, normal)
        qlp, qrp = ql[perm], qr[perm]
        W, _ = self._decompose(qrp - qlp, qlp, qrp, perm=list(range(m)))
        return _stack_waves(W, perm)

    def source_term(self, ql, qr, auxl, auxr, normal=1):
        """``dx * Psi`` at the interface (momentum component only)."""
        out = np.zeros_like(ql)
        out[normal] = -0.5 * self.g * (ql[0] + qr[0]) * (auxr[0] - auxl[0])
        return out


class ElasticityFWave(RiemannSolver):
    """f-wave solver for 1D elasticity in layered media.

    State (strain, momentum); aux holds (rho, K).  Stress is
    ``exp(K eps) - 1`` or, with ``stress="linear"``, ``K eps`` which makes the
    system the conservative form of linear acoustics.
    """

    kind = "elasticity_fwave"
    is_fwave = True
    num_aux = 2

    def __init__(self, stress="exponential"):
        if stress not in ("exponential", "linear"):
            raise ConfigError(f"unknown stress law {stress!r}")
        self.stress = stress

    def sigma(self, eps, K):
        if self.stress == "linear":
            return K * eps
        with np.errstate(over="ignore"):
            out = np.expm1(K * eps)
        if not np.all(np.isfinite(out)):
            bad = np.unravel_index(np.argmax(~np.isfinite(out)), out.shape)
            raise NumericalError("stress overflow", index=bad)
        return out

    def sigma_eps(self, eps, K):
        if self.stress == "linear":
            return K * np.ones_like(eps)
        return K * np.exp(K * eps)

    def flux(self, q, aux, normal=1):
        return np.stack([-q[1] / aux[0], -self.sigma(q[0], aux[1])])

    def impedance(self, q, aux):
        rho, K = aux[0], aux[1]
        c = np.sqrt(self.sigma_eps(q[0], K) / rho)
        return rho * c, c

    def solve(self, ql, qr, auxl, auxr, normal=1):
        if np.any(auxl <= 0) or np.any(auxr <= 0):
            raise ConfigError("elasticity requires positive density and modulus")
        zl, cl = self.impedance(ql, auxl)
        zr, cr = self.impedance(qr, auxr)
        d1 = -(qr[1] / auxr[0] - ql[1] / auxl[0])
        d2 = -(self.sigma(qr[0], auxr[1]) - self.sigma(ql[0], auxl[1]))
        b1 = (zr * d1 + d2) / (zl + zr)
        b2 = (zl * d1 - d2) / (zl + zr)
        Z = np.stack([np.stack([b1, b1 * zl]), np.stack([b2, -b2 * zr])])
        s = np.stack([-cl, cr])
        return WaveDecomposition(Z, s, Z[0], Z[1], is_fwave=True)

    def eigenvectors(self, q, aux, normal=1):
        z, _ = self.impedance(q, aux)
        shape = (2, 2) + q.shape[1:]
        R = np.empty(shape)
        L = np.empty(shape)
        R[0, 0], R[1, 0] = 1.0, z
        R[0, 1], R[1, 1] = 1.0, -z
        L[0, 0], L[0, 1] = 0.5, 0.5 / z
        L[1, 0], L[1, 1] = 0.5, -0.5 / z
        return R, L


SOLVER_KINDS = {
    "advection": Advection,
    "acoustics_exact": Acoustics,
    "shallow_roe": ShallowRoe,
    "shallow_fwave_bathymetry": ShallowFWave,
    "elasticity_fwave": ElasticityFWave,
}


def make_solver(kind: str, **params) -> RiemannSolver:
    try:
        cls = SOLVER_KINDS[kind]
    except KeyError:
        raise ConfigError(f"unknown solver kind {kind!r}") from None
    return cls(**params)


# Function-style entry points over single interfaces or arrays of them.

def solve_acoustics(ql, qr, auxl, auxr, normal=1):
    return Acoustics().solve(*map(_as2d, (ql, qr, auxl, auxr)), normal=normal)


def solve_shallow_roe(ql, qr, g=1.0, normal=1, entropy_fix=True):
    return ShallowRoe(g, entropy_fix).solve(_as2d(ql), _as2d(qr), normal=normal)


def solve_shallow_fwave(ql, qr, auxl, auxr, g=1.0, normal=1):
    return ShallowFWave(g).solve(*map(_as2d, (ql, qr, auxl, auxr)), normal=normal)


def solve_elasticity_fwave(ql, qr, auxl, auxr, stress="exponential"):
    return ElasticityFWave(stress).solve(*map(_as2d, (ql, qr, auxl, auxr)))


def _as2d(a):
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a
