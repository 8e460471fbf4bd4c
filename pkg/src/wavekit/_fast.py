"""Compiled sweep for 2D shallow water over bathymetry with f-wave-slope
reconstruction.

Same arithmetic as the array code in ``recon`` and ``riemann``, fused into one
pass per grid line.  Used by the solver when numba is importable; results
agree with the array path to round-off.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None

EPS = 1e-36
GAMMA0, GAMMA1, GAMMA2 = 0.1, 0.6, 0.3


def available() -> bool:
    return njit is not None


def _weno(d1, d2, d3, d4):
    p0 = (5.0 * d2 - 2.0 * d1) / 6.0
    p1 = (d2 + 2.0 * d3) / 6.0
    p2 = (4.0 * d3 - d4) / 6.0
    b0 = 13.0 / 12.0 * (d2 - d1) ** 2 + 0.25 * (3.0 * d2 - d1) ** 2
    b1 = 13.0 / 12.0 * (d3 - d2) ** 2 + 0.25 * (d2 + d3) ** 2
    b2 = 13.0 / 12.0 * (d4 - d3) ** 2 + 0.25 * (d4 - 3.0 * d3) ** 2
    a0 = GAMMA0 / (EPS + b0) ** 2
    a1 = GAMMA1 / (EPS + b1) ** 2
    a2 = GAMMA2 / (EPS + b2) ** 2
    return (a0 * p0 + a1 * p1 + a2 * p2) / (a0 + a1 + a2)


def _decompose(d0, d1, d2, hl, hr, hul, hur, hvl, hvr, g, W, s):
    """Roe eigen-decomposition of (d0, d1, d2); components (h, hu_n, hu_t)."""
    sl = np.sqrt(hl)
    sr = np.sqrt(hr)
    ul = hul / hl
    ur = hur / hr
    u_hat = (sl * ul + sr * ur) / (sl + sr)
    c_hat = np.sqrt(0.5 * g * (hl + hr))
    vl = hvl / hl
    vr = hvr / hr
    v_hat = (sl * vl + sr * vr) / (sl + sr)
    b1 = ((u_hat + c_hat) * d0 - d1) / (2 * c_hat)
    b2 = (d1 - (u_hat - c_hat) * d0) / (2 * c_hat)
    W[0, 0] = b1
    W[0, 1] = b1 * (u_hat - c_hat)
    W[0, 2] = b1 * v_hat
    W[1, 0] = b2
    W[1, 1] = b2 * (u_hat + c_hat)
    W[1, 2] = b2 * v_hat
    W[2, 0] = 0.0
    W[2, 1] = 0.0
    W[2, 2] = d2 - v_hat * d0
    s[0] = u_hat - c_hat
    s[1] = u_hat + c_hat
    s[2] = u_hat


def _fwaves(ql, qr, bl, br, g, W, s):
    hl, hr = ql[0], qr[0]
    dfh = qr[1] - ql[1]
    dfn = (qr[1] * (qr[1] / hr) + 0.5 * g * hr * hr) - (ql[1] * (ql[1] / hl) + 0.5 * g * hl * hl)
    dft = qr[2] * (qr[1] / hr) - ql[2] * (ql[1] / hl)
    dfn += 0.5 * g * (hl + hr) * (br - bl)
    _decompose(dfh, dfn, dft, hl, hr, ql[1], qr[1], ql[2], qr[2], g, W, s)


def _sweep(q, b, g, floor):
    """Fluctuation sum along the last axis.

    ``q`` is (3, nt, n) in (h, normal, transverse) order with three ghost
    cells at both ends of the last axis, ``b`` is (nt, n).  Returns
    (total (3, nt, n - 6), max |speed|, status) with status -1 when all depths
    are positive, else the flat index of the first dry interface.
    """
    nt, n = b.shape
    ni = n - 1
    Wall = np.empty((nt, ni, 3, 3))
    sall = np.empty((nt, ni, 3))
    W = np.empty((3, 3))
    s = np.empty(3)
    ql = np.empty(3)
    qr = np.empty(3)
    smax_rec = 0.0
    for j in range(nt):
        for k in range(ni):
            for m in range(3):
                ql[m] = q[m, j, k]
                qr[m] = q[m, j, k + 1]
            if ql[0] <= 0.0 or qr[0] <= 0.0:
                return np.zeros((3, nt, n - 6)), 0.0, j * n + k
            _fwaves(ql, qr, b[j, k], b[j, k + 1], g, W, s)
            for p in range(3):
                sall[j, k, p] = s[p]
                a = abs(s[p])
                if a > smax_rec:
                    smax_rec = a
                for m in range(3):
                    Wall[j, k, p, m] = W[p, m]
    cut = floor * smax_rec
    for j in range(nt):
        for k in range(ni):
            slow = False
            for p in range(3):
                if abs(sall[j, k, p]) <= cut:
                    slow = True
            if slow:
                _decompose(q[0, j, k + 1] - q[0, j, k], q[1, j, k + 1] - q[1, j, k],
                           q[2, j, k + 1] - q[2, j, k], q[0, j, k], q[0, j, k + 1],
                           q[1, j, k], q[1, j, k + 1], q[2, j, k], q[2, j, k + 1], g, W, s)
            for p in range(3):
                sp = sall[j, k, p]
                if abs(sp) <= cut:
                    for m in range(3):
                        Wall[j, k, p, m] = W[p, m]
                else:
                    for m in range(3):
                        Wall[j, k, p, m] = Wall[j, k, p, m] / sp

    nr = n - 4
    up = np.empty((3, nr))
    lo = np.empty((3, nr))
    th = np.empty(4)
    total = np.empty((3, nt, n - 6))
    smax = 0.0
    fl = np.empty(3)
    fr = np.empty(3)
    amdq = np.empty(3)
    apdq = np.empty(3)
    apdq_prev = np.empty(3)
    for j in range(nt):
        for c in range(nr):
            i = c + 2
            scale = 1.0
            for k in range(i - 2, i + 3):
                for m in range(3):
                    a = abs(q[m, j, k])
                    if a > scale:
                        scale = a
            tol2 = (1e-12 * scale) ** 2
            for m in range(3):
                up[m, c] = q[m, j, i]
                lo[m, c] = q[m, j, i]
            # interfaces i-2 .. i+1 hold W_{c-3/2} .. W_{c+3/2}
            for side in range(2):
                ref = i if side == 0 else i - 1
                for p in range(3):
                    norm2 = 0.0
                    for m in range(3):
                        norm2 += Wall[j, ref, p, m] * Wall[j, ref, p, m]
                    if norm2 <= tol2:
                        continue
                    for jj in range(4):
                        dot = 0.0
                        for m in range(3):
                            dot += Wall[j, i - 2 + jj, p, m] * Wall[j, ref, p, m]
                        th[jj] = dot / norm2
                    if side == 0:
                        phi = _weno(th[0], th[1], 1.0, th[3])
                        for m in range(3):
                            up[m, c] += phi * Wall[j, ref, p, m]
                    else:
                        phi = _weno(th[3], th[2], 1.0, th[0])
                        for m in range(3):
                            lo[m, c] -= phi * Wall[j, ref, p, m]
        # Riemann problems between traces; interface k joins cells k, k+1
        for k in range(nr - 1):
            for m in range(3):
                ql[m] = up[m, k]
                qr[m] = lo[m, k + 1]
            if ql[0] <= 0.0 or qr[0] <= 0.0:
                return np.zeros((3, nt, n - 6)), 0.0, j * n + k + 2
            _fwaves(ql, qr, b[j, k + 2], b[j, k + 3], g, W, s)
            for m in range(3):
                amdq[m] = 0.0
                apdq[m] = 0.0
            for p in range(3):
                a = abs(s[p])
                if a > smax:
                    smax = a
                wl = 1.0 if s[p] < 0 else (0.5 if s[p] == 0 else 0.0)
                wr = 1.0 if s[p] > 0 else (0.5 if s[p] == 0 else 0.0)
                for m in range(3):
                    amdq[m] += wl * W[p, m]
                    apdq[m] += wr * W[p, m]
            if k >= 1:
                # cell k: right-going from k-1/2, left-going from k+1/2, in-cell flux difference
                hl, hr = lo[0, k], up[0, k]
                fl[0] = lo[1, k]
                fl[1] = lo[1, k] * (lo[1, k] / hl) + 0.5 * g * hl * hl
                fl[2] = lo[2, k] * (lo[1, k] / hl)
                fr[0] = up[1, k]
                fr[1] = up[1, k] * (up[1, k] / hr) + 0.5 * g * hr * hr
                fr[2] = up[2, k] * (up[1, k] / hr)
                for m in range(3):
                    total[m, j, k - 1] = apdq_prev[m] + amdq[m] + (fr[m] - fl[m])
            for m in range(3):
                apdq_prev[m] = apdq[m]
    return total, smax, -1


if njit is not None:
    _weno = njit(cache=True, inline="always")(_weno)
    _decompose = njit(cache=True)(_decompose)
    _fwaves = njit(cache=True)(_fwaves)
    _sweep = njit(cache=True)(_sweep)


def shallow_fwave_sweep(q, b, g, normal, floor):
    """Array-level wrapper: ``q`` (3, nt, n) in natural component order."""
    perm = [0, normal, 3 - normal]
    qp = np.ascontiguousarray(q[perm])
    total, smax, status = _sweep(qp, np.ascontiguousarray(b), float(g), float(floor))
    out = np.empty_like(total)
    out[perm] = total
    return out, float(smax), int(status)
