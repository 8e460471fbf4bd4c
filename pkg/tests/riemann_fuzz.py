"""Random-state checks of the wave-sum and fluctuation identities."""
import numpy as np

from wavekit.riemann import Acoustics, ElasticityFWave, ShallowFWave, ShallowRoe


def _rel(lhs, rhs, *parts):
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    for p in parts:
        scale = np.maximum(scale, np.abs(p))
    return float(np.max(np.abs(lhs - rhs) / np.maximum(scale, 1e-300)))


def acoustics(n, rng, m=2, normal=1):
    ql, qr = rng.normal(size=(2, m, n))
    auxl, auxr = rng.uniform(0.25, 4.0, size=(2, 2, n))
    d = Acoustics().solve(ql, qr, auxl, auxr, normal)
    sw = d.speeds[:, None] * d.waves
    return max(_rel(d.waves.sum(0), qr - ql, *d.waves),
               _rel(d.amdq + d.apdq, sw.sum(0), *sw))


def _shallow_states(n, rng, m):
    h = rng.uniform(0.1, 3.0, size=(2, n))
    vel = rng.uniform(-2.0, 2.0, size=(2, m - 1, n))
    ql = np.vstack([h[0][None], h[0] * vel[0]])
    qr = np.vstack([h[1][None], h[1] * vel[1]])
    return ql, qr


def shallow_roe(n, rng, m=2, normal=1, g=9.81):
    ql, qr = _shallow_states(n, rng, m)
    solver = ShallowRoe(g)
    d = solver.solve(ql, qr, None, None, normal)
    df = solver.flux(qr, None, normal) - solver.flux(ql, None, normal)
    sw = d.speeds[:, None] * d.waves
    return max(_rel(d.waves.sum(0), qr - ql, *d.waves),
               _rel(sw.sum(0), df, *sw),
               _rel(d.amdq + d.apdq, df, d.amdq, d.apdq))


def shallow_fwave(n, rng, m=2, normal=1, g=9.81):
    ql, qr = _shallow_states(n, rng, m)
    bl, br = rng.uniform(0.0, 0.5, size=(2, 1, n))
    solver = ShallowFWave(g)
    d = solver.solve(ql, qr, bl, br, normal)
    target = solver.flux(qr, None, normal) - solver.flux(ql, None, normal)
    target[normal] += 0.5 * g * (ql[0] + qr[0]) * (br[0] - bl[0])
    return max(_rel(d.waves.sum(0), target, *d.waves),
               _rel(d.amdq + d.apdq, d.waves.sum(0), d.amdq, d.apdq))


def elasticity(n, rng, stress="exponential"):
    eps = rng.uniform(-0.2, 0.4, size=(2, n))
    mom = rng.normal(size=(2, n))
    ql = np.vstack([eps[0], mom[0]])
    qr = np.vstack([eps[1], mom[1]])
    auxl, auxr = rng.uniform(1.0, 4.0, size=(2, 2, n))
    solver = ElasticityFWave(stress)
    d = solver.solve(ql, qr, auxl, auxr)
    target = solver.flux(qr, auxr) - solver.flux(ql, auxl)
    return max(_rel(d.waves.sum(0), target, *d.waves),
               _rel(d.amdq + d.apdq, d.waves.sum(0), d.amdq, d.apdq))


CASES = {
    "acoustics_1d": lambda n, rng: acoustics(n, rng),
    "acoustics_2d_x": lambda n, rng: acoustics(n, rng, 3, 1),
    "acoustics_2d_y": lambda n, rng: acoustics(n, rng, 3, 2),
    "shallow_roe_1d": lambda n, rng: shallow_roe(n, rng),
    "shallow_roe_2d_y": lambda n, rng: shallow_roe(n, rng, 3, 2),
    "shallow_fwave_1d": lambda n, rng: shallow_fwave(n, rng),
    "shallow_fwave_2d_x": lambda n, rng: shallow_fwave(n, rng, 3, 1),
    "elasticity_exp": lambda n, rng: elasticity(n, rng),
    "elasticity_linear": lambda n, rng: elasticity(n, rng, "linear"),
}
