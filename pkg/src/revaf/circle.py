"""Brownian motion on the unit circle, recorded on an Euler grid.

This is the continuous sanity lane: the same reversal construction is
applied to a discretized diffusion, where the drift-recovery identity
holds only up to a strong error of order sqrt(h).  Paths record their
Gaussian increments (lifted, not wrapped), so reversal is an exact
array reversal with no re-simulation.
"""

import math

import numpy as np

from .rng import MASK64


class GridPath:
    """Grid record: step h, wrapped positions, raw Gaussian increments."""

    __slots__ = ("h", "positions", "increments")

    def __init__(self, h, positions, increments):
        positions = np.asarray(positions, dtype=np.float64)
        increments = np.asarray(increments, dtype=np.float64)
        if len(positions) != len(increments) + 1:
            raise ValueError("positions must have one more entry than increments")
        if float(h) <= 0.0:
            raise ValueError("step h must be positive")
        self.h = float(h)
        self.positions = positions
        self.increments = increments

    @property
    def steps(self):
        return len(self.increments)

    @property
    def horizon(self):
        return self.h * self.steps

    def lifted(self):
        """Unwrapped trajectory on the real line."""
        out = np.empty(len(self.positions))
        out[0] = self.positions[0]
        np.cumsum(self.increments, out=out[1:])
        out[1:] += self.positions[0]
        return out

    def reverse(self, k=None):
        """Exact reversal of the first k grid cells (all by default)."""
        k = self.steps if k is None else int(k)
        if not 0 <= k <= self.steps:
            raise ValueError("k must lie in [0, steps]")
        return GridPath(
            self.h,
            self.positions[k::-1].copy(),
            -self.increments[:k][::-1].copy(),
        )


def _rng_for(master, index):
    key = ((int(master) & MASK64) << 64) | (int(index) & MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_bm(h, steps, master=0, index=0, x0=None):
    """One grid path; the start is uniform on the circle unless given."""
    rng = _rng_for(master, index)
    start = rng.uniform() if x0 is None else float(x0) % 1.0
    inc = rng.standard_normal(int(steps)) * math.sqrt(float(h))
    positions = np.empty(int(steps) + 1)
    positions[0] = start
    np.cumsum(inc, out=positions[1:])
    positions[1:] += start
    positions %= 1.0
    return GridPath(h, positions, inc)


class CircleFunction:
    """Periodic observable with two derivatives (all numpy-elementwise)."""

    def __init__(self, fn, d1, d2, name=None):
        self.fn = fn
        self.d1 = d1
        self.d2 = d2
        self.name = name
        for g in (fn, d1, d2):
            if abs(float(g(0.0)) - float(g(1.0 - 1e-16))) > 1e-9:
                raise ValueError("circle functions must be 1-periodic")

    def energy_total(self, nodes=1 << 14):
        """Integral of (d1)^2 over the circle (mass of the squared-increment
        measure), by the trapezoid rule on a periodic integrand."""
        xs = np.arange(nodes) / nodes
        return float(np.mean(self.d1(xs) ** 2))


def fukushima_diffusion(u, gp):
    """Grid decomposition of u along the path.

    Returns (M, N, defect) trajectories: the martingale sum of
    u'(X_k) dX_k, the drift sum of u''(X_k) h / 2, and the telescoping
    defect u(X_k) - u(X_0) - M_k - N_k (an O(sqrt h) strong error).
    """
    pos = gp.positions
    du = u.d1(pos[:-1])
    M = np.empty(len(pos))
    M[0] = 0.0
    np.cumsum(du * gp.increments, out=M[1:])
    N = np.empty(len(pos))
    N[0] = 0.0
    np.cumsum(0.5 * u.d2(pos[:-1]) * gp.h, out=N[1:])
    defect = (u.fn(pos) - u.fn(pos[0])) - M - N
    return M, N, defect


def martingale_sum(u, gp):
    """Final value of the grid martingale part."""
    return float(np.dot(u.d1(gp.positions[:-1]), gp.increments))


def lambda_diffusion(u, gp, k=None):
    """Reversal functional on the grid: -(M_k + M_k(reversed path)) / 2."""
    k = gp.steps if k is None else int(k)
    fwd = float(np.dot(u.d1(gp.positions[:k]), gp.increments[:k]))
    rev = gp.reverse(k)
    bwd = float(np.dot(u.d1(rev.positions[:-1]), rev.increments))
    return -0.5 * (fwd + bwd)


def continuous_bracket(u, gp):
    """Grid estimate of the quadratic variation carried by u."""
    vals = u.d1(gp.positions[:-1]) ** 2 * gp.h
    out = np.empty(len(gp.positions))
    out[0] = 0.0
    np.cumsum(vals, out=out[1:])
    return out


def ito_diffusion_residual(phi, dphi, ddphi, u, gp):
    """Change-of-variable defect at the final grid time.

    phi, dphi, ddphi are numpy-elementwise callables; the second-order
    term uses the grid bracket of u.  The residual is an O(sqrt h)
    strong error.
    """
    pos = gp.positions
    y = u.fn(pos)
    yk = y[:-1]
    du = u.d1(pos[:-1])
    lhs = float(phi(y[-1]) - phi(y[0]))
    mart = float(np.dot(dphi(yk) * du, gp.increments))
    drift = float(np.sum(dphi(yk) * 0.5 * u.d2(pos[:-1]) * gp.h))
    second = float(np.sum(0.5 * ddphi(yk) * du ** 2 * gp.h))
    return lhs - (mart + drift + second)


def lambda_defect_rms(u, h, t, n_paths, master=0xC1C1E):
    """RMS over paths of (reversal functional - drift part) at time t."""
    steps = int(round(t / h))
    acc = 0.0
    for i in range(int(n_paths)):
        gp = sample_bm(h, steps, master, i)
        _, N, _ = fukushima_diffusion(u, gp)
        lam = lambda_diffusion(u, gp)
        acc += (lam - N[-1]) ** 2
    return math.sqrt(acc / n_paths)


def ito_residual_rms(phi, dphi, ddphi, u, h, t, n_paths, master=0x17A2):
    steps = int(round(t / h))
    acc = 0.0
    for i in range(int(n_paths)):
        gp = sample_bm(h, steps, master, i)
        acc += ito_diffusion_residual(phi, dphi, ddphi, u, gp) ** 2
    return math.sqrt(acc / n_paths)


def variance_check(h, t, n_paths, master=0x7A7):
    """Lifted displacement variance at t against its exact value t."""
    steps = int(round(t / h))
    disp = np.empty(int(n_paths))
    for i in range(int(n_paths)):
        rng = _rng_for(master, i)
        rng.uniform()  # start draw, discarded
        inc = rng.standard_normal(steps) * math.sqrt(h)
        disp[i] = float(np.sum(inc))
    var = float(np.var(disp, ddof=1))
    se = var * math.sqrt(2.0 / (n_paths - 1))
    z = (var - t) / se
    return {"variance": var, "expected": float(t), "se": se, "z": z, "ok": abs(z) <= 4.0}


def rate_ratios(values):
    """Successive ratios of a decreasing error sequence."""
    return [values[i] / values[i + 1] for i in range(len(values) - 1)]
