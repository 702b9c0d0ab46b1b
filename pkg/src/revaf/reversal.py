"""Time-reversal calculus for jump martingales.

The central object maps a compensated jump martingale M to the continuous
functional

    -(1/2) ( M_t + M_t(reversed path) + phi(X_t, X_{t-}) + K_t ),

where phi is M's jump function and K compensates the symmetrized jumps
-(phi + phi^T) over the living states.  On reversible models this
recovers the drift part of the decomposition without touching the
generator, which is what the agreement checks exercise.
"""

import math

import numpy as np

from . import kernels
from .functionals import (
    KIND_ZERO_ENERGY,
    AdditiveFunctional,
    maf_from_jump,
    require_martingale,
)
from .paths import reverse, reverse_pre_death, state_pair
from .simulate import sample_batch

DELTA_LABEL = "delta"


def jump_function(model, entries):
    """Jump-weight matrix from [x, y, value] rows; 'delta' is the cemetery."""
    n = model.n
    W = np.zeros((n + 1, n + 1))
    for row in entries:
        if len(row) != 3:
            raise ValueError("jump function rows must be [x, y, value]")
        x, y, v = row
        i = n if str(x).lower() == DELTA_LABEL else model.index(x)
        j = n if str(y).lower() == DELTA_LABEL else model.index(y)
        if i == j:
            raise ValueError("jump weights live off the diagonal")
        W[i, j] = float(v)
    return W


def as_jump_matrix(model, phi):
    if isinstance(phi, np.ndarray):
        W = np.ascontiguousarray(phi, dtype=np.float64)
        if W.shape != (model.n + 1, model.n + 1):
            raise ValueError("jump matrix must be (n+1) x (n+1)")
        if np.any(np.diag(W) != 0.0):
            raise ValueError("jump matrix must vanish on the diagonal")
        return W
    return jump_function(model, phi)


def hat_phi(model, phi):
    """Symmetrization phi(x,y) + phi(y,x) over living states only."""
    phi = as_jump_matrix(model, phi)
    n = model.n
    out = np.zeros((n + 1, n + 1))
    ee = phi[:n, :n]
    out[:n, :n] = ee + ee.T
    return out


def lambda_density(model, phi):
    """Closed-form drift density of the reversal functional (metadata).

    Evaluation never uses this; it feeds the independent consistency
    routes (measure pairing, Stieltjes comparison).
    """
    phi = as_jump_matrix(model, phi)
    n = model.n
    ee = phi[:n, :n]
    return 0.5 * np.sum(model.rates * (ee - ee.T), axis=1) + phi[:n, n] * model.kill


def condition_31_check(model, phi):
    """Finiteness of the symmetrized-jump compensation (always holds here).

    Reports the rate-weighted split density (squared below 1, absolute
    above), the square energy of the symmetrized jumps, and the mass of
    their compensator; all are finite sums on a finite model.
    """
    phi = as_jump_matrix(model, phi)
    hat = hat_phi(model, phi)
    n = model.n
    ee = hat[:n, :n]
    split = np.where(np.abs(ee) <= 1.0, ee ** 2, np.abs(ee))
    dens = np.sum(model.rates * split, axis=1)
    sq = 0.5 * float(np.dot(model.m, np.sum(model.rates * ee ** 2, axis=1)))
    mass = float(np.dot(model.m, np.sum(model.rates * np.abs(ee), axis=1)))
    ok = bool(np.all(np.isfinite(dens))) and math.isfinite(sq) and math.isfinite(mass)
    return {
        "density": dens,
        "square_energy": sq,
        "compensator_mass": mass,
        "ok": ok,
    }


def compensated_jump_maf(model, psi):
    """Compensated jump martingale with weights psi (death jump included)."""
    return maf_from_jump(model, as_jump_matrix(model, psi))


class LambdaAF(AdditiveFunctional):
    """Reversal functional of a compensated jump martingale.

    Continuous on [0, zeta), even under reversal, and 0 from the death
    time on; ``eval_held`` gives the left-limit-held extension used by
    integrators.
    """

    kind = KIND_ZERO_ENERGY

    def __init__(self, model, M):
        require_martingale(model, M, "lambda_af")
        self.model = model
        self.M = M
        self.phi = M.W
        self.K = maf_from_jump(model, -hat_phi(model, M.W))
        self.components = (M, self.K)
        self.meta = {"density": lambda_density(model, M.W)}

    def eval(self, path, t):
        t = float(t)
        if math.isnan(t) or t < 0.0 or t > path.horizon:
            raise ValueError("t must lie in [0, horizon], got %r" % (t,))
        if t >= path.zeta:
            return 0.0
        rev = reverse(path, t)
        pre, post = state_pair(path, t)
        m_fwd = self.M.eval(path, t)
        m_rev = self.M.eval(rev, t)
        corr = self.phi[post, pre]
        k_fwd = self.K.eval(path, t)
        return -0.5 * (((m_fwd + m_rev) + corr) + k_fwd)

    def eval_grid(self, path, ts):
        ts = np.ascontiguousarray(ts, dtype=np.float64)
        if len(ts) and (np.nanmin(ts) < 0.0 or np.nanmax(ts) > path.horizon):
            raise ValueError("grid times must lie in [0, horizon]")
        if path.x0 < 0:
            return np.zeros(len(ts))
        return kernels.lambda_grid(
            path.x0,
            path.times,
            path.states,
            path.zeta,
            ts,
            self.M.W,
            self.M.dens,
            self.K.W,
            self.K.dens,
        )

    def eval_grid_held(self, path, ts):
        """Grid evaluation under the left-limit-held extension."""
        ts = np.ascontiguousarray(ts, dtype=np.float64)
        out = self.eval_grid(path, ts)
        dead = ts >= path.zeta
        if np.any(dead):
            out[dead] = self.eval_held(path, float(path.zeta))
        return out

    def eval_held(self, path, t):
        """Value under the left-limit-held extension at the death time."""
        t = float(t)
        if math.isnan(t) or t < 0.0 or t > path.horizon:
            raise ValueError("t must lie in [0, horizon], got %r" % (t,))
        if t < path.zeta:
            return self.eval(path, t)
        if path.x0 < 0:
            return 0.0
        rev = reverse_pre_death(path)
        m_fwd = self.M.eval_left(path, path.zeta)
        m_rev = self.M.eval(rev, path.zeta)
        k_fwd = self.K.eval_left(path, path.zeta)
        return -0.5 * ((m_fwd + m_rev) + k_fwd)

    def eval_left(self, path, t):
        t = float(t)
        if t > path.zeta:
            return 0.0
        if t == path.zeta and math.isfinite(t):
            return self.eval_held(path, t)
        return self.eval(path, t)


def lambda_af(model, M):
    return LambdaAF(model, M)


class DualAF(AdditiveFunctional):
    """A evaluated on the reversed path, plus the boundary jump term."""

    def __init__(self, A, phi=None, model=None):
        self.A = A
        self.model = model if model is not None else A.model
        if phi is None:
            phi = getattr(A, "W", None)
        self.phi = None if phi is None else as_jump_matrix(self.model, phi)

    def eval(self, path, t):
        t = float(t)
        if math.isnan(t) or t < 0.0 or t > path.horizon:
            raise ValueError("t must lie in [0, horizon], got %r" % (t,))
        if t >= path.zeta:
            return 0.0
        val = self.A.eval(reverse(path, t), t)
        if self.phi is not None:
            pre, post = state_pair(path, t)
            val += self.phi[post, pre]
        return val


def dual_af(A, phi=None, model=None):
    return DualAF(A, phi, model)


class WindowReversal(AdditiveFunctional):
    """Increments of Z read backwards from T: Z_{T-} - Z_{(T-t)-}."""

    def __init__(self, Z, T):
        self.Z = Z
        self.T = float(T)
        if self.T < 0.0:
            raise ValueError("window end must be nonnegative")

    def eval(self, path, t):
        t = float(t)
        if math.isnan(t) or t < 0.0 or t > self.T:
            raise ValueError("t must lie in [0, T]")
        end = self.Z.eval_left(path, self.T)
        start = self.Z.eval_left(path, self.T - t)
        return end - start


def reverse_window(Z, T):
    return WindowReversal(Z, T)


def parity_check(model, Z, t, n_paths, phi=None, master=0xD0A1, horizon=None):
    """Classify Z as even or odd under reversal on sampled paths.

    Compares the dual of Z against +Z and -Z at time t over stationary
    paths still alive at t, and reports both residuals with a verdict.
    """
    dual = DualAF(Z, phi, model)
    if horizon is None:
        horizon = float(t)
    paths = sample_batch(model, n_paths, horizon, master)
    even = 0.0
    odd = 0.0
    used = 0
    for p in paths:
        if t >= p.zeta:
            continue
        z = Z.eval(p, t)
        zh = dual.eval(p, t)
        even = max(even, abs(zh - z))
        odd = max(odd, abs(zh + z))
        used += 1
    verdict = "even" if even <= odd else "odd"
    return {
        "even_residual": even,
        "odd_residual": odd,
        "verdict": verdict,
        "paths_used": used,
        "t": float(t),
    }
