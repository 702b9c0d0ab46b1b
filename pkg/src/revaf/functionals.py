"""Additive functionals of a jump path.

Every functional of a finite-state jump path that this package needs can
be written as

    A_t = sum over jumps s <= t of W[pre, post]
        + W[last state, cemetery] once the path has died
        + integral over [0, t ^ zeta] of dens(X_s) ds

for a jump-weight matrix W over E + cemetery and a drift density dens.
``MarkovAF`` holds that pair and is closed under addition, which keeps
occupation functionals, decomposition martingales, their zero-energy
parts, compensated jump martingales, integrands against martingales and
square brackets all in one representation.
"""

import math

import numpy as np

from . import kernels
from .chain import time_average
from .simulate import sample_batch

KIND_CAF = "caf-integral"
KIND_FUKUSHIMA = "fukushima-martingale"
KIND_ZERO_ENERGY = "zero-energy"
KIND_COMPENSATED = "compensated-jump"
KIND_COMPOSITE = "composite"

KINDS = (KIND_CAF, KIND_FUKUSHIMA, KIND_ZERO_ENERGY, KIND_COMPENSATED, KIND_COMPOSITE)


def _check_time(path, t):
    t = float(t)
    if math.isnan(t) or t < 0.0 or t > path.horizon:
        raise ValueError("t must lie in [0, horizon], got %r" % (t,))
    return t


class AdditiveFunctional:
    """Interface: eval / eval_grid / eval_left on a path."""

    kind = KIND_COMPOSITE
    components = ()

    def eval(self, path, t):
        raise NotImplementedError

    def eval_grid(self, path, ts):
        return np.array([self.eval(path, t) for t in ts], dtype=np.float64)

    def eval_left(self, path, t):
        return af_eval_left(self, path, t)


def af_eval_left(af, path, t):
    """Left limit at t via two-point extrapolation.

    Between consecutive event/death times every functional here is affine
    in t, so evaluating at two interior points recovers the limit exactly
    (up to rounding).
    """
    t = _check_time(path, t)
    if t == 0.0:
        return 0.0
    anchor = 0.0
    k = int(np.searchsorted(path.times, t, side="left"))
    if k:
        anchor = float(path.times[k - 1])
    if path.zeta < t:
        anchor = max(anchor, path.zeta)
    gap = t - anchor
    eps = gap / 3.0
    if eps == 0.0:
        return af.eval(path, t)
    f1 = af.eval(path, t - eps)
    f2 = af.eval(path, t - 2.0 * eps)
    return 2.0 * f1 - f2


class MarkovAF(AdditiveFunctional):
    """Jump-weight plus drift-density functional (see module docstring)."""

    def __init__(self, model, kind, W=None, dens=None, components=(), meta=None):
        if kind not in KINDS:
            raise ValueError("unknown kind %r" % (kind,))
        self.model = model
        self.kind = kind
        if W is not None:
            W = np.ascontiguousarray(W, dtype=np.float64)
            if W.shape != (model.n + 1, model.n + 1):
                raise ValueError("jump weights must be (n+1) x (n+1)")
        if dens is not None:
            dens = np.ascontiguousarray(dens, dtype=np.float64)
            if dens.shape != (model.n,):
                raise ValueError("density must have one value per state")
        self.W = W
        self.dens = dens
        self.components = tuple(components)
        self.meta = dict(meta or {})

    def eval(self, path, t):
        t = _check_time(path, t)
        if path.x0 < 0:
            return 0.0
        val = 0.0
        if self.W is not None:
            val += kernels.jumpsum(
                path.x0, path.times, path.states, path.zeta, t, self.W
            )
        if self.dens is not None:
            val += kernels.occ(
                path.x0, path.times, path.states, path.zeta, t, self.dens
            )
        return val

    def eval_grid(self, path, ts):
        ts = np.ascontiguousarray(ts, dtype=np.float64)
        if len(ts) and (np.nanmin(ts) < 0.0 or np.nanmax(ts) > path.horizon):
            raise ValueError("grid times must lie in [0, horizon]")
        out = np.zeros(len(ts))
        if path.x0 < 0:
            return out
        if self.W is not None:
            out += kernels.jump_grid(
                path.x0, path.times, path.states, path.zeta, ts, self.W
            )
        if self.dens is not None:
            out += kernels.occ_grid(
                path.x0, path.times, path.states, path.zeta, ts, self.dens
            )
        return out

    def eval_left(self, path, t):
        t = _check_time(path, t)
        val = self.eval(path, t)
        if self.W is None or t == 0.0 or path.x0 < 0:
            return val
        if t == path.zeta:
            return val - self.W[path.last_alive_state(), self.model.n]
        k = int(np.searchsorted(path.times, t, side="left"))
        if k < len(path.times) and path.times[k] == t:
            pre = int(path.states[k - 1]) if k else path.x0
            val -= self.W[pre, int(path.states[k])]
        return val

    def _merge(self, other, sign):
        if not isinstance(other, MarkovAF):
            return NotImplemented
        if other.model is not self.model:
            raise ValueError("cannot combine functionals from different models")
        W = None
        if self.W is not None or other.W is not None:
            W = np.zeros((self.model.n + 1, self.model.n + 1))
            if self.W is not None:
                W += self.W
            if other.W is not None:
                W = W + sign * other.W
        dens = None
        if self.dens is not None or other.dens is not None:
            dens = np.zeros(self.model.n)
            if self.dens is not None:
                dens += self.dens
            if other.dens is not None:
                dens = dens + sign * other.dens
        kind = self.kind if self.kind == other.kind else KIND_COMPOSITE
        return MarkovAF(self.model, kind, W, dens, components=(self, other))

    def __add__(self, other):
        return self._merge(other, 1.0)

    def __sub__(self, other):
        return self._merge(other, -1.0)

    def __neg__(self):
        return MarkovAF(
            self.model,
            self.kind,
            None if self.W is None else -self.W,
            None if self.dens is None else -self.dens,
            components=(self,),
        )

    def jump_matrix(self):
        if self.W is not None:
            return self.W.copy()
        return np.zeros((self.model.n + 1, self.model.n + 1))


def dyadic_times(T, k=64):
    """The k dyadic sample times ell * T / k, ell = 1..k."""
    return np.arange(1, k + 1, dtype=np.float64) * (float(T) / k)


def caf_from_density(model, a):
    """Occupation functional with density a: integral of a(X_s) ds up to t ^ zeta."""
    a = model.function(a)
    return MarkovAF(
        model, KIND_CAF, dens=a, meta={"density": a, "measure": a * model.m}
    )


def fukushima(model, u):
    """Decomposition of u(X_t)1(t < zeta) - u(X_0) into martingale + drift.

    Returns (M, N): M carries the jumps of u (with weight -u(x) on the
    killing jump) compensated by the generator drift, and N integrates
    the generator along the path.  M + N telescopes the decomposition
    exactly on every event list.
    """
    u = model.function(u)
    qu = model.Q @ u
    n = model.n
    W = np.zeros((n + 1, n + 1))
    W[:n, :n] = u[None, :] - u[:, None]
    W[:n, n] = -u
    M = MarkovAF(
        model, KIND_FUKUSHIMA, W=W, dens=-qu, meta={"u": u, "generator_u": qu}
    )
    N = MarkovAF(model, KIND_ZERO_ENERGY, dens=qu, meta={"u": u})
    return M, N


def jump_killing_parts(model, u):
    """Split the decomposition martingale of u into jump and killing parts."""
    u = model.function(u)
    n = model.n
    flow = np.sum(model.rates * (u[None, :] - u[:, None]), axis=1)
    Wj = np.zeros((n + 1, n + 1))
    Wj[:n, :n] = u[None, :] - u[:, None]
    Mj = MarkovAF(
        model, KIND_COMPENSATED, W=Wj, dens=-flow, meta={"u": u, "part": "jump"}
    )
    Wk = np.zeros((n + 1, n + 1))
    Wk[:n, n] = -u
    Mk = MarkovAF(
        model,
        KIND_COMPENSATED,
        W=Wk,
        dens=model.kill * u,
        meta={"u": u, "part": "killing"},
    )
    return Mj, Mk


def maf_from_jump(model, W):
    """Compensated martingale with the given jump weights.

    The compensator integrates sum_y W[x, y] q(x, y) + W[x, cemetery] kill(x);
    the death-time jump itself is part of the functional.
    """
    W = np.ascontiguousarray(W, dtype=np.float64)
    n = model.n
    if W.shape != (n + 1, n + 1):
        raise ValueError("jump weights must be (n+1) x (n+1)")
    if np.any(np.diag(W) != 0.0):
        raise ValueError("jump weights must vanish on the diagonal")
    nw = np.sum(model.rates * W[:n, :n], axis=1) + W[:n, n] * model.kill
    return MarkovAF(model, KIND_COMPENSATED, W=W, dens=-nw)


def compensator_defect(model, M):
    """How far M's drift is from compensating its jumps (0 for martingales)."""
    if M.W is None:
        return math.inf
    n = model.n
    nw = np.sum(model.rates * M.W[:n, :n], axis=1) + M.W[:n, n] * model.kill
    dens = np.zeros(n) if M.dens is None else M.dens
    scale = max(1.0, float(np.max(np.abs(nw))))
    return float(np.max(np.abs(dens + nw))) / scale


def require_martingale(model, M, what, tol=1e-9):
    if M.W is None:
        raise ValueError("%s needs a functional with jump weights" % what)
    if compensator_defect(model, M) > tol:
        raise ValueError(
            "%s needs a compensated jump martingale (drift does not match jumps)"
            % what
        )


def stieltjes_integral(model, f, A):
    """Pathwise integral of f(X_s) against a finite-variation continuous A."""
    if A.W is not None and np.any(A.W != 0.0):
        raise ValueError("stieltjes_integral needs a continuous functional")
    if A.dens is None:
        return MarkovAF(model, KIND_CAF, dens=np.zeros(model.n))
    f = model.function(f)
    return MarkovAF(model, KIND_CAF, dens=f * A.dens, meta={"integrand": f})


def martingale_integral(model, f, M):
    """The martingale f * M: each jump of M is scaled by f at the pre-state."""
    require_martingale(model, M, "martingale_integral")
    f = model.function(f)
    fpad = np.append(f, 0.0)
    W = M.W * fpad[:, None]
    dens = None if M.dens is None else f * M.dens
    return MarkovAF(model, M.kind, W=W, dens=dens, meta={"integrand": f})


def square_bracket(M, N):
    """[M, N]_t: sum of products of simultaneous jumps, death included."""
    model = M.model
    if M.W is None or N.W is None:
        return MarkovAF(model, KIND_COMPOSITE, components=(M, N))
    return MarkovAF(
        model, KIND_COMPOSITE, W=M.W * N.W, components=(M, N), meta={"bracket": True}
    )


def angle_bracket_density(model, phi_m, phi_n):
    """Density of <M, N>: rate-weighted product of jump functions."""
    phi_m = np.asarray(phi_m, dtype=np.float64)
    phi_n = np.asarray(phi_n, dtype=np.float64)
    n = model.n
    c = np.sum(model.rates * phi_m[:n, :n] * phi_n[:n, :n], axis=1)
    c = c + phi_m[:n, n] * phi_n[:n, n] * model.kill
    return c


def energy(model, M):
    """e(M) = half the m-mass of the bracket density of M."""
    require_martingale(model, M, "energy")
    c = angle_bracket_density(model, M.W, M.W)
    return 0.5 * float(np.dot(model.m, c))


def levy_system_check(model, phi, x0, t, n_paths, master=0x5EED, horizon=None):
    """Paired jump-sum vs compensator comparison on common paths.

    Samples n_paths paths started at x0 (stationary when x0 is None) and
    z-scores the mean of  sum phi(X_{s-}, X_s) - integral N phi(X_s) ds,
    which is a mean-zero martingale evaluated at t.
    """
    K = maf_from_jump(model, phi)
    if horizon is None:
        horizon = float(t)
    paths = sample_batch(model, n_paths, horizon, master, x0=x0)
    vals = np.array([K.eval(p, t) for p in paths])
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
    z = 0.0 if mean == 0.0 else (math.inf if se == 0.0 else mean / se)
    return {
        "mean": mean,
        "se": se,
        "z": z,
        "n_paths": n_paths,
        "t": float(t),
        "ok": abs(z) <= 4.0,
    }


def revuz_mc_check(model, a, f, t, n_paths, master=0xACE5, nodes=65):
    """Monte Carlo counterpart of the occupation-measure identification.

    Compares the sampled mean of (1/t) integral f a (X_s) ds under the
    stationary start against the deterministic semigroup average at the
    same t, so the finite-t bias cancels and the z-score is clean.
    """
    a = model.function(a)
    f = model.function(f)
    A = MarkovAF(model, KIND_CAF, dens=f * a)
    paths = sample_batch(model, n_paths, float(t), master)
    msum = float(np.sum(model.m))
    vals = np.array([A.eval(p, t) for p in paths]) * (msum / float(t))
    det = time_average(model, model.m, f * a, float(t), nodes)
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
    z = 0.0 if mean == det else (math.inf if se == 0.0 else (mean - det) / se)
    return {
        "mean": mean,
        "deterministic": det,
        "se": se,
        "z": z,
        "n_paths": n_paths,
        "t": float(t),
        "ok": abs(z) <= 4.0,
    }
