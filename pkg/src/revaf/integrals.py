"""Integration against the reversal functional, and the change-of-variable
formula assembled from it.

The integral of f against the reversal functional of M is constructed as
the reversal functional of the scaled martingale f * M plus an explicit
drift correction; Riemann sums along dyadic partitions converge to the
same object, which is what the approximation checks verify.
"""

import math

import numpy as np

from .functionals import (
    KIND_CAF,
    AdditiveFunctional,
    MarkovAF,
    caf_from_density,
    dyadic_times,
    fukushima,
    martingale_integral,
    require_martingale,
    stieltjes_integral,
)
from .paths import evaluate
from .reversal import LambdaAF, lambda_density


class StochasticIntegral(AdditiveFunctional):
    """Integral of f(X_{s-}) against the reversal functional of M.

    Built as Lambda(f * M) plus the drift correction with density
    (1/2) sum_y (f(y) - f(x)) phi(y, x) q(x, y).  Continuous on
    [0, zeta) and held at its left limit from the death time on, so the
    change-of-variable formula extends to killed paths.
    """

    kind = "composite"

    def __init__(self, model, f, M):
        require_martingale(model, M, "integral_dlambda")
        self.model = model
        f = model.function(f)
        self.f = f
        self.M = M
        inner = martingale_integral(model, f, M)
        self.lam = LambdaAF(model, inner)
        n = model.n
        phi = M.W
        df = f[None, :] - f[:, None]
        half = 0.5 * np.sum(model.rates * df * phi[:n, :n].T, axis=1)
        self.half = MarkovAF(model, KIND_CAF, dens=half)
        self.components = (self.lam, self.half)
        self.meta = {"density": f * lambda_density(model, phi)}

    def eval(self, path, t):
        return self.lam.eval_held(path, t) + self.half.eval(path, t)

    def eval_left(self, path, t):
        # continuous in t (the held extension removes the only jump)
        return self.eval(path, t)


def integral_dlambda(model, f, M):
    return StochasticIntegral(model, f, M)


RIEMANN_VARIANTS = ("forward", "backward", "stratonovich")


def riemann_sum(model, f, M, path, t, n, variant="forward"):
    """Partition sum against the reversal functional on [0, t].

    forward uses the integrand at the left endpoint of each cell,
    backward at the right endpoint, stratonovich their average; dead
    states contribute 0.
    """
    if variant not in RIEMANN_VARIANTS:
        raise ValueError("variant must be one of %r" % (RIEMANN_VARIANTS,))
    if n < 1:
        raise ValueError("partition size must be >= 1")
    f = model.function(f)
    L = LambdaAF(model, M)
    grid = np.linspace(0.0, float(t), int(n) + 1)
    lvals = L.eval_grid_held(path, grid)
    fvals = np.empty(len(grid))
    for i, s in enumerate(grid):
        x = evaluate(path, s)
        fvals[i] = f[x] if x >= 0 else 0.0
    dl = np.diff(lvals)
    if variant == "forward":
        weights = fvals[:-1]
    elif variant == "backward":
        weights = fvals[1:]
    else:
        weights = 0.5 * (fvals[:-1] + fvals[1:])
    return float(np.dot(weights, dl))


def lambda_trajectory(model, M, path, t, n):
    """Values of the reversal functional of M on the n-cell grid of [0, t],
    held at the left limit from the death time on."""
    L = LambdaAF(model, M)
    grid = np.linspace(0.0, float(t), int(n) + 1)
    return L.eval_grid_held(path, grid)


def riemann_deviation_profile(model, f, M, path, t, n_grid):
    """Deviation of each partition-sum variant from the integral, per n.

    Shares one functional and one grid evaluation across the three
    variants, so sweeping a ladder of partition sizes stays cheap.
    """
    f = model.function(f)
    L = LambdaAF(model, M)
    target = StochasticIntegral(model, f, M).eval(path, t)
    out = {v: [] for v in RIEMANN_VARIANTS}
    for n in n_grid:
        grid = np.linspace(0.0, float(t), int(n) + 1)
        lvals = L.eval_grid_held(path, grid)
        fvals = np.empty(len(grid))
        for i, s in enumerate(grid):
            x = evaluate(path, s)
            fvals[i] = f[x] if x >= 0 else 0.0
        dl = np.diff(lvals)
        out["forward"].append(abs(float(np.dot(fvals[:-1], dl)) - target))
        out["backward"].append(abs(float(np.dot(fvals[1:], dl)) - target))
        out["stratonovich"].append(
            abs(float(np.dot(0.5 * (fvals[:-1] + fvals[1:]), dl)) - target)
        )
    return out


def quad_variation(trajectory):
    """Sum of squared increments along a recorded grid trajectory."""
    trajectory = np.asarray(trajectory, dtype=np.float64)
    return float(np.sum(np.diff(trajectory) ** 2))


def associativity_check(model, f, g, M, paths, k=16):
    """g d(f dLambda) vs (g f) dLambda, both built through the construction.

    The inner integral is the reversal part of f*M plus a drift
    correction, so integrating g against it needs both the outer
    construction and a Stieltjes term against that correction.
    """
    f = model.function(f)
    g = model.function(g)
    inner = StochasticIntegral(model, f, M)
    outer = StochasticIntegral(model, g, martingale_integral(model, f, M))
    carried = stieltjes_integral(model, g, inner.half)
    rhs = StochasticIntegral(model, g * f, M)
    worst = 0.0
    total = 0.0
    count = 0
    for p in paths:
        for t in dyadic_times(p.horizon, k):
            r = abs(outer.eval(p, t) + carried.eval(p, t) - rhs.eval(p, t))
            worst = max(worst, r)
            total += r
            count += 1
    return {
        "max_residual": worst,
        "mean_residual": total / count if count else 0.0,
        "points": count,
        "paths": len(paths),
    }


def stieltjes_consistency(model, f, M, paths, k=16):
    """The construction vs a plain Stieltjes integral against the
    closed-form drift density of the reversal functional."""
    si = StochasticIntegral(model, f, M)
    A = caf_from_density(model, lambda_density(model, M.W))
    st = stieltjes_integral(model, f, A)
    worst = 0.0
    total = 0.0
    count = 0
    for p in paths:
        for t in dyadic_times(p.horizon, k):
            r = abs(si.eval(p, t) - st.eval(p, t))
            worst = max(worst, r)
            total += r
            count += 1
    return {
        "max_residual": worst,
        "mean_residual": total / count if count else 0.0,
        "points": count,
        "paths": len(paths),
    }


class SmoothMap:
    """Scalar map on R^d with analytic gradient and Hessian."""

    def __init__(self, fn, grad, hess, dim, name=None):
        self.fn = fn
        self.grad = grad
        self.hess = hess
        self.dim = int(dim)
        self.name = name
        self._validated = False

    def __call__(self, x):
        return float(self.fn(np.asarray(x, dtype=np.float64)))

    def validate(self, seed=0, points=10, h=1e-5, tol=1e-6):
        """Cross-check the analytic partials with central differences."""
        if self._validated:
            return
        rng = np.random.default_rng(seed)
        for _ in range(points):
            x = rng.standard_normal(self.dim)
            g = np.asarray(self.grad(x), dtype=np.float64)
            H = np.asarray(self.hess(x), dtype=np.float64)
            for k in range(self.dim):
                e = np.zeros(self.dim)
                e[k] = h
                fd = (self(x + e) - self(x - e)) / (2.0 * h)
                if abs(fd - g[k]) > tol * max(1.0, abs(fd)):
                    raise ValueError(
                        "gradient of %s disagrees with finite differences"
                        % (self.name or "map",)
                    )
                gp = np.asarray(self.grad(x + e), dtype=np.float64)
                gm = np.asarray(self.grad(x - e), dtype=np.float64)
                fdh = (gp - gm) / (2.0 * h)
                if np.max(np.abs(fdh - H[:, k])) > tol * max(
                    1.0, float(np.max(np.abs(fdh)))
                ):
                    raise ValueError(
                        "hessian of %s disagrees with finite differences"
                        % (self.name or "map",)
                    )
        self._validated = True


def _phi_tables(model, Phi, us):
    """Tabulate Phi, its gradient, and the pure-jump correction weights."""
    n = model.n
    d = Phi.dim
    if len(us) != d:
        raise ValueError("need exactly one component function per argument")
    u_pad = np.zeros((n + 1, d))
    for k, u in enumerate(us):
        u_pad[:n, k] = model.function(u)
    values = np.array([Phi(u_pad[x]) for x in range(n + 1)])
    grads = np.array([Phi.grad(u_pad[x]) for x in range(n + 1)], dtype=np.float64)
    Wcorr = np.zeros((n + 1, n + 1))
    for x in range(n):
        for y in range(n + 1):
            if y == x:
                continue
            du = u_pad[y] - u_pad[x]
            Wcorr[x, y] = values[y] - values[x] - float(np.dot(grads[x], du))
    return u_pad, values, grads, Wcorr


def ito_residual(model, Phi, us, path, t):
    """Change-of-variable defect at time t (0 up to rounding).

    Compares Phi(u(X_t)) - Phi(u(X_0)) with the sum of the martingale
    integrals, the integrals against the reversal functionals, and the
    pure-jump second-order correction.  The cemetery evaluates u to 0.
    """
    Phi.validate()
    u_pad, values, grads, Wcorr = _phi_tables(model, Phi, us)
    d = Phi.dim
    mart = 0.0
    drift = 0.0
    for k in range(d):
        M, _ = fukushima(model, u_pad[: model.n, k])
        fk = grads[: model.n, k]
        mart += martingale_integral(model, fk, M).eval(path, t)
        drift += StochasticIntegral(model, fk, M).eval(path, t)
    corr = MarkovAF(model, "composite", W=Wcorr).eval(path, t)
    x_t = evaluate(path, t)
    x_0 = path.x0
    lhs = values[x_t if x_t >= 0 else model.n] - values[
        x_0 if x_0 >= 0 else model.n
    ]
    rhs = (mart + drift) + corr
    return {
        "lhs": float(lhs),
        "rhs": float(rhs),
        "martingale": mart,
        "drift": drift,
        "jump_correction": corr,
        "residual": abs(float(lhs) - rhs),
    }
