"""Finite reversible jump models.

A model is a finite state list with positive weights m, nonnegative jump
rates q(x, y) satisfying detailed balance m(x)q(x, y) = m(y)q(y, x), and
an optional killing rate per state.  This module owns the generator, the
quadratic forms, the transition semigroup, and the small-time averaging
used by the measure-identification checks.
"""

import math
from dataclasses import dataclass

import numpy as np
import yaml

BALANCE_RTOL = 1e-12


class ModelError(ValueError):
    """Numerically invalid model (balance, signs, masses)."""


class ParseError(ValueError):
    """Structurally malformed model/scenario data."""


def _model_problems(m, rates, kill):
    problems = []
    n = len(m)
    if np.any(~np.isfinite(m)) or np.any(m <= 0.0):
        problems.append("state weights m must be finite and positive")
    if np.any(~np.isfinite(rates)) or np.any(rates < 0.0):
        problems.append("rates must be finite and nonnegative")
    if np.any(np.diag(rates) != 0.0):
        problems.append("diagonal rate entries must be zero")
    if np.any(~np.isfinite(kill)) or np.any(kill < 0.0):
        problems.append("killing rates must be finite and nonnegative")
    if problems:
        return problems
    for x in range(n):
        for y in range(x + 1, n):
            a = m[x] * rates[x, y]
            b = m[y] * rates[y, x]
            if abs(a - b) > BALANCE_RTOL * max(a, b):
                problems.append(
                    "detailed balance violated at (%d, %d): "
                    "m(x)q(x,y)=%g vs m(y)q(y,x)=%g, residual %g"
                    % (x, y, a, b, abs(a - b))
                )
    return problems


class ChainModel:
    """Validated reversible jump model on a finite state list."""

    def __init__(self, states, m, rates, kill=None, name=None):
        states = [str(s) for s in states]
        if len(set(states)) != len(states):
            raise ParseError("duplicate state labels")
        n = len(states)
        m = np.asarray(m, dtype=np.float64)
        rates = np.asarray(rates, dtype=np.float64)
        kill = (
            np.zeros(n) if kill is None else np.asarray(kill, dtype=np.float64)
        )
        if m.shape != (n,) or rates.shape != (n, n) or kill.shape != (n,):
            raise ParseError("m, rates, kill have inconsistent shapes")
        problems = _model_problems(m, rates, kill)
        if problems:
            raise ModelError("; ".join(problems))
        self.name = name
        self.states = tuple(states)
        self.n = n
        self.m = m
        self.rates = rates
        self.kill = kill
        self._index = {s: i for i, s in enumerate(states)}
        # accumulate row sums with a plain loop so both kernel lanes see
        # the exact same floats as the destination-selection walk
        total = np.zeros(n)
        for x in range(n):
            s = 0.0
            for y in range(n):
                s += rates[x, y]
            s += kill[x]
            total[x] = s
        self.total_rate = total
        Q = rates.copy()
        for x in range(n):
            Q[x, x] = -total[x]
        self.Q = Q
        for a in (self.m, self.rates, self.kill, self.total_rate, self.Q):
            a.flags.writeable = False
        self._eig = None
        self._caches = {}

    def index(self, label):
        try:
            return self._index[str(label)]
        except KeyError:
            raise ParseError("unknown state label %r" % (label,)) from None

    def function(self, values):
        """Coerce a vector over the state list to a float array.

        Accepts a sequence aligned with the state order, a mapping from
        labels (missing labels get 0.0), or a scalar for constants.
        """
        if isinstance(values, dict):
            out = np.zeros(self.n)
            for k, v in values.items():
                out[self.index(k)] = float(v)
            return out
        if np.isscalar(values):
            return np.full(self.n, float(values))
        out = np.asarray(values, dtype=np.float64)
        if out.shape != (self.n,):
            raise ParseError("function must have one value per state")
        return out.copy()

    def to_dict(self):
        d = {
            "states": list(self.states),
            "m": [float(v) for v in self.m],
            "rates": [
                [self.states[x], self.states[y], float(self.rates[x, y])]
                for x in range(self.n)
                for y in range(self.n)
                if self.rates[x, y] != 0.0
            ],
        }
        if np.any(self.kill):
            d["kill"] = [
                [self.states[x], float(self.kill[x])]
                for x in range(self.n)
                if self.kill[x] != 0.0
            ]
        return d

    @classmethod
    def from_dict(cls, d, name=None):
        if not isinstance(d, dict):
            raise ParseError("model must be a mapping")
        for key in ("states", "m", "rates"):
            if key not in d:
                raise ParseError("model is missing the %r key" % key)
        states = [str(s) for s in d["states"]]
        if len(set(states)) != len(states):
            raise ParseError("duplicate state labels")
        index = {s: i for i, s in enumerate(states)}
        n = len(states)
        m = d["m"]
        if not isinstance(m, (list, tuple)) or len(m) != n:
            raise ParseError("m must list one weight per state")
        rates = np.zeros((n, n))
        seen = set()
        for row in d["rates"]:
            if not isinstance(row, (list, tuple)) or len(row) != 3:
                raise ParseError("rate rows must be [x, y, q]")
            x, y, q = str(row[0]), str(row[1]), float(row[2])
            if x not in index or y not in index:
                raise ParseError("rate row refers to unknown state %r" % ([row[0], row[1]],))
            if x == y:
                raise ParseError("rate rows must connect distinct states")
            if (x, y) in seen:
                raise ParseError("duplicate rate row for (%s, %s)" % (x, y))
            seen.add((x, y))
            rates[index[x], index[y]] = q
        kill = np.zeros(n)
        kseen = set()
        for row in d.get("kill", []) or []:
            if not isinstance(row, (list, tuple)) or len(row) != 2:
                raise ParseError("kill rows must be [x, rate]")
            x = str(row[0])
            if x not in index:
                raise ParseError("kill row refers to unknown state %r" % (row[0],))
            if x in kseen:
                raise ParseError("duplicate kill row for %s" % x)
            kseen.add(x)
            kill[index[x]] = float(row[1])
        return cls(states, m, rates, kill, name=name)

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, "r") as fh:
                try:
                    data = yaml.safe_load(fh)
                except yaml.YAMLError as exc:
                    raise ParseError("could not parse %s: %s" % (path, exc)) from None
        except OSError as exc:
            raise ParseError("cannot read model: %s" % (exc,)) from None
        return cls.from_dict(data, name=str(path))


def validate_model(obj):
    """Return a list of problems (empty when the model is valid).

    Accepts a built ChainModel or a raw mapping in the file schema.
    """
    if isinstance(obj, ChainModel):
        return _model_problems(obj.m, obj.rates, obj.kill)
    try:
        ChainModel.from_dict(obj)
    except (ModelError, ParseError) as exc:
        return [str(exc)]
    return []


def generator_apply(model, u):
    """Apply the generator: sum_y q(x,y)(u(y) - u(x)) - kill(x) u(x)."""
    u = model.function(u)
    return model.Q @ u


def dirichlet_energy(model, u, v):
    """Quadratic form E(u, v) = -(Qu, v)_m."""
    u = model.function(u)
    v = model.function(v)
    return float(-np.dot(model.m * v, model.Q @ u))


@dataclass(frozen=True)
class DirichletFormView:
    """Matrix view of the form: E entries, E_1 = E + (.,.)_m, generator."""

    energy: np.ndarray
    energy_one: np.ndarray
    generator: np.ndarray
    m: np.ndarray


def dirichlet_form_view(model):
    A = -(model.m[:, None] * model.Q)
    energy = 0.5 * (A + A.T)
    energy_one = energy + np.diag(model.m)
    return DirichletFormView(energy, energy_one, model.Q.copy(), model.m.copy())


def beurling_deny(model):
    """Jump measure J(x,y) = q(x,y) m(x) / 2 and killing measure kill(x) m(x)."""
    J = 0.5 * model.m[:, None] * model.rates
    kappa = model.kill * model.m
    return J, kappa


def beurling_deny_energy(J, kappa, u, v):
    """Recover E(u, v) from the jump/killing measures (independent route)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    du = u[:, None] - u[None, :]
    dv = v[:, None] - v[None, :]
    return float(np.sum(J * du * dv) + np.sum(kappa * u * v))


def _eig(model):
    if model._eig is None:
        s = np.sqrt(model.m)
        S = (s[:, None] * model.Q) / s[None, :]
        S = 0.5 * (S + S.T)
        lam, U = np.linalg.eigh(S)
        model._eig = (s, lam, U)
    return model._eig


def semigroup(model, t):
    """Transition matrix P_t (sub-Markov when the model kills)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    s, lam, U = _eig(model)
    R = (U * np.exp(t * lam)) @ U.T
    return (R * s[None, :]) / s[:, None]

def semigroup_apply(model, t, g):
    g = model.function(g)
    s, lam, U = _eig(model)
    v = U.T @ (s * g)
    return (U @ (np.exp(t * lam) * v)) / s


def simpson_nodes(t, nodes=65):
    if nodes < 3 or nodes % 2 == 0:
        raise ValueError("Simpson rule needs an odd node count >= 3")
    ts = np.linspace(0.0, t, nodes)
    w = np.ones(nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (t / (nodes - 1)) / 3.0
    return ts, w


def time_average(model, weights, g, t, nodes=65):
    """(1/t) * integral over [0,t] of weights^T P_s g ds, composite Simpson."""
    if t <= 0:
        raise ValueError("t must be positive")
    weights = np.asarray(weights, dtype=np.float64)
    g = model.function(g)
    s, lam, U = _eig(model)
    a = U.T @ (weights / s)
    b = U.T @ (s * g)
    ts, w = simpson_nodes(t, nodes)
    vals = np.exp(np.outer(ts, lam)) @ (a * b)
    return float(np.dot(w, vals) / t)


def time_average_exact(model, weights, g, t):
    """Closed form of time_average via the eigendecomposition (test oracle)."""
    weights = np.asarray(weights, dtype=np.float64)
    g = model.function(g)
    s, lam, U = _eig(model)
    ab = (U.T @ (weights / s)) * (U.T @ (s * g))
    x = t * lam
    phi = np.where(np.abs(x) < 1e-12, 1.0 + 0.5 * x, np.expm1(x) / np.where(x == 0.0, 1.0, x))
    return float(np.dot(ab, phi))


def neville_at_zero(ts, values):
    """Extrapolate a polynomial-in-t quantity to t = 0 (Neville tableau)."""
    ts = [float(t) for t in ts]
    p = [float(v) for v in values]
    k = len(p)
    for j in range(1, k):
        for i in range(k - j):
            p[i] = (ts[i] * p[i + 1] - ts[i + j] * p[i]) / (ts[i] - ts[i + j])
    return p[0]


def decay_factors(ts, residuals, floor):
    """Per-halving decay factors 2**p between consecutive residuals.

    p is the empirical decay order log(r_i/r_j)/log(t_i/t_j); the factor is
    spacing-invariant and equals 2 for exact first-order decay.  None when
    either residual sits below the noise floor.
    """
    out = []
    for i in range(len(ts) - 1):
        r0, r1 = residuals[i], residuals[i + 1]
        if r0 <= floor or r1 <= floor:
            out.append(None)
            continue
        p = math.log(r0 / r1) / math.log(ts[i] / ts[i + 1])
        out.append(2.0 ** p)
    return out


@dataclass
class RevuzReport:
    mu: float
    ts: tuple
    values: tuple
    residuals: tuple
    rates: tuple
    extrapolated: float
    extrapolated_residual: float


DEFAULT_REVUZ_TS = (1e-1, 1e-2, 1e-3)


def revuz_density(model, a):
    """Measure (mass per state) of the occupation functional with density a."""
    a = model.function(a)
    return a * model.m


def revuz_limit_check(model, a, f, ts=DEFAULT_REVUZ_TS, nodes=65):
    """Compare (1/t) E_m[ integral of f a ] against the measure pairing.

    Evaluates the deterministic semigroup average at each t, reports the
    residuals, their per-halving decay factors, and the value extrapolated
    to t = 0.
    """
    a = model.function(a)
    f = model.function(f)
    mu = float(np.dot(f, a * model.m))
    g = f * a
    vals = [time_average(model, model.m, g, t, nodes) for t in ts]
    residuals = [abs(v - mu) for v in vals]
    floor = 1e-13 * max(1.0, abs(mu))
    rates = decay_factors(ts, residuals, floor)
    extrapolated = neville_at_zero(ts, vals)
    return RevuzReport(
        mu=mu,
        ts=tuple(ts),
        values=tuple(vals),
        residuals=tuple(residuals),
        rates=tuple(rates),
        extrapolated=extrapolated,
        extrapolated_residual=abs(extrapolated - mu),
    )


def energy_measure(model, u):
    """Mass per state of the squared-increment measure of u.

    Each state carries m(x) times the rate-weighted squared jump of u,
    including the jump to the cemetery (u is 0 there).
    """
    u = model.function(u)
    du2 = (u[None, :] - u[:, None]) ** 2
    c = np.sum(model.rates * du2, axis=1) + model.kill * u ** 2
    return c * model.m


def default_horizon(model):
    """Ten mass-weighted mean holding times."""
    if np.any(model.total_rate <= 0.0):
        raise ModelError(
            "model has a state with no outflow; pass an explicit horizon"
        )
    return 10.0 * float(np.dot(model.m, 1.0 / model.total_rate) / np.sum(model.m))
