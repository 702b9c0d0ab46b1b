"""Built-in models and named functions used by scenarios and tests."""

import math

import numpy as np

from .chain import ChainModel
from .circle import CircleFunction
from .integrals import SmoothMap


def two_state():
    """Two states with unit symmetric rates and flat weights."""
    return ChainModel(
        states=("1", "2"),
        m=(1.0, 1.0),
        rates=((0.0, 1.0), (1.0, 0.0)),
        name="t2",
    )


def three_state_killed():
    """Three states, uneven weights, and killing at the middle state."""
    rates = np.array(
        [
            [0.0, 1.0, 0.5],
            [2.0, 0.0, 1.0],
            [1.0, 1.0, 0.0],
        ]
    )
    return ChainModel(
        states=("1", "2", "3"),
        m=(2.0, 1.0, 1.0),
        rates=rates,
        kill=(0.0, 0.5, 0.0),
        name="k3",
    )


def ring(n=10, rate=1.0):
    """Nearest-neighbour ring; symmetric because the weights are flat."""
    rates = np.zeros((n, n))
    for i in range(n):
        rates[i, (i + 1) % n] = rate
        rates[i, (i - 1) % n] = rate
    return ChainModel(
        states=tuple(str(i + 1) for i in range(n)),
        m=np.ones(n),
        rates=rates,
        name="ring%d" % n,
    )


_MODEL_BUILDERS = {
    "t2": two_state,
    "k3": three_state_killed,
    "ring10": ring,
}


def model_by_name(name):
    try:
        return _MODEL_BUILDERS[name]()
    except KeyError:
        raise KeyError("unknown model %r; known: %s" % (name, sorted(_MODEL_BUILDERS)))


def chain_function(model, name):
    """Named test functions on a chain's state space."""
    n = len(model.states)
    idx = np.arange(n, dtype=np.float64)
    table = {
        "indicator-last": (idx == n - 1).astype(np.float64),
        "indicator-first": (idx == 0).astype(np.float64),
        "linear": idx,
        "affine": 2.0 + idx,
        "alternating": np.where(idx % 2 == 0, 1.0, -1.0),
        "cosine": np.cos(2.0 * np.pi * idx / n),
        "sine": np.sin(2.0 * np.pi * idx / n),
        "quadratic": idx * idx / max(n - 1, 1),
    }
    try:
        return table[name].copy()
    except KeyError:
        raise KeyError("unknown function %r; known: %s" % (name, sorted(table)))


def chain_jump_function(model, name):
    """Named antisymmetric-ish jump weights, as dense (n+1, n+1) tables."""
    n = len(model.states)
    W = np.zeros((n + 1, n + 1))
    if name == "difference-linear":
        u = chain_function(model, "linear")
        up = np.concatenate([u, [0.0]])
        W[:, :] = up[None, :] - up[:, None]
        W[n, :] = 0.0
    elif name == "first-edge":
        if n < 2:
            raise ValueError("first-edge needs at least two states")
        W[0, 1] = 1.0
        W[1, 0] = -1.0
    elif name == "one-way":
        if n < 2:
            raise ValueError("one-way needs at least two states")
        W[0, 1] = 1.0
    elif name == "to-grave":
        W[:n, n] = 1.0
    else:
        raise KeyError(
            "unknown jump function %r; known: %s"
            % (name, ["difference-linear", "first-edge", "one-way", "to-grave"])
        )
    return W


def smooth_map(name, dim):
    """Named multivariate maps with exact first and second derivatives."""
    dim = int(dim)
    if name == "square":
        return SmoothMap(
            lambda v: float(np.dot(v, v)),
            lambda v: 2.0 * np.asarray(v, dtype=np.float64),
            lambda v: 2.0 * np.eye(len(v)),
            dim,
            name="square",
        )
    if name == "product":
        if dim < 2:
            raise ValueError("product needs dim >= 2")

        def _grad(v):
            g = np.empty(len(v))
            for k in range(len(v)):
                g[k] = np.prod(np.delete(v, k))
            return g

        def _hess(v):
            d = len(v)
            H = np.empty((d, d))
            for a in range(d):
                for b in range(d):
                    if a == b:
                        H[a, b] = 0.0
                    else:
                        H[a, b] = np.prod(np.delete(v, [a, b]))
            return H

        return SmoothMap(
            lambda v: float(np.prod(v)), _grad, _hess, dim, name="product"
        )
    if name == "linear":
        w = 1.0 + np.arange(dim, dtype=np.float64)
        return SmoothMap(
            lambda v: float(np.dot(w, v)),
            lambda v: w.copy(),
            lambda v: np.zeros((dim, dim)),
            dim,
            name="linear",
        )
    if name == "cube":
        if dim != 1:
            raise ValueError("cube is one-dimensional")
        return SmoothMap(
            lambda v: float(v[0] ** 3),
            lambda v: np.array([3.0 * v[0] ** 2]),
            lambda v: np.array([[6.0 * v[0]]]),
            1,
            name="cube",
        )
    if name == "exp-sum":
        return SmoothMap(
            lambda v: float(math.exp(np.sum(v))),
            lambda v: math.exp(np.sum(v)) * np.ones(len(v)),
            lambda v: math.exp(np.sum(v)) * np.ones((len(v), len(v))),
            dim,
            name="exp-sum",
        )
    raise KeyError(
        "unknown smooth map %r; known: %s"
        % (name, ["square", "product", "linear", "cube", "exp-sum"])
    )


def circle_function(name):
    """Named periodic observables for the circle diffusion."""
    tp = 2.0 * math.pi
    table = {
        "sin1": CircleFunction(
            lambda x: np.sin(tp * x),
            lambda x: tp * np.cos(tp * x),
            lambda x: -tp * tp * np.sin(tp * x),
            name="sin1",
        ),
        "cos1": CircleFunction(
            lambda x: np.cos(tp * x),
            lambda x: -tp * np.sin(tp * x),
            lambda x: -tp * tp * np.cos(tp * x),
            name="cos1",
        ),
        "sin2": CircleFunction(
            lambda x: np.sin(2 * tp * x),
            lambda x: 2 * tp * np.cos(2 * tp * x),
            lambda x: -4 * tp * tp * np.sin(2 * tp * x),
            name="sin2",
        ),
    }
    try:
        return table[name]
    except KeyError:
        raise KeyError("unknown circle function %r; known: %s" % (name, sorted(table)))


def circle_map(name):
    """Scalar change-of-variable maps as (phi, dphi, ddphi) ufunc triples."""
    table = {
        "square": (
            lambda v: v * v,
            lambda v: 2.0 * v,
            lambda v: 2.0 * np.ones_like(v),
        ),
        "cube": (
            lambda v: v ** 3,
            lambda v: 3.0 * v * v,
            lambda v: 6.0 * v,
        ),
        "cosh": (np.cosh, np.sinh, np.cosh),
    }
    try:
        return table[name]
    except KeyError:
        raise KeyError("unknown circle map %r; known: %s" % (name, sorted(table)))


def list_catalog():
    """Names available to scenario files, grouped by kind."""
    return {
        "models": sorted(_MODEL_BUILDERS) + ["circle-bm"],
        "functions": [
            "indicator-last",
            "indicator-first",
            "linear",
            "affine",
            "alternating",
            "cosine",
            "sine",
            "quadratic",
        ],
        "jump_functions": ["difference-linear", "first-edge", "one-way", "to-grave"],
        "smooth_maps": ["square", "product", "linear", "cube", "exp-sum"],
        "circle_functions": ["sin1", "cos1", "sin2"],
        "circle_maps": ["square", "cube", "cosh"],
    }
