"""Exact-event sampling of model paths.

Sampling walks the embedded jump chain: exponential holding time at the
total rate, then a destination drawn proportionally to the outgoing
rates, with the killing rate as one more destination.  Every path is
driven by its own counter-based stream, so path i of a batch equals the
single path sampled with SeedSpec(master, i).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .chain import default_horizon
from .paths import Path
from .rng import PathStream


@dataclass(frozen=True)
class SeedSpec:
    master: int
    index: int = 0


def _as_seed(seed):
    if isinstance(seed, SeedSpec):
        return seed
    if isinstance(seed, int):
        return SeedSpec(seed, 0)
    if isinstance(seed, (tuple, list)) and len(seed) == 2:
        return SeedSpec(int(seed[0]), int(seed[1]))
    raise ValueError("seed must be a SeedSpec, int, or (master, index) pair")


def resolve_state(model, x0):
    """Map a state label (preferred) or bare index to an index."""
    if str(x0) in model._index:
        return model._index[str(x0)]
    if isinstance(x0, (int, np.integer)) and 0 <= int(x0) < model.n:
        return int(x0)
    raise ValueError("unknown start state %r" % (x0,))


def _stationary_start(model, stream):
    u = stream.uniform() * float(np.sum(model.m))
    c = 0.0
    for j in range(model.n):
        c += model.m[j]
        if u < c:
            return j
    return model.n - 1


def _run(model, xi, horizon, stream):
    times, states, zeta = kernels.sample_chain(
        xi, model.rates, model.kill, model.total_rate, horizon, stream.state
    )
    return Path(xi, times, states, zeta, horizon)


def sample_path(model, x0, horizon=None, seed=0):
    """One path from the given start state."""
    spec = _as_seed(seed)
    horizon = default_horizon(model) if horizon is None else float(horizon)
    if horizon <= 0.0 or math.isnan(horizon):
        raise ValueError("horizon must be positive")
    stream = PathStream(spec.master, spec.index)
    return _run(model, resolve_state(model, x0), horizon, stream)


def sample_stationary(model, horizon=None, seed=0):
    """One path whose start state is drawn from m."""
    spec = _as_seed(seed)
    horizon = default_horizon(model) if horizon is None else float(horizon)
    if horizon <= 0.0 or math.isnan(horizon):
        raise ValueError("horizon must be positive")
    stream = PathStream(spec.master, spec.index)
    xi = _stationary_start(model, stream)
    return _run(model, xi, horizon, stream)


def sample_batch(model, n_paths, horizon=None, master=0, x0=None):
    """n paths under one master seed; stationary starts unless x0 is given.

    Path i is reproducible in isolation via SeedSpec(master, i), so the
    batch may be generated in chunks or across workers without any
    change in output.
    """
    out = []
    for i in range(int(n_paths)):
        seed = SeedSpec(int(master), i)
        if x0 is None:
            out.append(sample_stationary(model, horizon, seed))
        else:
            out.append(sample_path(model, x0, horizon, seed))
    return out
