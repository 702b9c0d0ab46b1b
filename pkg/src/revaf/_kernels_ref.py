"""Pure-Python twin of the compiled kernels in ``_core``.

Both lanes implement the same arithmetic in the same order, so sampled
paths and functional values are bit-identical whichever lane is active.
Loops are deliberately scalar here; vectorising would change summation
order and break the bit-equality contract.
"""

import math

import numpy as np

from .rng import GOLDEN, MASK64, U53, mix64

IMPL_NAME = "python"


def _next_uniform(state):
    state = (state + GOLDEN) & MASK64
    return state, (mix64(state) >> 11) * U53


def sample_chain(x0, rates, kill, lam, horizon, state):
    """Jump-chain sampler; continues the splitmix64 stream at `state`.

    Returns (times, states, zeta) with event times strictly increasing,
    all <= horizon, and zeta = +inf when the path survives.
    """
    n = rates.shape[0]
    times = []
    states = []
    zeta = math.inf
    t = 0.0
    x = int(x0)
    while True:
        r = lam[x]
        if r <= 0.0:
            break
        state, u = _next_uniform(state)
        while u == 0.0:
            state, u = _next_uniform(state)
        dt = -math.log1p(-u) / r
        tn = t + dt
        if tn > horizon:
            break
        state, v = _next_uniform(state)
        v = v * r
        c = 0.0
        y = -1
        for j in range(n):
            c += rates[x, j]
            if v < c:
                y = j
                break
        if y < 0:
            zeta = tn
            break
        times.append(tn)
        states.append(y)
        x = y
        t = tn
    return (
        np.asarray(times, dtype=np.float64),
        np.asarray(states, dtype=np.int64),
        zeta,
    )


def occ(x0, times, states, zeta, t, dens):
    """Integral of dens(X_s) over [0, t ^ zeta]."""
    tt = t if t < zeta else zeta
    total = 0.0
    prev = 0.0
    x = int(x0)
    for i in range(len(times)):
        ti = times[i]
        if ti >= tt:
            break
        total += (ti - prev) * dens[x]
        prev = ti
        x = states[i]
    total += (tt - prev) * dens[x]
    return total


def jumpsum(x0, times, states, zeta, t, W):
    """Sum of W[pre, post] over jumps up to t; W[:, -1] is the death column."""
    n = W.shape[0] - 1
    total = 0.0
    x = int(x0)
    for i in range(len(times)):
        ti = times[i]
        if ti > t:
            break
        y = states[i]
        total += W[x, y]
        x = y
    if zeta <= t:
        total += W[x, n]
    return total


def occ_grid(x0, times, states, zeta, ts, dens):
    out = np.empty(len(ts), dtype=np.float64)
    for i in range(len(ts)):
        out[i] = occ(x0, times, states, zeta, ts[i], dens)
    return out


def jump_grid(x0, times, states, zeta, ts, W):
    out = np.empty(len(ts), dtype=np.float64)
    for i in range(len(ts)):
        out[i] = jumpsum(x0, times, states, zeta, ts[i], W)
    return out


def _count_before(times, t):
    # number of events with time strictly below t
    k = 0
    m = len(times)
    while k < m and times[k] < t:
        k += 1
    return k


def lambda_eval(x0, times, states, zeta, t, WM, densM, WK, densK):
    """One point of the reversal functional; 0 on or after the death time."""
    if t >= zeta:
        return 0.0
    k = _count_before(times, t)
    if k > 0:
        xtm = int(states[k - 1])
    else:
        xtm = int(x0)
    if k < len(times) and times[k] == t:
        xt = int(states[k])
    else:
        xt = xtm

    m_fwd = jumpsum(x0, times, states, zeta, t, WM) + occ(
        x0, times, states, zeta, t, densM
    )

    rtimes = np.empty(k, dtype=np.float64)
    rstates = np.empty(k, dtype=np.int64)
    for j in range(k):
        rtimes[j] = t - times[k - 1 - j]
    for j in range(k):
        if k - 1 - j > 0:
            rstates[j] = states[k - 2 - j]
        else:
            rstates[j] = x0
    m_rev = jumpsum(xtm, rtimes, rstates, math.inf, t, WM) + occ(
        xtm, rtimes, rstates, math.inf, t, densM
    )

    corr = WM[xt, xtm]
    k_fwd = jumpsum(x0, times, states, zeta, t, WK) + occ(
        x0, times, states, zeta, t, densK
    )
    return -0.5 * (((m_fwd + m_rev) + corr) + k_fwd)


def lambda_grid(x0, times, states, zeta, ts, WM, densM, WK, densK):
    out = np.empty(len(ts), dtype=np.float64)
    for i in range(len(ts)):
        out[i] = lambda_eval(x0, times, states, zeta, ts[i], WM, densM, WK, densK)
    return out
