# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ``_kernels_ref``.

Every loop mirrors the Python lane operation for operation (same RNG
stream, same accumulation order, libm log1p), so both lanes produce
bit-identical paths and functional values.
"""

from libc.math cimport INFINITY, log1p

import numpy as np

cimport numpy as cnp

cnp.import_array()

IMPL_NAME = "cython"

cdef unsigned long long GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double U53 = 1.0 / 9007199254740992.0


cdef inline unsigned long long _mix64(unsigned long long z) nogil:
    z ^= z >> 30
    z *= 0xBF58476D1CE4E5B9ULL
    z ^= z >> 27
    z *= 0x94D049BB133111EBULL
    z ^= z >> 31
    return z


cdef inline double _to_uniform(unsigned long long state) nogil:
    return <double> (_mix64(state) >> 11) * U53


def sample_chain(x0, const double[:, ::1] rates, const double[::1] kill,
                 const double[::1] lam, double horizon, state):
    """Jump-chain sampler; continues the splitmix64 stream at `state`."""
    cdef Py_ssize_t n = rates.shape[0]
    cdef unsigned long long s = state
    cdef double zeta = INFINITY
    cdef double t = 0.0
    cdef Py_ssize_t x = x0
    cdef Py_ssize_t y, j
    cdef double r, u, v, dt, tn, c
    cdef Py_ssize_t count = 0
    cdef Py_ssize_t cap = 64
    times_buf = np.empty(cap, dtype=np.float64)
    states_buf = np.empty(cap, dtype=np.int64)
    cdef double[::1] tv = times_buf
    cdef cnp.int64_t[::1] sv = states_buf

    while True:
        r = lam[x]
        if r <= 0.0:
            break
        s = s + GOLDEN
        u = _to_uniform(s)
        while u == 0.0:
            s = s + GOLDEN
            u = _to_uniform(s)
        dt = -log1p(-u) / r
        tn = t + dt
        if tn > horizon:
            break
        s = s + GOLDEN
        v = _to_uniform(s)
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
        if count == cap:
            cap *= 2
            times_buf = np.resize(times_buf, cap)
            states_buf = np.resize(states_buf, cap)
            tv = times_buf
            sv = states_buf
        tv[count] = tn
        sv[count] = y
        count += 1
        x = y
        t = tn
    return times_buf[:count].copy(), states_buf[:count].copy(), zeta


cdef double _occ(Py_ssize_t x0, const double[::1] times,
                 const cnp.int64_t[::1] states, double zeta, double t,
                 const double[::1] dens) nogil:
    cdef double tt = t if t < zeta else zeta
    cdef double total = 0.0
    cdef double prev = 0.0
    cdef Py_ssize_t x = x0
    cdef Py_ssize_t i
    cdef double ti
    for i in range(times.shape[0]):
        ti = times[i]
        if ti >= tt:
            break
        total += (ti - prev) * dens[x]
        prev = ti
        x = states[i]
    total += (tt - prev) * dens[x]
    return total


cdef double _jumpsum(Py_ssize_t x0, const double[::1] times,
                     const cnp.int64_t[::1] states, double zeta, double t,
                     const double[:, ::1] W) nogil:
    cdef Py_ssize_t n = W.shape[0] - 1
    cdef double total = 0.0
    cdef Py_ssize_t x = x0
    cdef Py_ssize_t i, y
    cdef double ti
    for i in range(times.shape[0]):
        ti = times[i]
        if ti > t:
            break
        y = states[i]
        total += W[x, y]
        x = y
    if zeta <= t:
        total += W[x, n]
    return total


def occ(x0, const double[::1] times, const cnp.int64_t[::1] states,
        double zeta, double t, const double[::1] dens):
    """Integral of dens(X_s) over [0, t ^ zeta]."""
    return _occ(x0, times, states, zeta, t, dens)


def jumpsum(x0, const double[::1] times, const cnp.int64_t[::1] states,
            double zeta, double t, const double[:, ::1] W):
    """Sum of W[pre, post] over jumps up to t; W[:, -1] is the death column."""
    return _jumpsum(x0, times, states, zeta, t, W)


def occ_grid(x0, const double[::1] times, const cnp.int64_t[::1] states,
             double zeta, const double[::1] ts, const double[::1] dens):
    cdef Py_ssize_t m = ts.shape[0]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    cdef Py_ssize_t x = x0
    for i in range(m):
        ov[i] = _occ(x, times, states, zeta, ts[i], dens)
    return out


def jump_grid(x0, const double[::1] times, const cnp.int64_t[::1] states,
              double zeta, const double[::1] ts, const double[:, ::1] W):
    cdef Py_ssize_t m = ts.shape[0]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    cdef Py_ssize_t x = x0
    for i in range(m):
        ov[i] = _jumpsum(x, times, states, zeta, ts[i], W)
    return out


cdef double _lambda_eval(Py_ssize_t x0, const double[::1] times,
                         const cnp.int64_t[::1] states, double zeta, double t,
                         const double[:, ::1] WM, const double[::1] densM,
                         const double[:, ::1] WK, const double[::1] densK,
                         double[::1] rtimes, cnp.int64_t[::1] rstates) nogil:
    if t >= zeta:
        return 0.0
    cdef Py_ssize_t m = times.shape[0]
    cdef Py_ssize_t k = 0
    while k < m and times[k] < t:
        k += 1
    cdef Py_ssize_t xtm, xt
    if k > 0:
        xtm = states[k - 1]
    else:
        xtm = x0
    if k < m and times[k] == t:
        xt = states[k]
    else:
        xt = xtm

    cdef double m_fwd = _jumpsum(x0, times, states, zeta, t, WM) + _occ(
        x0, times, states, zeta, t, densM)

    cdef Py_ssize_t j
    for j in range(k):
        rtimes[j] = t - times[k - 1 - j]
    for j in range(k):
        if k - 1 - j > 0:
            rstates[j] = states[k - 2 - j]
        else:
            rstates[j] = x0
    cdef double m_rev = _jumpsum(xtm, rtimes[:k], rstates[:k], INFINITY, t, WM) + _occ(
        xtm, rtimes[:k], rstates[:k], INFINITY, t, densM)

    cdef double corr = WM[xt, xtm]
    cdef double k_fwd = _jumpsum(x0, times, states, zeta, t, WK) + _occ(
        x0, times, states, zeta, t, densK)
    return -0.5 * (((m_fwd + m_rev) + corr) + k_fwd)


def lambda_eval(x0, const double[::1] times, const cnp.int64_t[::1] states,
                double zeta, double t, const double[:, ::1] WM,
                const double[::1] densM, const double[:, ::1] WK,
                const double[::1] densK):
    """One point of the reversal functional; 0 on or after the death time."""
    cdef Py_ssize_t m = times.shape[0]
    rt = np.empty(m, dtype=np.float64)
    rs = np.empty(m, dtype=np.int64)
    cdef double[::1] rtv = rt
    cdef cnp.int64_t[::1] rsv = rs
    return _lambda_eval(x0, times, states, zeta, t, WM, densM, WK, densK,
                        rtv, rsv)


def lambda_grid(x0, const double[::1] times, const cnp.int64_t[::1] states,
                double zeta, const double[::1] ts, const double[:, ::1] WM,
                const double[::1] densM, const double[:, ::1] WK,
                const double[::1] densK):
    cdef Py_ssize_t m = ts.shape[0]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t nev = times.shape[0]
    rt = np.empty(nev, dtype=np.float64)
    rs = np.empty(nev, dtype=np.int64)
    cdef double[::1] rtv = rt
    cdef cnp.int64_t[::1] rsv = rs
    cdef Py_ssize_t i
    cdef Py_ssize_t x = x0
    for i in range(m):
        ov[i] = _lambda_eval(x, times, states, zeta, ts[i], WM, densM,
                             WK, densK, rtv, rsv)
    return out
