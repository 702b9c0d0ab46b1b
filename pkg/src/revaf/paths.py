"""Right-continuous pure-jump trajectories and their time algebra.

A path is (x0, event list, death time, horizon).  States are integer
indices into a model's state list; the cemetery is represented by -1.
The operations here (shift, reverse, equivalence) are pure event-list
manipulations and are exact up to float rounding of event times.
"""

import math

import numpy as np

DEAD = -1


class Path:
    """Piecewise-constant trajectory with optional killing.

    x0       initial state (-1 only for the path that is dead at time 0)
    times    strictly increasing event times in (0, horizon]
    states   post-jump states, same length as times
    zeta     death time; +inf if the path never dies; all events < zeta
    horizon  time up to which the trajectory is defined (may be +inf)
    """

    __slots__ = ("x0", "times", "states", "zeta", "horizon")

    def __init__(self, x0, times, states, zeta=math.inf, horizon=math.inf):
        # own fresh contiguous copies: evaluation kernels take contiguous
        # views, and freezing must not touch a caller's array
        times = np.array(times, dtype=np.float64, order="C")
        states = np.array(states, dtype=np.int64, order="C")
        if times.ndim != 1 or states.ndim != 1 or len(times) != len(states):
            raise ValueError("times/states must be 1-d and the same length")
        zeta = float(zeta)
        horizon = float(horizon)
        x0 = int(x0)
        if math.isnan(zeta) or math.isnan(horizon):
            raise ValueError("zeta/horizon must not be NaN")
        if zeta < 0.0 or horizon < 0.0:
            raise ValueError("zeta and horizon must be nonnegative")
        if zeta == 0.0:
            if x0 != DEAD or len(times):
                raise ValueError("a path dead at 0 has x0 = -1 and no events")
        else:
            if x0 < 0:
                raise ValueError("x0 must be a state index")
        if len(times):
            if times[0] <= 0.0 or np.any(np.diff(times) <= 0.0):
                raise ValueError("event times must be strictly increasing and > 0")
            if times[-1] >= zeta:
                raise ValueError("events must occur strictly before zeta")
            if times[-1] > horizon:
                raise ValueError("events must occur within the horizon")
            if np.any(states < 0):
                raise ValueError("post-jump states must be state indices")
        if math.isfinite(zeta) and zeta > horizon:
            raise ValueError("a finite zeta must satisfy zeta <= horizon")
        times.flags.writeable = False
        states.flags.writeable = False
        self.x0 = x0
        self.times = times
        self.states = states
        self.zeta = zeta
        self.horizon = horizon

    @classmethod
    def from_events(cls, x0, events, zeta=math.inf, horizon=math.inf):
        """Build from [(time, state), ...] pairs."""
        if len(events):
            ts, ss = zip(*events)
        else:
            ts, ss = (), ()
        return cls(x0, np.asarray(ts, dtype=np.float64), np.asarray(ss, dtype=np.int64), zeta, horizon)

    def __repr__(self):
        evs = ", ".join("(%g, %d)" % (t, s) for t, s in zip(self.times, self.states))
        return "Path(x0=%d, events=[%s], zeta=%g, horizon=%g)" % (
            self.x0, evs, self.zeta, self.horizon)

    @property
    def num_events(self):
        return len(self.times)

    def last_alive_state(self):
        """State occupied just before death (or at the end of the record)."""
        if self.zeta == 0.0:
            return DEAD
        return int(self.states[-1]) if len(self.states) else self.x0

    def to_dict(self):
        return {
            "x0": self.x0,
            "events": [[float(t), int(s)] for t, s in zip(self.times, self.states)],
            "zeta": None if math.isinf(self.zeta) else self.zeta,
            "horizon": None if math.isinf(self.horizon) else self.horizon,
        }

    @classmethod
    def from_dict(cls, rec):
        zeta = rec.get("zeta")
        horizon = rec.get("horizon")
        return cls.from_events(
            rec["x0"],
            rec.get("events", []),
            math.inf if zeta is None else float(zeta),
            math.inf if horizon is None else float(horizon),
        )


def dead_path(horizon=math.inf):
    return Path(DEAD, (), (), 0.0, horizon)


def _check_time(path, t, what="t"):
    t = float(t)
    if math.isnan(t) or t < 0.0 or t > path.horizon:
        raise ValueError("%s must lie in [0, horizon], got %r" % (what, t))
    return t


def evaluate(path, t):
    """State at time t (right-continuous); -1 once the path is dead."""
    t = _check_time(path, t)
    if t >= path.zeta:
        return DEAD
    k = int(np.searchsorted(path.times, t, side="right"))
    return int(path.states[k - 1]) if k else path.x0


def state_pair(path, t):
    """(left limit, value) of the state at t, with X_{0-} := X_0."""
    t = _check_time(path, t)
    if t > path.zeta:
        return (DEAD, DEAD)
    kl = int(np.searchsorted(path.times, t, side="left"))
    pre = int(path.states[kl - 1]) if kl else path.x0
    if t == path.zeta:
        return (pre, DEAD)
    kr = int(np.searchsorted(path.times, t, side="right"))
    post = int(path.states[kr - 1]) if kr else path.x0
    return (pre, post)


def shift(path, s):
    """Drop the first s time units: (shift(path, s))(v) = path(s + v)."""
    s = _check_time(path, s, "s")
    if s >= path.zeta:
        return dead_path(path.horizon - s)
    keep = path.times > s
    return Path(
        evaluate(path, s),
        path.times[keep] - s,
        path.states[keep],
        path.zeta - s,
        path.horizon - s,
    )


def reverse(path, t):
    """Run the trajectory backwards from just before time t.

    The reversed path starts at the left limit X_{t-}, jumps at t - s for
    each original event s in (0, t), never dies, and has infinite horizon.
    For t on or after the death time the result is the dead path.
    """
    t = _check_time(path, t)
    if t >= path.zeta:
        return dead_path()
    k = int(np.searchsorted(path.times, t, side="left"))
    rx0 = int(path.states[k - 1]) if k else path.x0
    rtimes = t - path.times[:k][::-1]
    pres = np.empty(k, dtype=np.int64)
    if k:
        pres[0] = path.x0
        pres[1:] = path.states[: k - 1]
    return Path(rx0, rtimes, pres[::-1], math.inf, math.inf)


def reverse_pre_death(path):
    """Reversal taken at the death time from the left (t = zeta-).

    Used to evaluate reversal-based functionals on the pre-death segment
    of a killed path; requires a finite death time.
    """
    if not math.isfinite(path.zeta):
        raise ValueError("reverse_pre_death needs a finite death time")
    k = len(path.times)
    rx0 = path.last_alive_state()
    rtimes = path.zeta - path.times[::-1]
    pres = np.empty(k, dtype=np.int64)
    if k:
        pres[0] = path.x0
        pres[1:] = path.states[: k - 1]
    return Path(rx0, rtimes, pres[::-1], math.inf, math.inf)


def _signature(path, t, closed, time_atol):
    evs = []
    for ti, si in zip(path.times, path.states):
        if (ti <= t) if closed else (ti < t):
            evs.append((float(ti), int(si)))
        else:
            break
    died = (path.zeta <= t) if closed else (path.zeta < t)
    if died:
        evs.append((path.zeta, DEAD))
    x0 = path.x0
    return x0, evs


KINDS = ("t-equivalent", "pre-t-equivalent")


def equivalence(path_a, path_b, t, kind, time_atol=1e-12):
    """Do two paths describe the same motion up to time t?

    kind 't-equivalent' compares the closed window [0, t];
    'pre-t-equivalent' compares [0, t).  Killing is treated as a final
    jump to the cemetery.  States must match exactly; event times match
    within time_atol (set 0.0 for bitwise comparison).
    """
    if kind not in KINDS:
        raise ValueError("kind must be one of %r" % (KINDS,))
    t = float(t)
    if t < 0.0 or t > path_a.horizon or t > path_b.horizon:
        raise ValueError("t must lie within both horizons")
    closed = kind == "t-equivalent"
    if not closed and t == 0.0:
        return True  # the window [0, 0) is empty
    xa, ea = _signature(path_a, t, closed, time_atol)
    xb, eb = _signature(path_b, t, closed, time_atol)
    if xa != xb or len(ea) != len(eb):
        return False
    for (ta, sa), (tb, sb) in zip(ea, eb):
        if sa != sb or abs(ta - tb) > time_atol:
            return False
    return True
