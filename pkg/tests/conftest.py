import numpy as np
import pytest

from revaf import catalog
from revaf.paths import Path


@pytest.fixture(scope="session")
def t2():
    return catalog.two_state()


@pytest.fixture(scope="session")
def k3():
    return catalog.three_state_killed()


@pytest.fixture(scope="session")
def ring10():
    return catalog.ring(10)


@pytest.fixture()
def star():
    """Two-state trajectory with a single move at t=0.5."""
    return Path(0, [0.5], [1])


@pytest.fixture()
def killed():
    """Three-state trajectory that moves at 0.3 and dies at 0.8."""
    return Path(0, [0.3], [1], zeta=0.8)


def grid_states(path, ts):
    """State index under the path at each grid time (x0 before any event)."""
    ts = np.asarray(ts, dtype=np.float64)
    if len(path.states):
        k = np.searchsorted(path.times, ts, side="right")
        return np.where(k > 0, path.states[k - 1], path.x0)
    return np.full(len(ts), path.x0, dtype=np.int64)
