import importlib.util
import os
import subprocess
import sys

import numpy as np

import revaf
from revaf import _kernels_ref as ref
from revaf import kernels as active
from revaf.rng import stream_state


def _model_arrays(model):
    lam = model.total_rate
    return model.rates, model.kill, lam


def _sample_both(model, x0, horizon, state):
    a = active.sample_chain(x0, *(_model_arrays(model)), horizon, state)
    b = ref.sample_chain(x0, *(_model_arrays(model)), horizon, state)
    return a, b


def test_active_lane_is_a_known_implementation():
    assert active.IMPL_NAME in ("python", "cython")
    assert revaf.kernel_impl == active.IMPL_NAME


def test_sample_chain_bitwise_identical_across_lanes(t2, k3):
    for model in (t2, k3):
        for i in range(60):
            state = stream_state(0xBEEF, i)
            (ta, sa, za), (tb, sb, zb) = _sample_both(model, i % model.n, 6.0, state)
            assert np.array_equal(np.asarray(ta), np.asarray(tb))
            assert np.array_equal(np.asarray(sa), np.asarray(sb))
            assert za == zb


def test_occupation_and_jump_sums_bitwise_identical(t2, k3):
    rng = np.random.default_rng(5)
    ts = np.linspace(0.0, 6.0, 33)
    for model in (t2, k3):
        dens = rng.standard_normal(model.n)
        W = rng.standard_normal((model.n + 1, model.n + 1))
        W[model.n, :] = 0.0
        np.fill_diagonal(W, 0.0)
        for i in range(30):
            state = stream_state(0xFACE, i)
            (times, states, zeta), _ = _sample_both(model, 0, 6.0, state)
            times = np.asarray(times)
            states = np.asarray(states)
            for t in (0.7, 2.5, 6.0):
                oa = active.occ(0, times, states, zeta, t, dens)
                ob = ref.occ(0, times, states, zeta, t, dens)
                assert oa == ob
                ja = active.jumpsum(0, times, states, zeta, t, W)
                jb = ref.jumpsum(0, times, states, zeta, t, W)
                assert ja == jb
            ga = active.occ_grid(0, times, states, zeta, ts, dens)
            gb = ref.occ_grid(0, times, states, zeta, ts, dens)
            assert np.array_equal(np.asarray(ga), np.asarray(gb))
            ha = active.jump_grid(0, times, states, zeta, ts, W)
            hb = ref.jump_grid(0, times, states, zeta, ts, W)
            assert np.array_equal(np.asarray(ha), np.asarray(hb))


def test_grid_sums_match_pointwise_sums(t2):
    rng = np.random.default_rng(11)
    dens = rng.standard_normal(t2.n)
    W = np.zeros((3, 3))
    W[0, 1], W[1, 0] = 1.5, -0.25
    ts = np.linspace(0.1, 5.9, 24)
    for i in range(10):
        state = stream_state(0xA1, i)
        times, states, zeta = active.sample_chain(0, t2.rates, t2.kill, t2.total_rate, 6.0, state)
        times = np.asarray(times)
        states = np.asarray(states)
        og = np.asarray(active.occ_grid(0, times, states, zeta, ts, dens))
        jg = np.asarray(active.jump_grid(0, times, states, zeta, ts, W))
        for j, t in enumerate(ts):
            assert og[j] == active.occ(0, times, states, zeta, t, dens)
            assert jg[j] == active.jumpsum(0, times, states, zeta, t, W)


def test_lambda_kernels_bitwise_identical(t2, k3):
    rng = np.random.default_rng(17)
    ts = np.linspace(0.0, 6.0, 17)
    for model in (t2, k3):
        WM = rng.standard_normal((model.n + 1, model.n + 1))
        WM[model.n, :] = 0.0
        np.fill_diagonal(WM, 0.0)
        WK = -0.5 * (WM + WM.T)
        densM = rng.standard_normal(model.n)
        densK = rng.standard_normal(model.n)
        for i in range(20):
            state = stream_state(0x1A4B, i)
            times, states, zeta = active.sample_chain(
                0, model.rates, model.kill, model.total_rate, 6.0, state
            )
            times = np.asarray(times)
            states = np.asarray(states)
            for t in (0.9, 3.3, 6.0):
                va = active.lambda_eval(0, times, states, zeta, t, WM, densM, WK, densK)
                vb = ref.lambda_eval(0, times, states, zeta, t, WM, densM, WK, densK)
                assert va == vb
            ga = np.asarray(active.lambda_grid(0, times, states, zeta, ts, WM, densM, WK, densK))
            gb = np.asarray(ref.lambda_grid(0, times, states, zeta, ts, WM, densM, WK, densK))
            assert np.array_equal(ga, gb)


def test_pure_python_lane_is_selectable_by_environment():
    code = "import revaf; print(revaf.kernel_impl)"
    env = dict(os.environ, REVAF_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "python"


def test_compiled_lane_is_used_when_available():
    if importlib.util.find_spec("revaf._core") is None:
        assert active.IMPL_NAME == "python"
    else:
        env = {k: v for k, v in os.environ.items() if k != "REVAF_PURE"}
        code = "import revaf; print(revaf.kernel_impl)"
        out = subprocess.run(
            [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
        )
        assert out.stdout.strip() == "cython"
