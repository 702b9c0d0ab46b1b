import math

import numpy as np
import pytest

from revaf import catalog
from revaf.chain import dirichlet_energy, generator_apply, time_average
from revaf.functionals import (
    KIND_CAF,
    KIND_COMPENSATED,
    KIND_FUKUSHIMA,
    KIND_ZERO_ENERGY,
    angle_bracket_density,
    caf_from_density,
    compensator_defect,
    dyadic_times,
    energy,
    fukushima,
    jump_killing_parts,
    levy_system_check,
    maf_from_jump,
    martingale_integral,
    require_martingale,
    revuz_mc_check,
    square_bracket,
    stieltjes_integral,
)
from revaf.paths import Path, dead_path, shift
from revaf.simulate import sample_batch

from conftest import grid_states


def test_fukushima_values_on_star(t2, star):
    u = catalog.chain_function(t2, "indicator-last")
    M, N = fukushima(t2, u)
    assert M.kind == KIND_FUKUSHIMA
    assert N.kind == KIND_ZERO_ENERGY
    assert M.eval(star, 0.3) == pytest.approx(-0.3, abs=1e-15)
    assert N.eval(star, 0.3) == pytest.approx(0.3, abs=1e-15)
    assert M.eval(star, 0.5) == pytest.approx(0.5, abs=1e-15)
    assert N.eval(star, 0.5) == pytest.approx(0.5, abs=1e-15)
    assert M.eval(star, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert N.eval(star, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert M.eval(star, 0.0) == 0.0
    assert N.eval(star, 0.0) == 0.0


def test_decomposition_is_exact_on_sampled_paths(t2, k3):
    for model, master in ((t2, 0xD0), (k3, 0xD1)):
        u = catalog.chain_function(model, "quadratic")
        M, N = fukushima(model, u)
        ts = dyadic_times(4.0, 32)
        upad = np.append(u, 0.0)
        for p in sample_batch(model, 150, 4.0, master):
            xs = grid_states(p, ts)
            uval = np.where(ts >= p.zeta, 0.0, upad[xs])
            total = M.eval_grid(p, ts) + N.eval_grid(p, ts)
            assert np.max(np.abs(uval - u[p.x0] - total)) <= 1e-12


def test_eval_left_extrapolates_before_the_move(t2, star):
    u = catalog.chain_function(t2, "indicator-last")
    M, N = fukushima(t2, u)
    assert M.eval_left(star, 0.5) == pytest.approx(-0.5, abs=1e-12)
    assert N.eval_left(star, 0.5) == pytest.approx(0.5, abs=1e-12)
    # away from moves the left limit is the value itself
    assert M.eval_left(star, 0.3) == pytest.approx(M.eval(star, 0.3), abs=1e-12)


def test_additivity_under_shift(t2, k3):
    rng = np.random.default_rng(2)
    for model, master in ((t2, 0xA0), (k3, 0xA1)):
        u = catalog.chain_function(model, "affine")
        M, _ = fukushima(model, u)
        for i, p in enumerate(sample_batch(model, 40, 6.0, master)):
            t = float(rng.uniform(0.1, 3.0))
            s = float(rng.uniform(0.1, 2.9))
            lhs = M.eval(p, t + s)
            rhs = M.eval(p, t) + M.eval(shift(p, t), s)
            assert lhs == pytest.approx(rhs, abs=1e-12)


def test_functional_is_flat_after_death(k3, killed):
    u = catalog.chain_function(k3, "linear")
    M, N = fukushima(k3, u)
    assert M.eval(killed, 0.8) == pytest.approx(M.eval(killed, 5.0), abs=1e-15)
    assert N.eval(killed, 0.8) == pytest.approx(N.eval(killed, 5.0), abs=1e-15)
    d = dead_path(2.0)
    assert M.eval(d, 1.0) == 0.0


def test_jump_and_killing_split(k3, killed):
    u = catalog.chain_function(k3, "linear")
    Mj, Mk = jump_killing_parts(k3, u)
    M, _ = fukushima(k3, u)
    assert Mj.eval(killed, 0.5) == pytest.approx(0.6, abs=1e-12)
    assert Mk.eval(killed, 0.5) == pytest.approx(0.1, abs=1e-12)
    assert Mj.eval(killed, 1.0) == pytest.approx(0.9, abs=1e-12)
    assert Mk.eval(killed, 1.0) == pytest.approx(-0.75, abs=1e-12)
    for t in (0.2, 0.5, 0.8, 3.0):
        assert Mj.eval(killed, t) + Mk.eval(killed, t) == pytest.approx(
            M.eval(killed, t), abs=1e-12
        )


def test_killing_part_vanishes_without_killing(t2, star):
    u = catalog.chain_function(t2, "affine")
    Mj, Mk = jump_killing_parts(t2, u)
    # the death-column weights are kept, but with zero kill rates the
    # functional never fires and carries no compensator
    assert Mk.eval(star, 1.0) == 0.0
    assert np.allclose(Mk.W[: t2.n, t2.n], -u)
    assert np.allclose(Mk.dens, 0.0)


def test_maf_from_jump_is_compensated(t2, k3):
    for model in (t2, k3):
        W = catalog.chain_jump_function(model, "difference-linear")
        K = maf_from_jump(model, W)
        assert K.kind == KIND_COMPENSATED
        assert compensator_defect(model, K) == pytest.approx(0.0, abs=1e-15)
        require_martingale(model, K, "test functional")
    M, _ = fukushima(t2, catalog.chain_function(t2, "indicator-last"))
    assert compensator_defect(t2, M) == pytest.approx(0.0, abs=1e-15)


def test_require_martingale_rejects_drift(t2):
    _, N = fukushima(t2, catalog.chain_function(t2, "indicator-last"))
    with pytest.raises(ValueError):
        require_martingale(t2, N, "lhs")
    A = caf_from_density(t2, np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        require_martingale(t2, A, "lhs")


def test_caf_is_the_running_time_integral(t2, star):
    A = caf_from_density(t2, np.array([2.0, -1.0]))
    assert A.kind == KIND_CAF
    assert A.eval(star, 0.25) == pytest.approx(0.5, abs=1e-15)
    assert A.eval(star, 1.0) == pytest.approx(1.0 - 0.5, abs=1e-15)
    grid = A.eval_grid(star, np.array([0.25, 0.5, 1.0]))
    assert np.allclose(grid, [0.5, 1.0, 0.5])


def test_stieltjes_integral_weights_the_integrand(t2, star):
    f = catalog.chain_function(t2, "affine")
    _, N = fukushima(t2, catalog.chain_function(t2, "indicator-last"))
    A = stieltjes_integral(t2, f, N)
    assert A.eval(star, 1.0) == pytest.approx(-0.5, abs=1e-14)
    assert A.eval(star, 0.5) == pytest.approx(1.0, abs=1e-14)


def test_martingale_integral_values(t2, star):
    f = catalog.chain_function(t2, "affine")
    M, _ = fukushima(t2, catalog.chain_function(t2, "indicator-last"))
    fM = martingale_integral(t2, f, M)
    assert fM.eval(star, 1.0) == pytest.approx(2.5, abs=1e-14)
    want = np.array([[0.0, 2.0, 0.0], [-3.0, 0.0, -3.0], [0.0, 0.0, 0.0]])
    assert np.allclose(fM.W, want)
    require_martingale(t2, fM, "integrand against martingale")


def test_square_bracket_collects_squared_moves(t2, star):
    M, _ = fukushima(t2, catalog.chain_function(t2, "indicator-last"))
    SB = square_bracket(M, M)
    assert SB.eval(star, 0.4) == 0.0
    assert SB.eval(star, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_square_bracket_polarization(t2):
    u = catalog.chain_function(t2, "indicator-last")
    f = catalog.chain_function(t2, "affine")
    M, _ = fukushima(t2, u)
    K = maf_from_jump(t2, catalog.chain_jump_function(t2, "difference-linear"))
    for p in sample_batch(t2, 25, 4.0, 0xB0):
        lhs = square_bracket(M, K).eval(p, 2.0)
        a = square_bracket(M + K, M + K).eval(p, 2.0)
        b = square_bracket(M - K, M - K).eval(p, 2.0)
        assert lhs == pytest.approx((a - b) / 4.0, abs=1e-12)


def test_angle_bracket_density_values(t2, k3):
    M2, _ = fukushima(t2, catalog.chain_function(t2, "indicator-last"))
    assert np.allclose(angle_bracket_density(t2, M2.W, M2.W), [1.0, 1.0])
    M3, _ = fukushima(k3, catalog.chain_function(k3, "indicator-last"))
    assert np.allclose(angle_bracket_density(k3, M3.W, M3.W), [0.5, 1.0, 2.0])


def test_square_bracket_compensates_to_the_angle_clock(k3):
    # E_m[[M, K]_t] equals the mean of the angle-bracket clock; the paired
    # difference over stationary paths is mean zero
    M, _ = fukushima(k3, catalog.chain_function(k3, "indicator-last"))
    K = maf_from_jump(k3, catalog.chain_jump_function(k3, "difference-linear"))
    c = angle_bracket_density(k3, M.W, K.W)
    assert np.allclose(c, [1.0, 1.0, 3.0])
    clock = caf_from_density(k3, c)
    cross = square_bracket(M, K)
    t = 1.0
    diffs = np.array(
        [cross.eval(p, t) - clock.eval(p, t) for p in sample_batch(k3, 4000, t, 0xB4AC)]
    )
    z = diffs.mean() * math.sqrt(len(diffs)) / diffs.std(ddof=1)
    assert abs(z) < 3.5


def test_energy_equals_form_energy_up_to_half_the_killing(t2, k3):
    # e(M^u) = E(u, u) - (1/2) sum m kill u^2: the killing term enters the
    # form fully but the martingale energy only at half weight
    rng = np.random.default_rng(3)
    for model in (t2, k3):
        for _ in range(25):
            u = rng.standard_normal(model.n)
            M, _ = fukushima(model, u)
            want = dirichlet_energy(model, u, u) - 0.5 * float(
                np.dot(model.m * model.kill, u**2)
            )
            assert energy(model, M) == pytest.approx(want, abs=1e-12)


def test_energy_values(t2, k3):
    M2, _ = fukushima(t2, catalog.chain_function(t2, "indicator-last"))
    assert energy(t2, M2) == pytest.approx(1.0, abs=1e-14)
    M3, _ = fukushima(k3, catalog.chain_function(k3, "indicator-last"))
    assert energy(k3, M3) == pytest.approx(2.0, abs=1e-14)


def test_energy_matches_small_time_variance_rate(k3):
    # (2t)^-1 E_m[M_t^2] converges to the energy as t -> 0, and equals half
    # the running average of the bracket clock; one Richardson step over a
    # halving pair removes the leading O(t) term
    u = catalog.chain_function(k3, "quadratic")
    M, _ = fukushima(k3, u)
    c = angle_bracket_density(k3, M.W, M.W)

    def estimate(t):
        return 0.5 * time_average(k3, k3.m, c, t)

    richardson = 2.0 * estimate(1e-3) - estimate(2e-3)
    assert richardson == pytest.approx(energy(k3, M), abs=1e-6)
    # without extrapolation the bias is visibly larger than the target
    assert abs(estimate(2e-3) - energy(k3, M)) > 1e-5


def test_dyadic_times_cover_the_horizon():
    ts = dyadic_times(2.0, 8)
    assert np.allclose(ts, np.linspace(0.25, 2.0, 8))
    assert len(dyadic_times(1.0, 64)) == 64


def test_markov_af_algebra(t2, star):
    u = catalog.chain_function(t2, "indicator-last")
    M, _ = fukushima(t2, u)
    zero = M - M
    assert zero.eval(star, 1.0) == 0.0
    twice = M + M
    assert twice.eval(star, 0.7) == pytest.approx(2 * M.eval(star, 0.7), abs=1e-15)
    assert (-M).eval(star, 0.7) == pytest.approx(-M.eval(star, 0.7), abs=1e-15)
    assert np.allclose(twice.jump_matrix(), 2 * M.jump_matrix())


def test_levy_system_statistic(t2):
    phi = catalog.chain_jump_function(t2, "one-way")
    rep = levy_system_check(t2, phi, "1", 1.0, 4000, master=0x1E17)
    assert set(rep) >= {"z", "ok", "mean", "se", "n_paths"}
    assert abs(rep["z"]) < 3.5
    assert rep["ok"]


def test_revuz_monte_carlo_statistic(t2):
    a = np.array([1.0, 1.0])
    f = catalog.chain_function(t2, "affine")
    rep = revuz_mc_check(t2, a, f, 0.5, 4000, master=0xAC37)
    assert abs(rep["z"]) < 3.5
    assert rep["ok"]
