import math

import numpy as np
import pytest
import yaml

import revaf
from revaf import catalog
from revaf.chain import (
    BALANCE_RTOL,
    ChainModel,
    ModelError,
    ParseError,
    beurling_deny,
    beurling_deny_energy,
    decay_factors,
    default_horizon,
    dirichlet_energy,
    dirichlet_form_view,
    energy_measure,
    generator_apply,
    neville_at_zero,
    revuz_density,
    revuz_limit_check,
    semigroup,
    semigroup_apply,
    simpson_nodes,
    time_average,
    time_average_exact,
    validate_model,
)


def test_catalog_models_are_valid(t2, k3, ring10):
    for model in (t2, k3, ring10):
        assert validate_model(model) == []
        # reversibility: m(x) q(x,y) == m(y) q(y,x)
        flux = model.m[:, None] * model.rates
        assert np.allclose(flux, flux.T, rtol=BALANCE_RTOL, atol=0.0)


def test_two_state_shape(t2):
    assert t2.n == 2
    assert list(t2.states) == ["1", "2"]
    assert np.array_equal(t2.m, [1.0, 1.0])
    assert t2.rates[0, 1] == 1.0 and t2.rates[1, 0] == 1.0
    assert np.array_equal(t2.kill, [0.0, 0.0])
    assert t2.index("2") == 1
    assert np.array_equal(t2.total_rate, [1.0, 1.0])


def test_three_state_shape(k3):
    assert k3.n == 3
    assert np.array_equal(k3.m, [2.0, 1.0, 1.0])
    assert k3.rates[0, 1] == 1.0 and k3.rates[1, 0] == 2.0
    assert k3.rates[0, 2] == 0.5 and k3.rates[2, 0] == 1.0
    assert np.array_equal(k3.kill, [0.0, 0.5, 0.0])
    assert np.array_equal(k3.total_rate, [1.5, 3.5, 2.0])


def test_generator_values(t2, k3):
    u = catalog.chain_function(t2, "indicator-last")
    assert np.array_equal(generator_apply(t2, u), [1.0, -1.0])
    lin = catalog.chain_function(k3, "linear")
    # kill enters as an extra -kill(x) * u(x) drain
    assert np.array_equal(generator_apply(k3, lin), [2.0, -1.5, -3.0])


def test_generator_kills_constants_only_without_killing(t2, k3):
    ones = np.ones(t2.n)
    assert np.array_equal(generator_apply(t2, ones), [0.0, 0.0])
    assert np.array_equal(generator_apply(k3, np.ones(k3.n)), [0.0, -0.5, 0.0])


def test_energy_values(t2, k3):
    u2 = catalog.chain_function(t2, "indicator-last")
    assert dirichlet_energy(t2, u2, u2) == pytest.approx(1.0, abs=1e-15)
    uk = catalog.chain_function(k3, "indicator-last")
    assert dirichlet_energy(k3, uk, uk) == pytest.approx(2.0, abs=1e-15)


def test_energy_matches_generator_pairing(t2, k3):
    rng = np.random.default_rng(0)
    for model in (t2, k3):
        for _ in range(100):
            u = rng.standard_normal(model.n)
            v = rng.standard_normal(model.n)
            lhs = dirichlet_energy(model, u, v)
            rhs = -float(np.dot(model.m * generator_apply(model, u), v))
            assert lhs == pytest.approx(rhs, abs=1e-12)
            assert lhs == pytest.approx(dirichlet_energy(model, v, u), abs=1e-12)


def test_form_view_matrices(t2):
    view = dirichlet_form_view(t2)
    assert np.allclose(view.energy, view.energy.T)
    assert np.allclose(view.energy_one, view.energy + np.diag(t2.m))
    vals = np.linalg.eigvalsh(view.energy)
    assert np.all(vals >= -1e-12)
    u = np.array([0.2, -1.3])
    assert float(u @ view.energy @ u) == pytest.approx(dirichlet_energy(t2, u, u), abs=1e-12)
    assert np.allclose(view.generator @ u, generator_apply(t2, u))


def test_beurling_deny_split(t2, k3):
    J2, kap2 = beurling_deny(t2)
    assert np.allclose(J2, [[0.0, 0.5], [0.5, 0.0]])
    assert np.array_equal(kap2, [0.0, 0.0])
    J3, kap3 = beurling_deny(k3)
    assert np.allclose(J3, [[0.0, 1.0, 0.5], [1.0, 0.0, 0.5], [0.5, 0.5, 0.0]])
    assert np.array_equal(kap3, [0.0, 0.5, 0.0])
    assert np.allclose(J3, J3.T)


def test_beurling_deny_energy_identity(t2, k3):
    rng = np.random.default_rng(1)
    for model in (t2, k3):
        J, kap = beurling_deny(model)
        for _ in range(50):
            u = rng.standard_normal(model.n)
            v = rng.standard_normal(model.n)
            assert beurling_deny_energy(J, kap, u, v) == pytest.approx(
                dirichlet_energy(model, u, v), abs=1e-12
            )


def test_semigroup_identities(t2, k3):
    for model in (t2, k3):
        assert np.allclose(semigroup(model, 0.0), np.eye(model.n), atol=1e-14)
        P3, P7 = semigroup(model, 0.3), semigroup(model, 0.7)
        assert np.allclose(P3 @ P7, semigroup(model, 1.0), atol=1e-12)
        P = semigroup(model, 0.9)
        assert np.all(P >= -1e-14)
        assert np.all(P.sum(axis=1) <= 1.0 + 1e-12)
        # m-symmetry of the transition kernel
        assert np.allclose(model.m[:, None] * P, (model.m[:, None] * P).T, atol=1e-12)
    # killing actually removes mass
    assert semigroup(k3, 1.0).sum(axis=1).min() < 1.0 - 1e-3


def test_semigroup_closed_form(t2):
    assert semigroup(t2, 1.0)[0, 0] == pytest.approx((1 + math.exp(-2)) / 2, abs=1e-12)
    assert semigroup(t2, 1.0)[0, 1] == pytest.approx((1 - math.exp(-2)) / 2, abs=1e-12)


def test_semigroup_apply_matches_matrix(k3):
    u = catalog.chain_function(k3, "quadratic")
    assert np.allclose(semigroup_apply(k3, 0.8, u), semigroup(k3, 0.8) @ u, atol=1e-13)


def test_simpson_nodes_cover_interval():
    nodes, weights = simpson_nodes(0.7, 65)
    assert len(nodes) == 65 and len(weights) == 65
    assert nodes[0] == 0.0 and nodes[-1] == pytest.approx(0.7, abs=0)
    assert np.all(np.diff(nodes) > 0)
    assert weights.sum() == pytest.approx(0.7, abs=1e-14)
    # quadrature is exact for cubics
    assert float(np.dot(weights, nodes**3)) == pytest.approx(0.7**4 / 4, abs=1e-15)


def test_time_average_matches_exact(t2, k3):
    for model in (t2, k3):
        g = catalog.chain_function(model, "affine")
        for t in (0.1, 0.7, 2.0):
            approx = time_average(model, model.m, g, t)
            exact = time_average_exact(model, model.m, g, t)
            assert approx == pytest.approx(exact, abs=1e-7)
        assert time_average(model, model.m, g, 0.1) == pytest.approx(
            time_average_exact(model, model.m, g, 0.1), abs=1e-12
        )


def test_neville_is_exact_on_polynomials():
    ts = np.array([0.2, 0.1, 0.05])
    values = 3.0 + 2.0 * ts - ts**2
    assert neville_at_zero(ts, values) == pytest.approx(3.0, abs=1e-13)


def test_decay_factors_reads_halving():
    assert decay_factors((0.1, 0.05, 0.025), (4e-3, 2e-3, 1e-3), 1e-13) == [2.0, 2.0]
    # entries at the floor are reported as None rather than a fake rate
    out = decay_factors((0.1, 0.05), (1e-15, 5e-16), 1e-13)
    assert out == [None]


def test_revuz_density_weights(t2, k3):
    a = np.array([1.0, 1.0])
    f = catalog.chain_function(t2, "affine")
    dens = revuz_density(t2, a)
    assert np.array_equal(dens, t2.m * a)
    assert float(np.dot(dens, f)) == pytest.approx(5.0, abs=1e-14)
    assert np.array_equal(revuz_density(k3, np.array([1.0, 2.0, 3.0])), [2.0, 2.0, 3.0])


def test_revuz_limit_small_time(t2, k3):
    rep = revuz_limit_check(t2, np.array([1.0, 1.0]), catalog.chain_function(t2, "affine"))
    assert rep.mu == pytest.approx(5.0, abs=1e-12)
    assert rep.extrapolated_residual <= 1e-12
    rep3 = revuz_limit_check(
        k3, np.array([0.5, 1.0, 0.25]), catalog.chain_function(k3, "quadratic")
    )
    assert rep3.extrapolated_residual <= 1e-6
    assert all(r is not None and 1.9 <= r <= 2.1 for r in rep3.rates)
    # a sharper time ladder drives the extrapolation residual down
    sharp = revuz_limit_check(
        k3, np.array([0.5, 1.0, 0.25]), catalog.chain_function(k3, "quadratic"),
        ts=(2e-3, 1e-3, 5e-4),
    )
    assert sharp.extrapolated_residual <= 1e-8


def test_energy_measure_values(t2, k3):
    u2 = catalog.chain_function(t2, "indicator-last")
    assert np.allclose(energy_measure(t2, u2), [1.0, 1.0])
    uk = catalog.chain_function(k3, "indicator-last")
    assert np.allclose(energy_measure(k3, uk), [1.0, 1.0, 2.0])
    # total mass is twice the form energy
    for model, u in ((t2, u2), (k3, uk)):
        assert energy_measure(model, u).sum() == pytest.approx(
            2.0 * dirichlet_energy(model, u, u), abs=1e-12
        )


def test_default_horizon_scales_with_rates(t2, k3):
    assert default_horizon(t2) == pytest.approx(10.0)
    assert default_horizon(k3) == pytest.approx(5.2976190476190474)


def test_model_roundtrip(t2, tmp_path):
    doc = t2.to_dict()
    again = ChainModel.from_dict(doc)
    assert list(again.states) == list(t2.states)
    assert np.array_equal(again.m, t2.m)
    assert np.array_equal(again.rates, t2.rates)
    assert np.array_equal(again.kill, t2.kill)
    path = tmp_path / "model.yaml"
    path.write_text(yaml.safe_dump(doc))
    from_file = ChainModel.from_file(path)
    assert np.array_equal(from_file.rates, t2.rates)


def test_shipped_model_files_load(t2, k3, ring10):
    for model in (t2, k3, ring10):
        loaded = ChainModel.from_file(revaf.data_file("%s.model.yaml" % model.name))
        assert np.array_equal(loaded.rates, model.rates)
        assert np.array_equal(loaded.m, model.m)


def test_parse_errors():
    with pytest.raises(ParseError):
        ChainModel.from_dict([1, 2])
    with pytest.raises(ParseError):
        ChainModel.from_dict({"m": [1.0]})
    with pytest.raises(ParseError):
        ChainModel.from_dict({"states": ["a", "b"], "m": [1.0], "rates": []})
    with pytest.raises(ParseError):
        ChainModel.from_dict({"states": ["a", "b"], "m": [1, 1], "rates": [["a", "c", 1]]})


def test_model_errors():
    with pytest.raises(ModelError):
        ChainModel.from_dict(
            {"states": ["a", "b"], "m": [1, 1], "rates": [["a", "b", -1], ["b", "a", -1]]}
        )
    with pytest.raises(ModelError):
        ChainModel.from_dict(
            {"states": ["a", "b"], "m": [1, 1], "rates": [["a", "b", 1], ["b", "a", 2]]}
        )
    assert issubclass(ParseError, ValueError)


def test_function_builder_checks_length(t2):
    u = t2.function([0.5, -1.0])
    assert np.array_equal(u, [0.5, -1.0])
    with pytest.raises(ValueError):
        t2.function([1.0])
