import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coupled_netgame import (
    Branch,
    EffortProfile,
    GameParams,
    PriceProfile,
    aggregate_unsustainable,
    centrality,
    check_assumption1,
    check_assumption2prime,
    interior_equilibrium,
    k_zero,
    leontief_bundle,
    load_network,
    nonneg_equilibrium,
    utilities,
    welfare_closed_form,
)
from coupled_netgame.game import (
    equilibrium_utilities_closed,
    greedy_minimal_set,
    hatted_equilibrium,
    kkt_residual,
    price_limit,
    quadratic_welfare,
    welfare_gradient,
)

from instances import interior_prices, random_connected_graph, random_splus_params

seeds = st.integers(0, 2**32 - 1)


def dense_inverses(adj, p):
    n = adj.shape[0]
    eye = np.eye(n)
    mp = np.linalg.inv((1 + p.beta) * eye - (p.delta + p.mu) * adj)
    mm = np.linalg.inv((1 - p.beta) * eye - (p.delta - p.mu) * adj)
    return mp, mm


def test_assumption1_examples(path2, k4, std_params):
    ok, margin = check_assumption1(path2, std_params)
    assert ok and margin == pytest.approx(0.1125, abs=1e-9)
    ok, margin = check_assumption1(load_network([], 3), GameParams(0.5, 0.4, 0.1))
    assert ok and margin == 0.0
    ok, margin = check_assumption1(k4, GameParams(0.2, 0.5, 0.01))
    # Both terms of the bound matter: 0.51/1.2*3 = 1.275 and 0.49/0.8*3 = 1.8375.
    assert not ok and margin == pytest.approx(1.8375, abs=1e-9)


def test_assumption2prime_examples():
    assert check_assumption2prime(GameParams(0.2, 0.1, 0.01))
    assert not check_assumption2prime(GameParams(0.2, 0.1, 0.02))
    assert check_assumption2prime(GameParams(0.4, 0.18, 0.05))


@pytest.mark.parametrize("args", [(0.0, 0.1, 0.01), (1.0, 0.1, 0.01), (0.2, 0.0, 0.01), (0.2, 0.1, 0.0)])
def test_params_validated(args):
    with pytest.raises(ValueError):
        GameParams(*args)


def test_bundle_empty_graph(std_params):
    b = leontief_bundle(load_network([], 3), std_params, np.ones(3))
    np.testing.assert_allclose(b.m_plus, np.eye(3) / 1.2, atol=1e-12)
    np.testing.assert_allclose(b.m_minus, np.eye(3) / 0.8, atol=1e-12)
    np.testing.assert_allclose(b.m_delta, np.eye(3) * 0.4 / 0.96, atol=1e-12)
    np.testing.assert_allclose(b.p_lim, 5.0, atol=1e-12)
    np.testing.assert_allclose(centrality(b), 0.41667, atol=1e-5)


def test_bundle_two_path(path2, std_params):
    b = leontief_bundle(path2, std_params, np.ones(2))
    np.testing.assert_allclose(b.m_plus, [[0.84040, 0.07704], [0.07704, 0.84040]], atol=1e-5)
    np.testing.assert_allclose(b.m_minus, [[1.26602, 0.14243], [0.14243, 1.26602]], atol=1e-5)
    np.testing.assert_allclose(b.b_delta, [0.49101, 0.49101], atol=1e-5)
    mp, mm = dense_inverses(path2.adjacency, std_params)
    np.testing.assert_allclose(b.m_plus, mp, rtol=1e-12)
    np.testing.assert_allclose(b.m_minus, mm, rtol=1e-12)


def test_bundle_rejects_assumption_violation(k4):
    from coupled_netgame import AssumptionViolationError
    with pytest.raises(AssumptionViolationError):
        leontief_bundle(k4, GameParams(0.2, 0.5, 0.01), np.ones(4))


def test_star_center_most_central(std_params):
    g = load_network([(0, 1), (0, 2)], 3)
    b = centrality(leontief_bundle(g, std_params, np.ones(3)))
    assert b[0] > b[1] and b[0] > b[2]
    mp, mm = dense_inverses(g.adjacency, std_params)
    np.testing.assert_allclose(b, (mm - mp).sum(axis=1), rtol=1e-12)


def test_interior_examples(single, path2, std_params):
    b1 = leontief_bundle(single, std_params, [1.0])
    eff, ok = interior_equilibrium(b1, PriceProfile([1.0], [1.0]))
    assert ok
    assert eff.x_a[0] == pytest.approx(0.8 / 0.96, abs=1e-12)
    assert eff.x_b[0] == pytest.approx(0.8 / 0.96, abs=1e-12)
    eff, ok = interior_equilibrium(b1, PriceProfile([6.0], [1.0]))
    assert not ok and eff.x_b[0] == pytest.approx(-0.2 / 0.96, abs=1e-12)
    b2 = leontief_bundle(path2, std_params, np.ones(2))
    eff, ok = interior_equilibrium(b2, PriceProfile(np.ones(2), np.ones(2)))
    assert ok
    np.testing.assert_allclose(eff.x_a, 1.31 / 1.4279, atol=1e-12)
    np.testing.assert_allclose(eff.x_b, 1.31 / 1.4279, atol=1e-12)


def test_nonneg_all_b_zero(single, std_params):
    eff, cert = nonneg_equilibrium(single, std_params, PriceProfile([6.0], [1.0]))
    assert cert.branch is Branch.ALL_B_ZERO
    assert eff.x_a[0] == pytest.approx(6.0) and eff.x_b[0] == 0.0


def test_nonneg_mixed_minimal_set(path2, std_params):
    prices = PriceProfile([6.0, 1.0], [1.0, 1.0])
    eff, cert = nonneg_equilibrium(path2, std_params, prices)
    assert cert.branch is Branch.MIXED_MINIMAL_SET
    assert cert.active_set == (0,)
    assert eff.x_b[0] == 0.0
    assert eff.is_nonnegative(0.0)
    assert cert.kkt_residual < 1e-8
    assert kkt_residual(path2.adjacency, std_params, prices, eff) < 1e-8


def test_nonneg_general_active_set(single):
    # A-price far below the B-price drives A-effort to zero as well.
    params = GameParams(0.49, 0.1, 0.01)
    eff, cert = nonneg_equilibrium(single, params, PriceProfile([0.01], [1.0]))
    assert cert.branch is Branch.GENERAL_ACTIVE_SET
    assert eff.x_a[0] == 0.0 and eff.x_b[0] == pytest.approx(1.0)


def test_nonneg_warns_on_nonpositive_reference(single, std_params):
    with pytest.warns(RuntimeWarning):
        nonneg_equilibrium(single, std_params, PriceProfile([1.0], [1.0]), x_ref=EffortProfile([0.0], [1.0]))


def test_utilities_examples(single, path2, std_params):
    x = 0.8 / 0.96
    u = utilities(single, std_params, PriceProfile([1.0], [1.0]), EffortProfile([x], [x]))
    assert u[0] == pytest.approx(0.833333, abs=1e-6)
    zero = utilities(path2, std_params, PriceProfile([3.0, 1.0], [2.0, 1.0]), EffortProfile([0, 0], [0, 0]))
    np.testing.assert_array_equal(zero, 0.0)
    prices = PriceProfile(np.ones(2), np.ones(2))
    eff, _ = nonneg_equilibrium(path2, std_params, prices)
    u = utilities(path2, std_params, prices, eff)
    np.testing.assert_allclose(u, 1.2 * (1.31 / 1.4279) ** 2, rtol=1e-12)
    np.testing.assert_allclose(u, 1.010016, atol=1e-6)


def test_welfare_examples(single, path2, std_params):
    b1 = leontief_bundle(single, std_params, [1.0])
    w = welfare_closed_form(b1, [1.0])
    assert w.closed_form and w.value == pytest.approx(0.833333, abs=1e-6)
    q, v = 2 / 0.96, 2 * 0.4 / 0.96
    assert w.value == pytest.approx(0.25 * (q - v + q), rel=1e-12)
    b2 = leontief_bundle(path2, std_params, np.ones(2))
    w = welfare_closed_form(b2, np.ones(2))
    assert w.value == pytest.approx(2 * 1.2 * (1.31 / 1.4279) ** 2, rel=1e-12)
    assert w.value == pytest.approx(2.02003, abs=1e-5)
    b0 = leontief_bundle(path2, std_params, np.zeros(2))
    assert welfare_closed_form(b0, np.zeros(2)).value == 0.0


def test_welfare_falls_back_outside_interior(single, std_params):
    b1 = leontief_bundle(single, std_params, [1.0])
    w = welfare_closed_form(b1, [6.0])
    assert not w.closed_form
    assert w.value == pytest.approx(0.5 * 36.0)


def test_aggregate_examples():
    assert aggregate_unsustainable(EffortProfile([1, 2], [0, 0])) == 0.0
    assert aggregate_unsustainable(EffortProfile([1, 1], [0.91743, 0.91743])) == pytest.approx(1.83486)
    assert aggregate_unsustainable(EffortProfile([1], [0.83333])) == pytest.approx(0.83333)


def test_k_zero_examples(single, path2, std_params):
    b1 = leontief_bundle(single, std_params, [1.0])
    assert k_zero(b1, [1.0], 0.0) == pytest.approx(2 / 0.96, rel=1e-12)
    assert k_zero(b1, [1.0], 1 / 0.96) == pytest.approx(0.0, abs=1e-12)
    b2 = leontief_bundle(path2, std_params, np.ones(2))
    assert k_zero(b2, np.ones(2), 1.0) == pytest.approx(2.65176, abs=1e-5)


def test_price_limit_zeroes_b_effort(path3, std_params):
    pb = np.array([1.0, 1.5, 0.7])
    b = leontief_bundle(path3, std_params, pb)
    eff, _ = interior_equilibrium(b, PriceProfile(price_limit(b, pb), pb), tol=1e-9)
    np.testing.assert_allclose(eff.x_b, 0.0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(1, 8))
def test_interior_utilities_match_closed_form(seed, n):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, n)
    params = random_splus_params(rng, g)
    pa, pb = interior_prices(rng, n)
    b = leontief_bundle(g, params, pb)
    prices = PriceProfile(pa, pb)
    eff, ok = interior_equilibrium(b, prices)
    if not ok:
        return
    np.testing.assert_allclose(
        utilities(g, params, prices, eff), equilibrium_utilities_closed(params, eff), rtol=1e-10, atol=1e-12
    )
    assert quadratic_welfare(b, pa) == pytest.approx(utilities(g, params, prices, eff).sum(), rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(1, 8))
def test_nonneg_equilibrium_satisfies_kkt(seed, n):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, n)
    params = random_splus_params(rng, g)
    pa = rng.uniform(0.5, 8.0, n)
    pb = rng.uniform(0.5, 2.0, n)
    prices = PriceProfile(pa, pb)
    eff, cert = nonneg_equilibrium(g, params, prices)
    assert eff.is_nonnegative(0.0)
    assert kkt_residual(g.adjacency, params, prices, eff) < 1e-8 * max(1.0, pa.max())


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 8))
def test_hatted_efforts_zero_on_set(seed, n):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, n)
    params = random_splus_params(rng, g)
    pb = rng.uniform(0.5, 2.0, n)
    b = leontief_bundle(g, params, pb)
    s_set = sorted(rng.choice(n, size=int(rng.integers(1, n)), replace=False).tolist())
    eff = hatted_equilibrium(b, PriceProfile(rng.uniform(0.5, 3.0, n), pb), s_set)
    np.testing.assert_allclose(eff.x_b[s_set], 0.0, atol=1e-10)


def test_greedy_minimal_set_on_interior_is_empty(path2, std_params):
    b = leontief_bundle(path2, std_params, np.ones(2))
    s_set, _ = greedy_minimal_set(b, PriceProfile(np.ones(2), np.ones(2)))
    assert s_set == ()


def test_welfare_gradient_zero_direction(path2, std_params):
    b = leontief_bundle(path2, std_params, np.ones(2))
    p = np.array([1.1, 0.9])
    h = 1e-6
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fd = (quadratic_welfare(b, p + e) - quadratic_welfare(b, p - e)) / (2 * h)
        assert fd == pytest.approx(welfare_gradient(b, p)[j], rel=1e-7)
