
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coupled_netgame import (
    Certificate,
    ConfigError,
    GameParams,
    InfeasibleProblemError,
    ProblemP,
    ProblemPTilde,
    component_aggregates,
    leontief_bundle,
    load_network,
    p0_star,
    solve_p0,
    solve_ptilde,
)
from coupled_netgame.oracle import vertex_enumeration_ptilde

from instances import binding_component_problem, random_component_problem

seeds = st.integers(0, 2**32 - 1)
BIG_TAU = 1e6


def test_aggregates_isolated_node(single, std_params):
    agg = component_aggregates(single, std_params, [1.0], [1.0], [1.2])
    assert agg.q[0] == pytest.approx(2 / 0.96, rel=1e-12)
    assert agg.v[0] == pytest.approx(2 * 0.4 / 0.96, rel=1e-12)


def test_aggregates_two_path(path2, std_params):
    agg = component_aggregates(path2, std_params, np.ones(2), np.ones(2), np.full(2, 1.2))
    assert agg.q[0] == pytest.approx(5.19400, abs=1e-5)
    assert agg.v[0] == pytest.approx(2.30788, abs=1e-5)
    assert agg.b_delta[0] == pytest.approx(0.98202, abs=1e-4)
    b = leontief_bundle(path2, std_params, np.ones(2))
    ones = np.ones(2)
    assert agg.q[0] == pytest.approx(1.2 * (b.m_plus @ ones) @ (b.m_plus @ ones) + 0.8 * (b.m_minus @ ones) @ (b.m_minus @ ones))
    assert agg.const[0] == pytest.approx(ones @ b.q_mat @ ones, rel=1e-12)
    assert agg.v[0] == pytest.approx(2 * ones @ b.r_mat @ ones, rel=1e-12)


def test_aggregates_symmetric_rows(std_params):
    agg = component_aggregates(load_network([], 2), std_params, np.ones(2), np.ones(2), np.full(2, 1.1))
    assert agg.c == 2
    for arr in (agg.q, agg.v, agg.b_delta, agg.const):
        assert arr[0] == arr[1]


def test_aggregates_phi_matches_welfare(std_params):
    g = load_network([(0, 1), (2, 3), (3, 4)], 5)
    pb = np.array([1.0, 1.0, 1.1, 1.1, 1.1])
    agg = component_aggregates(g, std_params, pb, pb * 0.95, pb * 1.05)
    p = np.array([0.97, 1.12])
    b = leontief_bundle(g, std_params, pb)
    from coupled_netgame.game import quadratic_welfare
    assert float(np.sum(agg.phi(p))) == pytest.approx(quadratic_welfare(b, agg.expand(p, 5)), rel=1e-12)


def test_aggregates_reject_nonuniform_bounds(path2, std_params):
    with pytest.raises(ConfigError):
        component_aggregates(path2, std_params, np.ones(2), [1.0, 0.9], [1.2, 1.2])


def test_aggregates_warn_nonuniform_b_prices(path2, std_params):
    with pytest.warns(RuntimeWarning):
        component_aggregates(path2, std_params, [1.0, 1.1], np.ones(2), np.full(2, 1.2))


def test_p0_star_examples(path2, single, std_params):
    agg = component_aggregates(path2, std_params, np.ones(2), np.ones(2), np.full(2, 1.2))
    assert agg.threshold()[0] == pytest.approx(2.30788 / 5.194 - 1, abs=1e-4)
    assert p0_star(agg)[0] == 1.2
    params = GameParams(0.49, 0.1, 0.01)
    agg = component_aggregates(single, params, [1.0], [0.01], [0.02])
    assert agg.threshold()[0] == pytest.approx(0.97)
    assert p0_star(agg)[0] == 0.01
    agg = component_aggregates(single, std_params, [1.0], [0.9], [0.9])
    assert p0_star(agg)[0] == 0.9


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 6))
def test_p0_star_without_network_matches_baseline(seed, n):
    rng = np.random.default_rng(seed)
    params = GameParams(rng.uniform(0.05, 0.8), 0.1, 0.001)
    pb = rng.uniform(0.5, 1.5, n)
    pa = pb * rng.uniform(0.2, 1.0, n)
    pmax = pa + rng.uniform(0.0, 1.0, n)
    g = load_network([], n)
    agg = component_aggregates(g, params, pb, pa, pmax)
    base = solve_p0(ProblemP(pa, pmax, pb, BIG_TAU), params)
    np.testing.assert_array_equal(p0_star(agg), base.policy_a)


def test_single_component_slack_tolerance(path2, std_params):
    prob = ProblemPTilde(np.ones(2), np.full(2, 1.2), np.ones(2), BIG_TAU)
    res, relax = solve_ptilde(path2, std_params, prob)
    assert res.certificate is Certificate.COR2_P0STAR and res.optimality_exact
    np.testing.assert_allclose(res.policy_a, [1.2, 1.2])
    assert relax.exact and relax.ell_star is None


def test_two_isolated_nodes_one_raised():
    g = load_network([], 2)
    params = GameParams(0.49, 0.1, 0.01)
    b = leontief_bundle(g, params, np.ones(2))
    k0 = float(b.b_delta @ np.array([0.02, 0.01]))
    tau = 0.5 * (float(np.sum(b.m_sum @ np.ones(2))) - k0)
    prob = ProblemPTilde([0.01, 0.01], [0.02, 0.02], [1.0, 1.0], tau)
    res, relax = solve_ptilde(g, params, prob)
    assert res.certificate is Certificate.THM6_EXACT and relax.exact
    assert sorted(res.policy_a.tolist()) == [0.01, 0.02]
    ref = vertex_enumeration_ptilde(g, params, prob)
    assert res.welfare == pytest.approx(ref.welfare, rel=1e-12)
    assert relax.diagnostics["duality_gap"] == pytest.approx(0.0, abs=1e-12)


def test_binding_tolerance_gives_bound():
    rng = np.random.default_rng(3)
    g, params, (pa, pmax, pb, tau), b = binding_component_problem(rng)
    prob = ProblemPTilde(pa, pmax, pb, tau)
    res, relax = solve_ptilde(g, params, prob, bundle=b)
    ref = vertex_enumeration_ptilde(g, params, prob, bundle=b)
    assert res.certificate is Certificate.THM6_RELAXED and not relax.exact
    assert ref.welfare <= relax.upper_bound + 1e-8
    assert res.welfare <= ref.welfare + 1e-8
    gap = relax.diagnostics["duality_gap"]
    assert gap == pytest.approx(0.0, abs=1e-9 * max(1.0, abs(relax.diagnostics["primal_value"])))


def test_infeasible_and_degenerate(path2, std_params):
    with pytest.raises(InfeasibleProblemError):
        solve_ptilde(path2, std_params, ProblemPTilde(np.ones(2), np.full(2, 1.1), np.ones(2), 0.0))
    agg = component_aggregates(path2, std_params, np.ones(2), np.full(2, 0.1), np.full(2, 0.1))
    on_threshold = agg.v[0] / agg.q[0] - 0.1
    prob = ProblemPTilde(np.full(2, 0.1), np.full(2, on_threshold), np.ones(2), BIG_TAU)
    with pytest.raises(ConfigError, match="perturb"):
        solve_ptilde(path2, std_params, prob)


def check_structure(res, relax, agg_threshold, lo, hi):
    p = res.details["component_prices"]
    raise_ok = hi >= agg_threshold
    assert np.all(p[raise_ok] == hi[raise_ok])
    at_end = np.isclose(p, lo, rtol=0, atol=1e-12) | np.isclose(p, hi, rtol=0, atol=1e-12)
    assert at_end.sum() >= len(p) - 1


@settings(max_examples=60, deadline=None)
@given(seeds, st.booleans())
def test_against_component_enumeration(seed, binding):
    rng = np.random.default_rng(seed)
    make = binding_component_problem if binding else random_component_problem
    g, params, (pa, pmax, pb, tau), b = make(rng)
    prob = ProblemPTilde(pa, pmax, pb, tau)
    try:
        res, relax = solve_ptilde(g, params, prob, bundle=b)
    except ConfigError:
        return
    ref = vertex_enumeration_ptilde(g, params, prob, bundle=b)
    scale = max(1.0, abs(ref.welfare))
    if res.optimality_exact:
        assert res.welfare == pytest.approx(ref.welfare, abs=1e-8 * scale)
        agg = component_aggregates(g, params, pb, pa, pmax)
        check_structure(res, relax, agg.threshold(), agg.p_a0, agg.p_max)
    else:
        assert ref.welfare <= relax.upper_bound + 1e-8 * scale
        again, relax2 = solve_ptilde(g, params, ProblemPTilde(pa, pmax, pb, relax.suggested_tau_b), bundle=b)
        assert again.optimality_exact and relax2.exact
        expected = relax.bar_p.copy()
        j = relax.order[relax.ell_star]
        expected[j] = component_aggregates(g, params, pb, pa, pmax).p_max[j]
        np.testing.assert_allclose(again.details["component_prices"], expected, rtol=0, atol=1e-9)
