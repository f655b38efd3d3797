import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coupled_netgame import ConfigError, GameParams, load_network
from coupled_netgame.scenario import (
    RESULT_COLUMNS,
    PriceComponents,
    cert_cost_from_ffb,
    load_scenario,
    parse_scenario,
    price_from_components,
    read_results,
    save_scenario,
    scenario_prices,
    write_results,
)
from coupled_netgame.sweep import run_sweep

BASE = {
    "scenario_id": "fixture",
    "network": {"path": "net.csv"},
    "params": {"beta": 0.2, "delta": 0.1, "mu": 0.01},
    "prices": {"p_a": 1.0, "p_b": 1.2},
    "problem": {"kind": "p", "p_max": 1.1, "tau_b": 5.0},
    "sweep": {"start": 1.0, "stop": 1.2, "steps": 3, "problems": ["p", "pr"], "jitter": 0.25},
    "output": "out.csv",
}


def test_worst_case_market_prices():
    pa, pb = price_from_components(PriceComponents(1056, 0.002, cert_cost_from_ffb(7)))
    assert pa == pytest.approx(1023.112, abs=1e-9)
    assert pb == 1056
    assert pa / pb == pytest.approx(0.9689, abs=1e-4)


def test_best_case_market_prices():
    pa, pb = price_from_components(PriceComponents(1056, 0.052, 5))
    assert pa == pytest.approx(1105.912, abs=1e-9)
    assert pa / pb == pytest.approx(1.0473, abs=1e-4)


def test_no_premium_no_costs():
    assert price_from_components(PriceComponents(800.0)) == (800.0, 800.0)


def test_ffb_conversion():
    assert cert_cost_from_ffb(7) == 35.0


def test_negative_components_rejected():
    with pytest.raises(ConfigError, match="premium_rate"):
        PriceComponents(1.0, premium_rate=-0.1)
    with pytest.raises(ConfigError, match="cert_cost"):
        price_from_components(PriceComponents(10.0, cert_cost=20.0))
    with pytest.raises(ConfigError, match="op_cost"):
        price_from_components(PriceComponents(10.0, op_cost=6.0, rep_cost=6.0))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_vectorized_matches_scalar(seed, n):
    rng = np.random.default_rng(seed)
    base = rng.uniform(900, 1100, n)
    eta = rng.uniform(0, 0.05, n)
    cc, op, rep = rng.uniform(0, 40, (3, n))
    pa, pb = price_from_components(PriceComponents(base, eta, cc, op, rep))
    for i in range(n):
        sa, sb = price_from_components(PriceComponents(base[i], eta[i], cc[i], op[i], rep[i]))
        assert pa[i] == sa and pb[i] == sb


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 0.1), st.floats(0, 50), st.floats(0, 50))
def test_affine_in_each_component(eta, c1, c2):
    def pa(c):
        return price_from_components(PriceComponents(1000.0, eta, c))[0]
    mid = pa(0.5 * (c1 + c2))
    assert mid == pytest.approx(0.5 * (pa(c1) + pa(c2)), abs=1e-9)


def test_round_trip(tmp_path):
    cfg = parse_scenario(BASE, str(tmp_path))
    path = tmp_path / "cfg.json"
    save_scenario(cfg, path)
    again = load_scenario(path)
    assert again == cfg
    assert json.loads(path.read_text()) == json.loads(json.dumps(cfg.to_dict()))


def test_components_source(tmp_path):
    data = dict(BASE, prices={"components": {"base_price": 1056, "premium_rate": 0.002, "cert_cost_ffb": 7}})
    cfg = parse_scenario(data)
    pa, pb = scenario_prices(cfg, 3)
    np.testing.assert_allclose(pa, 1023.112, atol=1e-9)
    np.testing.assert_array_equal(pb, 1056.0)


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d["problem"].pop("tau_b"), "tau_b"),
    (lambda d: d["problem"].pop("p_max"), "p_max"),
    (lambda d: d["params"].pop("delta"), "delta"),
    (lambda d: d.pop("network"), "network"),
    (lambda d: d["prices"].update(components={"base_price": 1.0}), "prices"),
    (lambda d: d.update(prices={"p_a": 1.0}), "prices"),
    (lambda d: d["problem"].update(kind="q"), "kind"),
    (lambda d: d["sweep"].update(steps=-1), "steps"),
    (lambda d: d["params"].update(beta="x"), "beta"),
    (lambda d: d["params"].update(beta=1.5), "params"),
])
def test_malformed_config_names_field(mutate, field):
    data = json.loads(json.dumps(BASE))
    mutate(data)
    with pytest.raises(ConfigError, match=field):
        parse_scenario(data)


def test_redistribution_needs_penalty_cap():
    data = json.loads(json.dumps(BASE))
    data["problem"] = {"kind": "pr", "tau_b": 1.0}
    with pytest.raises(ConfigError, match="rho_max"):
        parse_scenario(data)


def test_price_vector_length_checked():
    cfg = parse_scenario(dict(BASE, prices={"p_a": [1.0, 2.0], "p_b": 1.0}))
    with pytest.raises(ConfigError, match="length 3"):
        scenario_prices(cfg, 3)


def test_sweep_values():
    cfg = parse_scenario(BASE)
    np.testing.assert_allclose(cfg.sweep.values(), [1.0, 1.1, 1.2])
    assert cfg.sweep.problems == ("p", "pr")
    assert parse_scenario(dict(BASE, sweep={"start": 1, "stop": 2, "steps": 0})).sweep.values().size == 0


def _row(k, prob, rng):
    return {
        "scenario_id": "s", "problem": prob, "pbar_max": 1.0 + 0.1 * k,
        "welfare": float(rng.normal() * 1e6), "welfare_gain_pct": float(rng.normal()),
        "agg_xb": float(rng.random() / 3), "agg_xb_reduction_pct": float(rng.normal()), "certificate": "COR1_IB",
    }


def test_csv_reparses_exactly(tmp_path, rng):
    rows = [_row(k, p, rng) for k in range(4) for p in ("pr", "p")]
    path = tmp_path / "r.csv"
    write_results(rows, path)
    back = read_results(path)
    assert path.read_text().splitlines()[0] == ",".join(RESULT_COLUMNS)
    assert [(r["pbar_max"], r["problem"]) for r in back] == sorted((r["pbar_max"], r["problem"]) for r in rows)
    by_key = {(r["pbar_max"], r["problem"]): r for r in rows}
    for r in back:
        src = by_key[(r["pbar_max"], r["problem"])]
        for c in ("welfare", "welfare_gain_pct", "agg_xb", "agg_xb_reduction_pct"):
            assert r[c] == pytest.approx(src[c], rel=1e-12, abs=1e-12)


def test_csv_missing_field_rejected(tmp_path, rng):
    row = _row(0, "p", rng)
    del row["certificate"]
    with pytest.raises(ConfigError, match="certificate"):
        write_results([row], tmp_path / "r.csv")


def test_three_step_sweep_three_rows(tmp_path):
    g = load_network([(0, 1), (2, 3)], 4)
    cfg = parse_scenario(BASE)
    rows = run_sweep(g, GameParams(0.2, 0.1, 0.01), np.full(4, 0.97), np.ones(4), 10.0, cfg.sweep.values(), problems=("p",))
    assert len(rows) == 3
    write_results(rows, tmp_path / "s.csv")
    assert len(read_results(tmp_path / "s.csv")) == 3
