"""Scenario configuration, market price construction and result files."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError
from .game import GameParams

FFB_PER_CSPO = 5.0
RESULT_COLUMNS = (
    "scenario_id", "problem", "pbar_max", "welfare", "welfare_gain_pct",
    "agg_xb", "agg_xb_reduction_pct", "certificate",
)
PROBLEMS = ("p", "pr", "ptilde")


@dataclass(frozen=True)
class PriceComponents:
    """Market price ingredients, all per metric ton of oil."""

    base_price: float
    premium_rate: float = 0.0
    cert_cost: float = 0.0
    op_cost: float = 0.0
    rep_cost: float = 0.0

    def __post_init__(self):
        for name in ("base_price", "premium_rate", "cert_cost", "op_cost", "rep_cost"):
            if np.any(np.asarray(getattr(self, name)) < 0):
                raise ConfigError(f"price component '{name}' must be non-negative")


def cert_cost_from_ffb(cost_per_ffb_ton: float) -> float:
    """Certification cost per ton of oil from the cost per ton of fruit bunches."""
    return FFB_PER_CSPO * cost_per_ffb_ton


def price_from_components(pc: PriceComponents):
    """``pA = (1 + premium) base - cert``, ``pB = base - op - rep``; arrays broadcast."""
    base = np.asarray(pc.base_price, dtype=float)
    p_a = (1.0 + np.asarray(pc.premium_rate, dtype=float)) * base - np.asarray(pc.cert_cost, dtype=float)
    p_b = base - np.asarray(pc.op_cost, dtype=float) - np.asarray(pc.rep_cost, dtype=float)
    if np.any(p_a < 0):
        raise ConfigError("sustainable price is negative: 'cert_cost' exceeds the premium-adjusted base price")
    if np.any(p_b < 0):
        raise ConfigError("unsustainable price is negative: 'op_cost' plus 'rep_cost' exceed the base price")
    if p_a.ndim == 0:
        return float(p_a), float(p_b)
    return p_a, p_b


@dataclass(frozen=True)
class SweepSpec:
    start: float
    stop: float
    steps: int
    problems: tuple = PROBLEMS
    rho_max_ratio: float | None = None
    jitter: float = 0.5
    tau_b: Any = None

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps) if self.steps > 0 else np.empty(0)


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: str
    network: dict
    params: GameParams
    prices: dict
    problem: dict | None = None
    sweep: SweepSpec | None = None
    output: str | None = None
    base_dir: str = "."

    def to_dict(self) -> dict:
        out = {
            "scenario_id": self.scenario_id,
            "network": self.network,
            "params": asdict(self.params),
            "prices": self.prices,
        }
        if self.problem is not None:
            out["problem"] = self.problem
        if self.sweep is not None:
            sw = asdict(self.sweep)
            sw["problems"] = list(sw["problems"])
            out["sweep"] = sw
        if self.output is not None:
            out["output"] = self.output
        return out


def _need(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise ConfigError(f"missing field '{where}{key}'")
    return d[key]


def _number(x, where):
    try:
        return float(x)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{where}' must be a number, got {x!r}") from None


def parse_scenario(data: dict, base_dir: str = ".") -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a JSON object")
    sid = str(data.get("scenario_id", "scenario"))
    net = _need(data, "network", "")
    if not isinstance(net, dict) or not ({"path"} <= set(net) or {"synthetic"} <= set(net)):
        raise ConfigError("field 'network' needs either 'path' or 'synthetic'")
    pr = _need(data, "params", "")
    try:
        params = GameParams(*(_number(_need(pr, k, "params."), f"params.{k}") for k in ("beta", "delta", "mu")))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"field 'params': {exc}") from None
    prices = _need(data, "prices", "")
    explicit = isinstance(prices, dict) and {"p_a", "p_b"} <= set(prices)
    from_parts = isinstance(prices, dict) and "components" in prices
    if explicit == from_parts:
        raise ConfigError("field 'prices' needs exactly one of {'p_a','p_b'} or 'components'")
    if from_parts:
        _need(prices["components"], "base_price", "prices.components.")
    problem = data.get("problem")
    if problem is not None:
        kind = _need(problem, "kind", "problem.")
        if kind not in PROBLEMS:
            raise ConfigError(f"field 'problem.kind' must be one of {PROBLEMS}, got {kind!r}")
        _need(problem, "tau_b", "problem.")
        if kind in ("p", "ptilde"):
            _need(problem, "p_max", "problem.")
        else:
            _need(problem, "rho_max", "problem.")
    sweep = None
    if "sweep" in data:
        sw = data["sweep"]
        steps = _need(sw, "steps", "sweep.")
        if not isinstance(steps, int) or steps < 0:
            raise ConfigError("field 'sweep.steps' must be a non-negative integer")
        probs = tuple(sw.get("problems", PROBLEMS))
        if any(p not in PROBLEMS for p in probs):
            raise ConfigError(f"field 'sweep.problems' entries must be among {PROBLEMS}")
        rho = sw.get("rho_max_ratio")
        sweep = SweepSpec(
            _number(_need(sw, "start", "sweep."), "sweep.start"),
            _number(_need(sw, "stop", "sweep."), "sweep.stop"),
            steps, probs, None if rho is None else _number(rho, "sweep.rho_max_ratio"),
            _number(sw.get("jitter", 0.5), "sweep.jitter"),
            sw.get("tau_b"),
        )
    return ScenarioConfig(sid, net, params, prices, problem, sweep, data.get("output"), base_dir)


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_scenario(data, str(path.parent))


def save_scenario(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))


def broadcast(x, n: int, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        return np.full(n, float(a))
    if a.shape != (n,):
        raise ConfigError(f"field '{name}' must be a scalar or have length {n}")
    return a


def scenario_prices(cfg: ScenarioConfig, n: int):
    """Pre-intervention ``(p_a0, p_b0)`` vectors for ``n`` agents."""
    pr = cfg.prices
    if "components" in pr:
        c = dict(pr["components"])
        if "cert_cost_ffb" in c:
            c["cert_cost"] = cert_cost_from_ffb(c.pop("cert_cost_ffb"))
        unknown = set(c) - {"base_price", "premium_rate", "cert_cost", "op_cost", "rep_cost"}
        if unknown:
            raise ConfigError(f"unknown price component field(s): {sorted(unknown)}")
        pa, pb = price_from_components(PriceComponents(**c))
        return broadcast(pa, n, "prices.components"), broadcast(pb, n, "prices.components")
    return broadcast(pr["p_a"], n, "prices.p_a"), broadcast(pr["p_b"], n, "prices.p_b")


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_results(records, path) -> None:
    """Write result rows (dicts keyed by ``RESULT_COLUMNS``) as CSV, sorted by sweep value."""
    rows = sorted(records, key=lambda r: (float(r["pbar_max"]), str(r["problem"])))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in rows:
            missing = [c for c in RESULT_COLUMNS if c not in r]
            if missing:
                raise ConfigError(f"result record missing field(s) {missing}")
            w.writerow([_fmt(r[c]) for c in RESULT_COLUMNS])


def read_results(path) -> list[dict[str, Any]]:
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            for k in ("pbar_max", "welfare", "welfare_gain_pct", "agg_xb", "agg_xb_reduction_pct"):
                row[k] = float(row[k])
            out.append(row)
    return out
