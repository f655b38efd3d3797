"""Welfare gain and unsustainable-effort reduction against the average maximum price.

Runs the three policy problems on a seeded synthetic network of ten
connected blocks for two pre-intervention price levels and writes one CSV
per level, ready for plotting.
"""

import argparse
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from coupled_netgame import GameParams
from coupled_netgame.scenario import write_results
from coupled_netgame.sweep import run_sweep, synthetic_concession_network, tau_at_price


@dataclass(frozen=True)
class TrendConfig:
    beta: float = 0.2
    delta: float = 0.1
    mu: float = 0.01
    p_b0: float = 1056.0
    p_a0_ratios: tuple = (0.97, 1.05)
    tau_ratio: float = 0.98
    start: float = 1.0
    stop: float = 1.2
    steps: int = 21
    rho_max_ratio: float = 0.05
    jitter: float = 0.5
    n_components: int = 10
    n_nodes: int = 191
    network_seed: int = 0
    seed: int = 0


def run(cfg: TrendConfig, out_dir: Path):
    g = synthetic_concession_network(cfg.n_components, cfg.n_nodes, seed=cfg.network_seed)
    params = GameParams(cfg.beta, cfg.delta, cfg.mu)
    p_b0 = np.full(g.n, cfg.p_b0)
    tau = tau_at_price(g, params, p_b0, cfg.tau_ratio)
    ratios = np.linspace(cfg.start, cfg.stop, cfg.steps)
    out_dir.mkdir(parents=True, exist_ok=True)
    for r in cfg.p_a0_ratios:
        rows = run_sweep(g, params, r * p_b0, p_b0, tau, ratios, rho_max_ratio=cfg.rho_max_ratio,
                         jitter=cfg.jitter, seed=cfg.seed, scenario_id=f"pa0_{r:.2f}")
        path = out_dir / f"trend_pa0_{r:.2f}.csv"
        write_results(rows, path)
        print(f"{path}: {len(rows)} rows")
        for prob in ("p", "ptilde", "pr"):
            sel = [row for row in rows if row["problem"] == prob]
            if sel:
                print(f"  {prob:6s} gain {sel[0]['welfare_gain_pct']:8.3f}% .. {sel[-1]['welfare_gain_pct']:8.3f}%"
                      f"  reduction {sel[0]['agg_xb_reduction_pct']:6.3f}% .. {sel[-1]['agg_xb_reduction_pct']:6.3f}%")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--steps", type=int, default=21)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--network-seed", type=int, default=0)
    args = ap.parse_args()
    cfg = TrendConfig(steps=args.steps, seed=args.seed, network_seed=args.network_seed)
    t0 = time.perf_counter()
    run(cfg, Path(args.out_dir))
    print(f"done in {time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    main()
