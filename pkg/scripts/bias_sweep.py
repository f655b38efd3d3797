"""Welfare along maximum-penalty redistribution without budget.

Starting from A-prices well below B-prices, the penalty ``rho`` moves both
prices towards each other, ``(p_a0 + rho, p_b0 - rho)``. Welfare bottoms out
where the two prices meet and the incentive bias vanishes.
"""

import argparse
import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from coupled_netgame import GameParams
from coupled_netgame.sweep import redistribution_bias_sweep, synthetic_concession_network


@dataclass(frozen=True)
class BiasConfig:
    beta: float = 0.2
    delta: float = 0.1
    mu: float = 0.01
    p_b0: float = 1056.0
    p_a0_ratio: float = 0.3
    points: int = 71
    n_components: int = 10
    n_nodes: int = 191
    network_seed: int = 0


def run(cfg: BiasConfig, out: Path):
    g = synthetic_concession_network(cfg.n_components, cfg.n_nodes, seed=cfg.network_seed)
    params = GameParams(cfg.beta, cfg.delta, cfg.mu)
    p_b0 = np.full(g.n, cfg.p_b0)
    p_a0 = cfg.p_a0_ratio * p_b0
    rhos = np.linspace(0.0, cfg.p_b0 - cfg.p_a0_ratio * cfg.p_b0, cfg.points)
    rows = redistribution_bias_sweep(g, params, p_a0, p_b0, rhos)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("rho", "p_a", "p_b", "welfare", "agg_xb"))
        for rho, wel, agg in rows:
            w.writerow((repr(rho), repr(cfg.p_a0_ratio * cfg.p_b0 + rho), repr(cfg.p_b0 - rho), repr(wel), repr(agg)))
    k = int(np.argmin([r[1] for r in rows]))
    rho = rows[k][0]
    print(f"{out}: minimum welfare at rho={rho:.3f}, pA={cfg.p_a0_ratio * cfg.p_b0 + rho:.3f}, pB={cfg.p_b0 - rho:.3f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/bias_sweep.csv")
    ap.add_argument("--points", type=int, default=71)
    args = ap.parse_args()
    run(BiasConfig(points=args.points), Path(args.out))


if __name__ == "__main__":
    main()
