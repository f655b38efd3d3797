"""Policy comparisons across a range of network-average maximum prices.

All three problems get the same network-average raise at each sweep point:
``mean(p_max - p_a0) = mean(rho_max + b) = pbar_max - mean(p_a0)``.
"""

from __future__ import annotations

import numpy as np

from .componentwise import solve_ptilde
from .errors import ConfigError
from .game import GameParams, evaluate_policies, leontief_bundle
from .network import Network, connected_components, load_network
from .problems import ProblemP, ProblemPR, ProblemPTilde
from .redistribution import max_redistribution_policy, solve_pr
from .solver_p import solve_p


def synthetic_concession_network(n_components: int = 10, n_nodes: int = 191, k: int = 2, seed: int = 0) -> Network:
    """Sparse planar-ish network of ``n_components`` connected blocks.

    Each block scatters its agents in the unit square, links every agent to
    its ``k`` nearest neighbours and then joins any leftover fragments
    through their closest pair, mimicking adjacency between land parcels.
    """
    if n_nodes < 2 * n_components:
        raise ValueError("need at least two agents per component")
    rng = np.random.default_rng(seed)
    extra = rng.multinomial(n_nodes - 2 * n_components, np.ones(n_components) / n_components)
    sizes = 2 + extra
    edges = []
    offset = 0
    for size in sizes:
        pts = rng.random((size, 2))
        dist = np.linalg.norm(pts[:, None] - pts[None], axis=2)
        np.fill_diagonal(dist, np.inf)
        local = set()
        for i in range(size):
            for j in np.argsort(dist[i])[: min(k, size - 1)]:
                local.add((min(i, int(j)), max(i, int(j))))
        sub = load_network(local, size)
        comps = connected_components(sub).components
        while len(comps) > 1:
            a, rest = list(comps[0]), [v for c in comps[1:] for v in c]
            block = dist[np.ix_(a, rest)]
            i, j = np.unravel_index(np.argmin(block), block.shape)
            u, v = a[i], rest[j]
            local.add((min(u, v), max(u, v)))
            comps = connected_components(load_network(local, size)).components
        edges.extend((offset + i, offset + j) for i, j in local)
        offset += size
    return load_network(sorted(edges), n_nodes)


def heterogeneous_bounds(p_a0, raise_mean: float, jitter: float, rng) -> np.ndarray:
    """Per-agent upper bounds whose raises have mean ``raise_mean``.

    Each raise is ``raise_mean * (1 + jitter * z)`` with ``z`` uniform on
    [-1, 1], then rescaled so the mean matches exactly.
    """
    if not 0.0 <= jitter < 1.0:
        raise ConfigError("jitter must lie in [0, 1)")
    p_a0 = np.asarray(p_a0, dtype=float)
    z = rng.uniform(-1.0, 1.0, size=len(p_a0))
    raises = 1.0 + jitter * z
    raises *= raise_mean / raises.mean() if raise_mean > 0 else 0.0
    return p_a0 + raises


def tau_at_price(g: Network, params: GameParams, p_b0, ratio: float) -> float:
    """Aggregate B-effort when every A-price is ``ratio`` times the B-price."""
    bundle = leontief_bundle(g, params, p_b0)
    p_b0 = np.asarray(p_b0, dtype=float)
    _, agg, _ = evaluate_policies(bundle, ratio * p_b0, p_b0)
    return float(agg[0])


def _pct(new, old):
    return 100.0 * (new - old) / abs(old) if old != 0 else 0.0


def run_sweep(
    g: Network,
    params: GameParams,
    p_a0,
    p_b0,
    tau_b: float,
    pbar_ratios,
    problems=("p", "ptilde", "pr"),
    rho_max_ratio: float | None = None,
    jitter: float = 0.5,
    seed: int = 0,
    scenario_id: str = "sweep",
    bruteforce_limit: int = 15,
):
    """One result row per problem and sweep point.

    ``pbar_ratios`` are network-average maximum A-prices as multiples of the
    mean B-price. Redistribution uses no budget; its penalty equals the
    matched raise unless ``rho_max_ratio`` fixes it as a multiple of the
    B-price. Points where the matched raise would be negative are skipped.
    """
    p_a0 = np.asarray(p_a0, dtype=float)
    p_b0 = np.asarray(p_b0, dtype=float)
    n = len(p_a0)
    bundle = leontief_bundle(g, params, p_b0)
    w0, agg0, _ = evaluate_policies(bundle, p_a0, p_b0)
    w0, agg0 = float(w0[0]), float(agg0[0])
    scale = float(p_b0.mean())
    rows = []
    for k, ratio in enumerate(np.asarray(pbar_ratios, dtype=float)):
        raise_mean = ratio * scale - float(p_a0.mean())
        if raise_mean < -1e-12 * scale:
            continue
        raise_mean = max(raise_mean, 0.0)
        for prob in problems:
            if prob == "p":
                # Same seed at every point: only the scale of the raises moves.
                rng = np.random.default_rng(seed)
                p_max = heterogeneous_bounds(p_a0, raise_mean, jitter, rng)
                res = solve_p(g, params, ProblemP(p_a0, p_max, p_b0, tau_b), bruteforce_limit=bruteforce_limit, bundle=bundle)
            elif prob == "ptilde":
                p_max = p_a0 + raise_mean
                res, _ = solve_ptilde(g, params, ProblemPTilde(p_a0, p_max, p_b0, tau_b), bundle=bundle)
            else:
                rho = np.full(n, raise_mean) if rho_max_ratio is None else rho_max_ratio * p_b0
                rho = np.minimum(rho, p_b0)
                res = solve_pr(g, params, ProblemPR(p_a0, p_b0, rho, np.zeros(n), tau_b), bundle=bundle)
            rows.append({
                "scenario_id": scenario_id,
                "problem": prob,
                "pbar_max": float(ratio),
                "welfare": res.welfare,
                "welfare_gain_pct": _pct(res.welfare, w0),
                "agg_xb": res.agg_unsustainable,
                "agg_xb_reduction_pct": 0.0 - _pct(res.agg_unsustainable, agg0),
                "certificate": res.certificate.value,
            })
    return rows


def redistribution_bias_sweep(g: Network, params: GameParams, p_a0, p_b0, rho_values):
    """Welfare along the maximum-penalty policy ``(p_a0 + rho, p_b0 - rho)`` without budget."""
    p_a0 = np.asarray(p_a0, dtype=float)
    p_b0 = np.asarray(p_b0, dtype=float)
    bundle = leontief_bundle(g, params, p_b0)
    out = []
    for rho in rho_values:
        pr = ProblemPR(p_a0, p_b0, np.full(len(p_a0), rho), np.zeros(len(p_a0)), np.inf)
        pa, pb = max_redistribution_policy(pr)
        w, agg, _ = evaluate_policies(bundle, pa, pb)
        out.append((float(rho), float(w[0]), float(agg[0])))
    return out
