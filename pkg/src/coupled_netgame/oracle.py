"""Brute-force reference engines used to cross-check the closed-form solvers.

Nothing here relies on the structural results the solvers exploit; each
routine either iterates the game directly or enumerates candidates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InfeasibleProblemError, NumericalFailureError
from .game import (
    NONNEG_TOL,
    EffortProfile,
    GameParams,
    PriceProfile,
    evaluate_policies,
    hatted_equilibrium,
    interior_equilibrium,
    k_zero,
    leontief_bundle,
)
from .network import Network, connected_components
from .problems import Certificate, PolicyResult, ProblemP, ProblemPR

VERTEX_CAP = 15
SUBSET_CAP = 12


@dataclass(frozen=True)
class IterationTrace:
    iterations: int
    final_residual: float
    converged: bool


def best_response_fixed_point(
    g: Network,
    params: GameParams,
    prices: PriceProfile,
    tol: float = 1e-12,
    cap: int = 100_000,
    damping: float = 1.0,
):
    """Sequential projected best-response iteration started from zero effort.

    Agents revise their A- then B-effort one at a time using the latest
    efforts of everyone else. The game has a strictly concave potential, so
    this coordinate ascent converges; simultaneous updates can oscillate
    when the cross-activity terms are strong. With ``damping < 1`` each
    revision moves only part of the way to the best response.
    """
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    adj = g.adjacency
    b, d, m = params.beta, params.delta, params.mu
    pa, pb = prices.p_a, prices.p_b
    xa = np.zeros(g.n)
    xb = np.zeros(g.n)
    nbrs = [np.flatnonzero(adj[i]) for i in range(g.n)]
    change = np.inf
    for it in range(1, cap + 1):
        change = 0.0
        for i in range(g.n):
            ga, gb = xa[nbrs[i]].sum(), xb[nbrs[i]].sum()
            new = xa[i] + damping * (max(0.0, pa[i] - b * xb[i] + d * ga + m * gb) - xa[i])
            change = max(change, abs(new - xa[i]))
            xa[i] = new
            new = xb[i] + damping * (max(0.0, pb[i] - b * xa[i] + d * gb + m * ga) - xb[i])
            change = max(change, abs(new - xb[i]))
            xb[i] = new
        if not np.isfinite(change):
            break
        if change < tol:
            return EffortProfile(xa, xb), IterationTrace(it, float(change), True)
    return EffortProfile(xa, xb), IterationTrace(cap, float(change), False)


def subset_minimal_s(g: Network, params: GameParams, prices: PriceProfile, bundle=None, tol: float = NONNEG_TOL):
    """Smallest index set whose hatted B-efforts are all non-negative.

    Subsets of the agents with negative interior B-effort are tried in order
    of cardinality, then lexicographically.
    """
    if bundle is None:
        bundle = leontief_bundle(g, params, prices.p_b)
    n = bundle.n
    if n > SUBSET_CAP:
        raise ConfigError(f"exhaustive subset search is capped at n={SUBSET_CAP}, got {n}")
    scale = max(1.0, float(prices.p_a.max()), float(prices.p_b.max()))
    interior, _ = interior_equilibrium(bundle, prices)
    cand = np.flatnonzero(interior.x_b < -tol * scale).tolist()
    for k in range(len(cand) + 1):
        for s_set in itertools.combinations(cand, k):
            eff = hatted_equilibrium(bundle, prices, s_set) if s_set else interior
            if eff.is_nonnegative(tol * scale):
                return tuple(s_set)
    raise NumericalFailureError("no subset of the candidate agents yields non-negative efforts", {"candidates": cand})


def box_halfspace_vertices(lo, hi, normal, rhs):
    """Vertices of ``{lo <= p <= hi, normal'p >= rhs}``.

    These are the box corners satisfying the half-space plus, for every
    corner violating it, the points reached by freeing one coordinate onto
    the hyperplane when that coordinate stays inside its interval.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    normal = np.asarray(normal, dtype=float)
    n = len(lo)
    bits = ((np.arange(2**n)[:, None] >> np.arange(n)[::-1]) & 1).astype(bool)
    corners = np.where(bits, hi, lo)
    slack = corners @ normal - rhs
    tol = 1e-12 * max(1.0, abs(rhs))
    out = [corners[slack >= -tol]]
    bad = corners[slack < -tol]
    for i in range(n):
        if bad.size == 0 or normal[i] == 0:
            continue
        rest = bad @ normal - bad[:, i] * normal[i]
        val = (rhs - rest) / normal[i]
        ok = (val >= lo[i] - tol) & (val <= hi[i] + tol)
        pts = bad[ok].copy()
        pts[:, i] = np.clip(val[ok], lo[i], hi[i])
        out.append(pts)
    pts = np.vstack(out)
    return np.unique(pts, axis=0)


def _pick_best(rows, welfare, rel_tol=1e-12):
    # Max welfare; near-ties go to the lexicographically smallest row.
    top = welfare.max()
    close = np.flatnonzero(welfare >= top - rel_tol * max(1.0, abs(top)))
    order = np.lexsort(rows[close].T[::-1])
    return close[order[0]]


def vertex_enumeration_p(g: Network, params: GameParams, problem: ProblemP, limit: int = VERTEX_CAP, bundle=None):
    """Best vertex of the feasible polytope of the price-raising problem."""
    n = problem.n
    if n > limit:
        raise ConfigError(f"vertex enumeration is capped at n={limit}, got {n}")
    if bundle is None:
        bundle = leontief_bundle(g, params, problem.p_b0)
    k0 = k_zero(bundle, problem.p_b0, problem.tau_b)
    b = bundle.b_delta
    best_lhs = float(np.sum(np.maximum(b * problem.p_a0, b * problem.p_max)))
    if best_lhs < k0 - 1e-12 * max(1.0, abs(k0)):
        raise InfeasibleProblemError(f"tolerance unattainable inside the price box: max {best_lhs:.6g} < k0 {k0:.6g}")
    rows = box_halfspace_vertices(problem.p_a0, problem.p_max, b, k0)
    welfare, agg, _ = evaluate_policies(bundle, rows)
    k = _pick_best(rows, welfare)
    return PolicyResult(
        policy_a=rows[k], policy_b=np.array(problem.p_b0), welfare=float(welfare[k]),
        agg_unsustainable=float(agg[k]), certificate=Certificate.BRUTE_FORCE, optimality_exact=True,
        details={"vertices": len(rows)},
    )


def pr_agent_pairs(p_a0, p_b0, rho, budget, points):
    """Grid of feasible ``(pA, pB)`` pairs for one agent of the redistribution problem."""
    t = np.linspace(0.0, 1.0, points)
    ta, tb = np.meshgrid(t, t, indexing="ij")
    ta, tb = ta.ravel(), tb.ravel()
    pa = p_a0 + ta * (rho + budget)
    pb = p_b0 - tb * rho
    ok = pa + pb <= p_a0 + p_b0 + budget + 1e-12 * max(1.0, p_a0 + p_b0)
    pairs = np.unique(np.column_stack([pa[ok], pb[ok]]), axis=0)
    return pairs


def _uniform_pairs(problem: ProblemPR, comp, points):
    # Shared fractional coordinates for every agent of the component.
    t = np.linspace(0.0, 1.0, points)
    ta, tb = np.meshgrid(t, t, indexing="ij")
    ta, tb = ta.ravel(), tb.ravel()
    idx = list(comp)
    a0, b0 = problem.p_a0[idx], problem.p_b0[idx]
    rho, bud = problem.rho_max[idx], problem.budget[idx]
    pa = a0[None, :] + ta[:, None] * (rho + bud)[None, :]
    pb = b0[None, :] - tb[:, None] * rho[None, :]
    ok = np.all(pa + pb <= (a0 + b0 + bud)[None, :] + 1e-12 * max(1.0, float(np.max(a0 + b0))), axis=1)
    return pa[ok], pb[ok]


def grid_search_pr(
    g: Network,
    params: GameParams,
    problem: ProblemPR,
    resolution: float = 0.05,
    max_evals: int = 200_000,
    bundle=None,
):
    """Best feasible redistribution policy on a regular grid.

    Each agent's premium and penalty are placed on a grid with spacing
    ``resolution`` of its own range. The full product is searched when it
    has at most ``max_evals`` points; otherwise agents in a component share
    grid coordinates, and if that is still too large the components are
    optimised one at a time until no move improves welfare.
    """
    if not 0.0 < resolution <= 1.0:
        raise ValueError("resolution must lie in (0, 1]")
    points = int(round(1.0 / resolution)) + 1
    if bundle is None:
        bundle = leontief_bundle(g, params, problem.p_b0)
    n = problem.n
    scale = max(1.0, float(np.max(problem.p_a0 + problem.p_b0 + problem.budget)))
    tau = problem.tau_b + NONNEG_TOL * scale

    def score(pa_rows, pb_rows):
        w, agg, _ = evaluate_policies(bundle, pa_rows, pb_rows)
        return np.where(agg <= tau, w, -np.inf), agg

    pairs = [
        pr_agent_pairs(problem.p_a0[i], problem.p_b0[i], problem.rho_max[i], problem.budget[i], points)
        for i in range(n)
    ]
    total = float(np.prod([len(p) for p in pairs]))
    mode = "full"
    if total <= max_evals:
        grids = np.array(list(itertools.product(*[range(len(p)) for p in pairs])), dtype=int).reshape(-1, n)
        pa = np.column_stack([pairs[i][grids[:, i], 0] for i in range(n)])
        pb = np.column_stack([pairs[i][grids[:, i], 1] for i in range(n)])
        w, agg = score(pa, pb)
    else:
        comps = connected_components(g).components if g is not None else tuple((i,) for i in range(n))
        cpairs = [_uniform_pairs(problem, comp, points) for comp in comps]
        total = float(np.prod([len(p[0]) for p in cpairs]))
        if total <= max_evals:
            mode = "component-uniform"
            choice = np.array(list(itertools.product(*[range(len(p[0])) for p in cpairs])), dtype=int)
            pa = np.empty((len(choice), n))
            pb = np.empty((len(choice), n))
            for c, comp in enumerate(comps):
                pa[:, list(comp)] = cpairs[c][0][choice[:, c]]
                pb[:, list(comp)] = cpairs[c][1][choice[:, c]]
            w, agg = score(pa, pb)
        else:
            mode = "coordinate-ascent"
            pa, pb, w, agg = _coordinate_ascent(comps, cpairs, score, n)
    if not np.any(np.isfinite(w)):
        raise InfeasibleProblemError("no grid policy satisfies the tolerance constraint")
    rows = np.hstack([pa, pb])
    k = _pick_best(rows[np.isfinite(w)], w[np.isfinite(w)])
    k = np.flatnonzero(np.isfinite(w))[k]
    return PolicyResult(
        policy_a=pa[k], policy_b=pb[k], welfare=float(w[k]), agg_unsustainable=float(agg[k]),
        certificate=Certificate.GRID_SEARCH, optimality_exact=False,
        details={"grid_mode": mode, "points_per_axis": points},
    )


def _coordinate_ascent(comps, cpairs, score, n, sweeps=50):
    # Start from the corner that minimises B-effort (max premium, max
    # penalty), which is feasible whenever anything on the grid is.
    choice = [int(np.argmax(p[0].sum(axis=1) - p[1].sum(axis=1))) for p in cpairs]

    def assemble(ch):
        pa, pb = np.empty(n), np.empty(n)
        for c, comp in enumerate(comps):
            pa[list(comp)] = cpairs[c][0][ch[c]]
            pb[list(comp)] = cpairs[c][1][ch[c]]
        return pa, pb

    pa, pb = assemble(choice)
    cur, cur_agg = score(pa[None], pb[None])
    cur, cur_agg = float(cur[0]), float(cur_agg[0])
    for _ in range(sweeps):
        improved = False
        for c, comp in enumerate(comps):
            m = len(cpairs[c][0])
            pa_rows = np.repeat(pa[None], m, axis=0)
            pb_rows = np.repeat(pb[None], m, axis=0)
            pa_rows[:, list(comp)] = cpairs[c][0]
            pb_rows[:, list(comp)] = cpairs[c][1]
            w, agg = score(pa_rows, pb_rows)
            k = int(np.argmax(w))
            if w[k] > cur + 1e-12 * max(1.0, abs(cur)):
                choice[c] = k
                pa, pb = pa_rows[k], pb_rows[k]
                cur, cur_agg = float(w[k]), float(agg[k])
                improved = True
        if not improved:
            break
    return pa[None], pb[None], np.array([cur]), np.array([cur_agg])


def finite_diff_gradient(f, x, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return grad


def vertex_enumeration_ptilde(g: Network, params: GameParams, problem, limit: int = VERTEX_CAP, bundle=None):
    """Best vertex of the component-wise uniform price polytope.

    Works in one variable per connected component and scores every vertex
    with the full network equilibrium, not with any aggregated form.
    """
    comps = connected_components(g).components
    if len(comps) > limit:
        raise ConfigError(f"vertex enumeration is capped at {limit} components, got {len(comps)}")
    if bundle is None:
        bundle = leontief_bundle(g, params, problem.p_b0)
    k0 = k_zero(bundle, problem.p_b0, problem.tau_b)
    lo = np.array([problem.p_a0[c[0]] for c in comps])
    hi = np.array([problem.p_max[c[0]] for c in comps])
    normal = np.array([bundle.b_delta[list(c)].sum() for c in comps])
    best_lhs = float(np.sum(np.maximum(normal * lo, normal * hi)))
    if best_lhs < k0 - 1e-12 * max(1.0, abs(k0)):
        raise InfeasibleProblemError(f"tolerance unattainable inside the price box: max {best_lhs:.6g} < k0 {k0:.6g}")
    small = box_halfspace_vertices(lo, hi, normal, k0)
    rows = np.empty((len(small), g.n))
    for j, c in enumerate(comps):
        rows[:, list(c)] = small[:, [j]]
    welfare, agg, _ = evaluate_policies(bundle, rows)
    k = _pick_best(small, welfare)
    return PolicyResult(
        policy_a=rows[k], policy_b=np.array(problem.p_b0), welfare=float(welfare[k]),
        agg_unsustainable=float(agg[k]), certificate=Certificate.BRUTE_FORCE, optimality_exact=True,
        details={"vertices": len(rows), "component_prices": small[k]},
    )
