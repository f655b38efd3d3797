"""Component-wise uniform A-prices.

With one price per connected component, welfare separates into a sum of
one-dimensional convex quadratics coupled only through the tolerance
constraint. Replacing each quadratic by its chord over the price interval
gives a fractional-knapsack relaxation that a single sorted sweep solves;
the sweep's answer is exact whenever the fractional component lands on an
endpoint, and otherwise yields an upper bound.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InfeasibleProblemError
from .game import GameParams, LeontiefBundle, evaluate_policies, k_zero, leontief_bundle
from .network import ComponentDecomposition, Network, connected_components
from .problems import Certificate, PolicyResult, ProblemPTilde

GAMMA_TOL = 1e-12
ENDPOINT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ComponentAggregates:
    """Per-component coefficients of ``phi_l(p) = (q p^2 - v p + const) / 4``."""

    components: tuple
    q: np.ndarray
    v: np.ndarray
    b_delta: np.ndarray
    p_a0: np.ndarray
    p_max: np.ndarray
    const: np.ndarray

    @property
    def c(self) -> int:
        return len(self.components)

    def phi(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return 0.25 * (self.q * p * p - self.v * p + self.const)

    def threshold(self) -> np.ndarray:
        """Upper bound at or above which raising a component's price pays off."""
        return self.v / self.q - self.p_a0

    def gamma(self) -> np.ndarray:
        return (self.q / self.b_delta) * (self.p_a0 + self.p_max - self.v / self.q)

    def chord_slope(self) -> np.ndarray:
        return 0.25 * (self.q * (self.p_a0 + self.p_max) - self.v)

    def chord(self, p) -> np.ndarray:
        return self.phi(self.p_a0) + self.chord_slope() * (np.asarray(p, dtype=float) - self.p_a0)

    def expand(self, p, n: int) -> np.ndarray:
        out = np.empty(n)
        for val, comp in zip(np.asarray(p, dtype=float), self.components):
            out[list(comp)] = val
        return out


def _uniform(x, comp, name):
    vals = x[list(comp)]
    if np.ptp(vals) > 1e-12 * max(1.0, float(np.max(np.abs(vals)))):
        raise ConfigError(f"{name} must be uniform within each component; component {comp[0]}.. has {vals.min()}..{vals.max()}")
    return float(vals[0])


def component_aggregates(
    g: Network,
    params: GameParams,
    p_b0,
    p_a0,
    p_max,
    decomposition: ComponentDecomposition | None = None,
) -> ComponentAggregates:
    """Aggregates from each component's own Leontief matrices."""
    p_b0 = np.asarray(p_b0, dtype=float)
    p_a0 = np.asarray(p_a0, dtype=float)
    p_max = np.asarray(p_max, dtype=float)
    comps = (decomposition or connected_components(g)).components
    rows = []
    for comp in comps:
        idx = list(comp)
        pb = p_b0[idx]
        if np.ptp(pb) > 1e-12 * max(1.0, float(pb.max())):
            warnings.warn(f"B-prices vary within component {comp[0]}..; using the exact bilinear form", RuntimeWarning, stacklevel=2)
        local = leontief_bundle(g.subgraph(idx), params, pb, check=False)
        ones = np.ones(len(idx))
        rows.append((
            float(ones @ local.q_mat @ ones),
            float(2.0 * ones @ local.r_mat @ pb),
            float(local.b_delta.sum()),
            _uniform(p_a0, comp, "p_a0"),
            _uniform(p_max, comp, "p_max"),
            float(pb @ local.q_mat @ pb),
        ))
    q, v, b, a, u, const = (np.array(col) for col in zip(*rows))
    return ComponentAggregates(tuple(comps), q, v, b, a, u, const)


def p0_star(agg: ComponentAggregates) -> np.ndarray:
    """Best component prices ignoring the tolerance constraint."""
    return np.where(agg.p_max >= agg.threshold(), agg.p_max, agg.p_a0)


@dataclass(frozen=True, eq=False)
class RelaxationResult:
    ell_prime: int | None
    ell_star: int | None
    gamma: np.ndarray
    order: np.ndarray
    bar_p: np.ndarray
    exact: bool
    upper_bound: float
    suggested_tau_b: float | None
    diagnostics: dict = field(default_factory=dict)


def _sweep_policy(agg: ComponentAggregates, order, ell):
    """Components in the first ``ell`` sorted positions at their maximum, the rest at ``p_a0``."""
    p = np.array(agg.p_a0)
    p[order[:ell]] = agg.p_max[order[:ell]]
    return p


def _dual(agg: ComponentAggregates, k0: float, lam: float) -> float:
    # Lagrange dual of the chord relaxation in the unscaled objective 4*phi.
    slope = 4.0 * agg.chord_slope()
    base = 4.0 * agg.chord(agg.p_a0) - slope * agg.p_a0
    coef = slope + lam * agg.b_delta
    best = np.where(coef >= 0, coef * agg.p_max, coef * agg.p_a0)
    return float(np.sum(base + best) - lam * k0)


def solve_ptilde(
    g: Network,
    params: GameParams,
    problem: ProblemPTilde,
    bundle: LeontiefBundle | None = None,
):
    """Optimal component-wise uniform policy, or the relaxation's policy and bound.

    Returns ``(PolicyResult, RelaxationResult)``. Sweep positions in the
    relaxation record are zero-based.
    """
    n = problem.n
    if bundle is None:
        bundle = leontief_bundle(g, params, problem.p_b0)
    decomp = connected_components(g)
    agg = component_aggregates(g, params, problem.p_b0, problem.p_a0, problem.p_max, decomp)
    k0 = k_zero(bundle, problem.p_b0, problem.tau_b)
    tol = 1e-12 * max(1.0, abs(k0))
    if float(agg.b_delta @ agg.p_max) < k0 - tol:
        raise InfeasibleProblemError(
            f"tolerance unattainable at the maximum prices: {float(agg.b_delta @ agg.p_max):.6g} < k0 {k0:.6g}"
        )
    if np.any(agg.b_delta <= 0):
        raise ConfigError("component centralities must be positive for the sweep to apply")
    gap = agg.p_a0 + agg.p_max - agg.v / agg.q
    degenerate = np.abs(gap) <= GAMMA_TOL * np.maximum(1.0, np.abs(agg.v / agg.q))
    if np.any(degenerate):
        raise ConfigError(
            f"components {np.flatnonzero(degenerate).tolist()} sit exactly on the raise threshold; "
            "perturb their maximum price by about 1e-9"
        )
    interior_ok = bool(
        np.all(problem.p_max <= bundle.p_lim * (1 + 1e-12)) or np.all(problem.p_a0 >= problem.p_b0)
    )
    gamma = agg.gamma()
    order = np.argsort(-gamma, kind="stable")
    in_sl = gamma[order] <= 0
    ell_prime = int(np.argmax(in_sl)) if np.any(in_sl) else None
    diag = {"interior_premise": interior_ok, "k0": k0}

    def finish(p, cert, exact, relax):
        full = agg.expand(p, n)
        w, xb, _ = evaluate_policies(bundle, full)
        res = PolicyResult(full, np.array(problem.p_b0), float(w[0]), float(xb[0]), cert, exact and interior_ok,
                           {"component_prices": p, **diag})
        return res, relax

    start = p0_star(agg)
    if float(agg.b_delta @ start) >= k0 - tol:
        ub = float(np.sum(agg.phi(start)))
        relax = RelaxationResult(ell_prime, None, gamma, order, start, True, ub, None, diag)
        return finish(start, Certificate.COR2_P0STAR, True, relax)

    # Sweep: raise components one at a time in sorted order until feasible.
    # Components outside S_L are already at their maximum in p0*.
    ell_star = None
    for ell in range(ell_prime + 1, agg.c + 1):
        if float(agg.b_delta @ _sweep_policy(agg, order, ell)) >= k0 - tol:
            ell_star = ell - 1
            break
    if ell_star is None:  # unreachable given the feasibility check
        raise InfeasibleProblemError("no sweep policy meets the tolerance constraint")
    p_star = _sweep_policy(agg, order, ell_star + 1)
    j = order[ell_star]
    bar_p = p_star.copy()
    rest = float(agg.b_delta @ p_star - agg.b_delta[j] * p_star[j])
    bar_p[j] = (k0 - rest) / agg.b_delta[j]
    span = agg.p_max[j] - agg.p_a0[j]
    ends = np.array([agg.p_a0[j], agg.p_max[j]])
    near = int(np.argmin(np.abs(ends - bar_p[j])))
    at_end = abs(bar_p[j] - ends[near]) <= ENDPOINT_TOL * max(1.0, abs(agg.p_max[j]))
    bar_p[j] = ends[near] if at_end else min(max(bar_p[j], agg.p_a0[j]), agg.p_max[j])
    upper = float(np.sum(agg.chord(bar_p)))

    lam = -float(gamma[j])
    primal = 4.0 * upper
    dual = _dual(agg, k0, lam)
    diag.update(kappa=-gamma, lambda_star=lam, dual_value=dual, primal_value=primal,
                duality_gap=dual - primal, fractional_share=(bar_p[j] - agg.p_a0[j]) / span if span > 0 else 1.0)
    m_sum_total = float(np.sum(bundle.m_sum @ problem.p_b0))
    suggested = 0.5 * m_sum_total - 0.5 * float(agg.b_delta @ p_star)
    relax = RelaxationResult(ell_prime, ell_star, gamma, order, bar_p, bool(at_end), upper, suggested, diag)
    if at_end:
        return finish(bar_p, Certificate.THM6_EXACT, True, relax)
    return finish(bar_p, Certificate.THM6_RELAXED, False, relax)
