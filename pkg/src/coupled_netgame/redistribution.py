"""Joint premiums and penalties: raise A-prices, cut B-prices, within a budget."""

from __future__ import annotations

import warnings
from typing import NamedTuple

import numpy as np

from .errors import InfeasibleProblemError, NumericalFailureError
from .game import (
    GameParams,
    LeontiefBundle,
    PriceProfile,
    evaluate_policies,
    interior_equilibrium,
    leontief_bundle,
    nonneg_equilibrium,
    utilities,
)
from .network import Network
from .oracle import grid_search_pr
from .problems import Certificate, PolicyResult, ProblemPR

FALLBACK_RESOLUTION = 1e-2
VANISH_TOL = 1e-8


class BudgetPenaltyCheck(NamedTuple):
    per_agent: np.ndarray
    overall: bool


def budget_penalty_check(problem: ProblemPR) -> BudgetPenaltyCheck:
    """Whether penalty plus half the budget covers each agent's price deficit."""
    per = problem.rho_max + 0.5 * problem.budget >= problem.p_b0 - problem.p_a0
    return BudgetPenaltyCheck(per, bool(np.all(per)))


def max_redistribution_policy(problem: ProblemPR):
    """Maximum premium and maximum penalty for every agent."""
    return problem.p_a0 + problem.rho_max + problem.budget, problem.p_b0 - problem.rho_max


def vanish_penalty(bundle: LeontiefBundle, p_a0, p_b0, budget, paper_literal: bool = False) -> np.ndarray:
    """Penalty at which every agent's interior B-effort reaches zero.

    Solves ``2 M- rho = (M+ + M-) p_b0 - M_delta (p_a0 + b)``, the condition
    that ``p_a0 + rho + b`` equals the price limit at B-prices ``p_b0 - rho``.
    With ``paper_literal`` the alternative expression
    ``(M-)^-1 (M+ p_b0 - p_a0 - M_delta b) / 2`` is returned unverified, for
    comparison only; it does not zero B-effort in general.
    """
    p_a0 = np.asarray(p_a0, dtype=float)
    p_b0 = np.asarray(p_b0, dtype=float)
    budget = np.asarray(budget, dtype=float)
    if paper_literal:
        rhs = bundle.m_plus @ p_b0 - p_a0 - bundle.m_delta @ budget
        return 0.5 * np.linalg.solve(bundle.m_minus, rhs)
    rhs = bundle.m_sum @ p_b0 - bundle.m_delta @ (p_a0 + budget)
    rho = np.linalg.solve(2.0 * bundle.m_minus, rhs)
    pa, pb = p_a0 + rho + budget, p_b0 - rho
    xb = 0.5 * (bundle.m_sum @ pb - bundle.m_delta @ pa)
    scale = max(1.0, float(np.max(np.abs(p_a0))), float(np.max(np.abs(p_b0))))
    if np.max(np.abs(xb)) > VANISH_TOL * scale:
        raise NumericalFailureError("vanishing penalty does not zero B-effort", {"residual": float(np.max(np.abs(xb)))})
    if np.any(rho < 0):
        warnings.warn("vanishing penalty has negative entries; those agents need no penalty", RuntimeWarning, stacklevel=2)
    return rho


def _utility_report(bundle, params, before: PriceProfile, after: PriceProfile):
    eff0, _ = nonneg_equilibrium(None, params, before, bundle=bundle)
    eff1, _ = nonneg_equilibrium(None, params, after, bundle=bundle)
    u0 = utilities(bundle.adjacency, params, before, eff0)
    u1 = utilities(bundle.adjacency, params, after, eff1)
    return u0, u1


def solve_pr(
    g: Network,
    params: GameParams,
    problem: ProblemPR,
    resolution: float = FALLBACK_RESOLUTION,
    bundle: LeontiefBundle | None = None,
) -> PolicyResult:
    """Welfare-maximising redistribution policy.

    The maximum-premium, maximum-penalty policy always minimises aggregate
    B-effort; it is also welfare-optimal when the budget-penalty condition
    holds. With no budget and penalties below every deficit the status quo
    is optimal. Other cases fall back to a grid search.
    """
    if bundle is None:
        bundle = leontief_bundle(g, params, problem.p_b0)
    status_quo = PriceProfile(problem.p_a0, problem.p_b0)
    pre, _ = interior_equilibrium(bundle, status_quo)
    if not (np.all(pre.x_a > 0) and np.all(pre.x_b > 0)):
        warnings.warn("pre-intervention equilibrium has non-positive efforts", RuntimeWarning, stacklevel=2)

    pa_max, pb_max = max_redistribution_policy(problem)
    w, agg, _ = evaluate_policies(bundle, pa_max, pb_max)
    scale = max(1.0, float(np.max(pa_max + pb_max)))
    tau = problem.tau_b + 1e-9 * scale
    if agg[0] > tau:
        raise InfeasibleProblemError(
            f"tolerance unattainable: minimum aggregate B-effort {agg[0]:.6g} exceeds tau_b {problem.tau_b:.6g}"
        )
    details = {"min_agg_unsustainable": float(agg[0]), "min_agg_policy": (pa_max, pb_max)}

    check = budget_penalty_check(problem)
    if check.overall:
        u0, u1 = _utility_report(bundle, params, status_quo, PriceProfile(pa_max, pb_max))
        details.update(utility_before=u0, utility_after=u1, no_agent_worse=bool(np.all(u1 >= u0 - 1e-9 * max(1.0, np.max(np.abs(u0))))))
        return PolicyResult(pa_max, pb_max, float(w[0]), float(agg[0]), Certificate.THM5_MAXRHO, True, details)

    if np.all(problem.budget == 0) and np.all(problem.rho_max < problem.p_b0 - problem.p_a0):
        w0, agg0, _ = evaluate_policies(bundle, problem.p_a0, problem.p_b0)
        if agg0[0] <= tau:
            return PolicyResult(
                np.array(problem.p_a0), np.array(problem.p_b0), float(w0[0]), float(agg0[0]),
                Certificate.PROP3_STATUS_QUO, True, details,
            )

    res = grid_search_pr(g, params, problem, resolution=resolution, bundle=bundle)
    details.update(res.details)
    return PolicyResult(res.policy_a, res.policy_b, res.welfare, res.agg_unsustainable, Certificate.GRID_SEARCH, False, details)


class Recommendation(NamedTuple):
    action: str
    policy_a: np.ndarray
    policy_b: np.ndarray
    reason: str


def recommend_policy(g, params, problem: ProblemPR, priority: str = "welfare", uniform: bool = False, bundle=None):
    """Policy guideline for a planner with budget ``b`` and penalty cap ``rho_max``.

    Reduction-first planners always take maximum premium and penalty. A
    welfare-first planner does the same when the budget-penalty condition
    holds; otherwise it first solves the price-raising problem (uniform per
    component when ``uniform``) with the budget as raise cap, then re-checks
    the condition from the new prices and the unspent budget.
    """
    from .componentwise import solve_ptilde
    from .problems import ProblemP, ProblemPTilde
    from .solver_p import solve_p

    if priority not in ("welfare", "reduction"):
        raise ValueError("priority must be 'welfare' or 'reduction'")
    pa_max, pb_max = max_redistribution_policy(problem)
    full = "set (p^A,p^B)=(p^A0+rho_max+b, p^B0-rho_max)"
    if priority == "reduction":
        return Recommendation(full, pa_max, pb_max, "minimises aggregate unsustainable effort")
    if budget_penalty_check(problem).overall:
        return Recommendation(full, pa_max, pb_max, "budget and penalties jointly sufficient; no agent loses utility")
    p_max = problem.p_a0 + problem.budget
    if uniform:
        res, _ = solve_ptilde(g, params, ProblemPTilde(problem.p_a0, p_max, problem.p_b0, problem.tau_b), bundle=bundle)
        label = "component-uniform price raise"
    else:
        res = solve_p(g, params, ProblemP(problem.p_a0, p_max, problem.p_b0, problem.tau_b), bundle=bundle)
        label = "price raise"
    p_star = res.policy_a
    # Re-check from p* with whatever budget the raise left unspent.
    left = np.maximum(problem.budget - (p_star - problem.p_a0), 0.0)
    if np.all(problem.rho_max + 0.5 * left >= problem.p_b0 - p_star):
        return Recommendation(
            f"solve the {label} problem, then " + full, pa_max, pb_max,
            "condition holds once pre-intervention prices are replaced by the optimal raise",
        )
    return Recommendation(
        f"solve the {label} problem and impose no penalty: p^A = p*", p_star, np.array(problem.p_b0),
        "budget and penalties insufficient even after the raise",
    )
