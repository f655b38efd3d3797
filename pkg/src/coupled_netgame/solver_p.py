"""Raising sustainable prices to maximise welfare under a cap on unsustainable effort.

The feasible set is the box ``p_a0 <= p <= p_max`` cut by the half-space
``b_delta' p >= k0``. Welfare is a convex quadratic in ``p`` on the region
where the equilibrium is interior, so an optimum sits at a vertex. The
solver tries cheap sufficient conditions first, then a pruned vertex
search, then full enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import AssumptionViolationError, ConfigError, InfeasibleProblemError, NumericalFailureError
from .feasibility import Regime, classify_regime
from .game import GameParams, LeontiefBundle, evaluate_policies, k_zero, leontief_bundle
from .network import Network, load_network
from .oracle import VERTEX_CAP, _pick_best, box_halfspace_vertices
from .problems import Certificate, PolicyResult, ProblemP

CONSTRAINT_TOL = 1e-8
PRUNED_CAP = 20


class Ordering(str, Enum):
    GE = "GE"
    LT = "LT"
    INDETERMINATE = "INDETERMINATE"


@dataclass(frozen=True, eq=False)
class Comparison:
    ordering: Ordering
    psi_first: np.ndarray
    psi_second: np.ndarray


def psi(bundle: LeontiefBundle, p_a) -> np.ndarray:
    """Combined size of total incentive and incentive bias, ``|Q p - R p_b0|``."""
    return np.abs(bundle.q_mat @ np.asarray(p_a, dtype=float) - bundle.r_mat @ bundle.p_b0)


def thm4_compare(bundle: LeontiefBundle, p1, p2, p_a0=None, tol: float = 1e-12) -> Comparison:
    """Order two nested policies ``p2 <= p1`` by welfare without evaluating it.

    ``GE`` when ``Q(p1 + p2) >= v`` entrywise, ``LT`` when ``<`` entrywise.
    Both policies must lie below the price limit, unless they are no
    cheaper than the B-prices.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    slack = tol * max(1.0, float(np.max(np.abs(p1))))
    if np.any(p2 > p1 + slack):
        raise ValueError("comparison needs p2 <= p1 entrywise")
    if p_a0 is not None and np.any(np.asarray(p_a0) > p2 + slack):
        raise ValueError("comparison needs p_a0 <= p2 entrywise")
    if np.any(p1 > bundle.p_lim + slack) and np.any(p2 < bundle.p_b0 - slack):
        raise ValueError("p1 exceeds the price limit and p2 is below the B-prices")
    lhs = bundle.q_mat @ (p1 + p2)
    v = bundle.v_vec
    if np.all(lhs >= v):
        order = Ordering.GE
    elif np.all(lhs < v):
        order = Ordering.LT
    else:
        order = Ordering.INDETERMINATE
    return Comparison(order, psi(bundle, p1), psi(bundle, p2))


def p0_threshold(beta: float, p_a0, p_b):
    """Upper bound at or above which the network-free problem raises the price."""
    return 2.0 * beta * np.asarray(p_b, dtype=float) - np.asarray(p_a0, dtype=float)


def solve_p0(problem: ProblemP, params: GameParams, g: Network | None = None) -> PolicyResult:
    """Network-free baseline: each agent independently takes an endpoint.

    The tolerance constraint is ignored. Welfare is reported on ``g`` when
    given, otherwise on the empty network the baseline assumes.
    """
    take_max = problem.p_max >= p0_threshold(params.beta, problem.p_a0, problem.p_b0)
    policy = np.where(take_max, problem.p_max, problem.p_a0)
    g = g if g is not None else load_network([], problem.n)
    bundle = leontief_bundle(g, params, problem.p_b0)
    w, agg, _ = evaluate_policies(bundle, policy)
    return PolicyResult(policy, np.array(problem.p_b0), float(w[0]), float(agg[0]), Certificate.P0_BASELINE, True)


def _closed_forms_apply(bundle: LeontiefBundle, problem: ProblemP, require_a_positive: bool = True) -> bool:
    # The ordering argument needs an interior equilibrium over the whole box
    # (or A-prices no cheaper than B-prices) and non-negative Q and M_delta.
    # A-effort grows with the A-price, so checking it at p_a0 covers the box.
    inside = np.all(problem.p_max <= bundle.p_lim * (1 + 1e-12)) or np.all(problem.p_a0 >= problem.p_b0)
    x_a0 = 0.5 * (bundle.m_sum @ problem.p_a0 - bundle.m_delta @ problem.p_b0)
    a_positive = np.all(x_a0 >= -1e-12 * max(1.0, float(np.max(problem.p_b0)))) and np.all(bundle.m_sum >= 0)
    a_positive = a_positive or not require_a_positive
    return bool(inside and a_positive and np.all(bundle.q_mat >= 0) and np.all(bundle.m_delta >= 0))


def _feasible(b, k0, p, tol):
    return float(b @ p) >= k0 - tol


def _reference_points(problem: ProblemP, b, k0, tol):
    """Points where the cap is active and all but one coordinate sit at ``p_a0``."""
    a, u = problem.p_a0, problem.p_max
    base = float(b @ a)
    refs = {}
    for i in range(problem.n):
        if b[i] <= 0:
            continue
        val = a[i] + (k0 - base) / b[i]
        if a[i] - tol <= val <= u[i] + tol:
            p = a.copy()
            p[i] = min(max(val, a[i]), u[i])
            refs[i] = p
    return refs


def prune_faces(bundle: LeontiefBundle, problem: ProblemP, k0: float, tol: float):
    """Upper faces ``p_i = p_max_i`` that cannot hold a better vertex.

    Returns ``(pruned, candidates, rounds)``: the pruned coordinate set, the
    reference points that dominate the pruned faces, and how many rounds
    changed anything.
    """
    b, u, a = bundle.b_delta, problem.p_max, problem.p_a0
    v = bundle.v_vec
    pruned: set[int] = set()
    candidates = []
    undecided = set(range(problem.n))
    rounds = 0

    def classify(points):
        changed = False
        for i, p in points.items():
            if i not in undecided:
                continue
            lhs = bundle.q_mat @ (p + u)
            if np.all(lhs >= v):
                pass
            elif np.all(lhs < v):
                candidates.append(p)
            else:
                continue
            pruned.add(i)
            undecided.discard(i)
            changed = True
        return changed

    if classify(_reference_points(problem, b, k0, tol)):
        rounds += 1
    while undecided:
        pts = {}
        for i in sorted(undecided):
            e = a.copy()
            e[i] = u[i]
            if _feasible(b, k0, e, tol):
                pts[i] = e
        if not classify(pts):
            break
        rounds += 1
    return pruned, candidates, rounds


def pruned_vertices(problem: ProblemP, b, k0, pruned, tol):
    """Vertices of the feasible polytope with every pruned upper face inactive."""
    a, u = problem.p_a0, problem.p_max
    n = problem.n
    free = [i for i in range(n) if i not in pruned and u[i] > a[i]]
    m = len(free)
    bits = ((np.arange(2**m)[:, None] >> np.arange(m)[::-1]) & 1).astype(bool)
    corners = np.repeat(a[None, :], 2**m, axis=0)
    corners[:, free] = np.where(bits, u[free], a[free])
    slack = corners @ b - k0
    out = [corners[slack >= -tol]]
    bad = corners[slack < -tol]
    for i in range(n):
        if bad.size == 0 or b[i] == 0:
            continue
        val = (k0 - (bad @ b - bad[:, i] * b[i])) / b[i]
        ok = (val >= a[i] - tol) & (val <= u[i] + tol)
        pts = bad[ok].copy()
        pts[:, i] = np.clip(val[ok], a[i], u[i])
        out.append(pts)
    return np.unique(np.vstack(out), axis=0)


def _result(bundle, policy, cert, exact, **details):
    w, agg, interior = evaluate_policies(bundle, policy)
    details["interior"] = bool(interior[0])
    return PolicyResult(np.array(policy, dtype=float), np.array(bundle.p_b0), float(w[0]), float(agg[0]), cert, exact, details)


def _best_of(bundle, rows, cert, exact, **details):
    w, _, _ = evaluate_policies(bundle, rows)
    k = _pick_best(rows, w)
    return _result(bundle, rows[k], cert, exact, candidates=len(rows), **details)


def _verify(result: PolicyResult, problem: ProblemP, b, k0):
    p = result.policy_a
    scale = max(1.0, float(np.max(problem.p_max)))
    tol = CONSTRAINT_TOL * scale
    if np.any(p < problem.p_a0 - tol) or np.any(p > problem.p_max + tol):
        raise NumericalFailureError("returned policy leaves the price box", {"policy": p})
    if float(b @ p) < k0 - tol * max(1.0, abs(k0)):
        raise NumericalFailureError("returned policy violates the tolerance constraint", {"policy": p, "k0": k0})
    return result


def _closed_form_candidate(bundle: LeontiefBundle, problem: ProblemP, b, k0, tol):
    """Policy and certificate from the sufficient conditions, or None when none fires."""
    a, u = problem.p_a0, problem.p_max
    a0_feasible = _feasible(b, k0, a, tol)
    # Needed for p_max to be the feasible point furthest along b_delta.
    pmax_ok = np.all(b > 0) and _feasible(b, k0, u, tol)
    if pmax_ok:
        if np.all(a >= problem.p_b0):
            return u, Certificate.COR1_IA
        if np.all(bundle.q_mat @ a > bundle.r_mat @ problem.p_b0):
            return u, Certificate.COR1_IB
        if np.all(u - problem.p_b0 >= problem.p_b0 - a):
            return u, Certificate.COR1_IC
    ratio = (bundle.r_mat @ problem.p_b0) / (bundle.q_mat @ np.ones(problem.n))
    if a0_feasible and float(np.max(u)) < float(np.min(ratio)):
        return a, Certificate.COR1_II
    cmp = thm4_compare(bundle, u, a)
    if cmp.ordering is Ordering.GE and pmax_ok:
        return u, Certificate.THM4_PMAX
    if cmp.ordering is Ordering.LT and a0_feasible:
        return a, Certificate.THM4_PA0
    return None


def solve_p(
    g: Network,
    params: GameParams,
    problem: ProblemP,
    bruteforce_limit: int = VERTEX_CAP,
    bundle: LeontiefBundle | None = None,
    check_regime: bool = True,
) -> PolicyResult:
    """Welfare-maximising A-prices within the box under the tolerance constraint."""
    if bundle is None:
        bundle = leontief_bundle(g, params, problem.p_b0)
    if check_regime and g is not None:
        report = classify_regime(g, params)
        if report.regime is Regime.S_MINUS:
            raise AssumptionViolationError(
                "raising A-prices increases unsustainable effort in this regime; use redistribution with penalties"
            )
        if report.regime is Regime.NETWORK_DEPENDENT and not np.all(bundle.b_delta > 0):
            raise AssumptionViolationError(
                "some agents have non-positive centrality; price raises there increase unsustainable effort"
            )
    b = bundle.b_delta
    k0 = k_zero(bundle, problem.p_b0, problem.tau_b)
    tol = 1e-12 * max(1.0, abs(k0))
    a, u = problem.p_a0, problem.p_max
    best_lhs = float(np.sum(np.maximum(b * a, b * u)))
    if best_lhs < k0 - tol:
        raise InfeasibleProblemError(
            f"tolerance unattainable: best b_delta'p = {best_lhs:.6g} < k0 = {k0:.6g}"
        )
    if np.all(u == a):
        return _verify(_result(bundle, a, Certificate.TRIVIAL_BOX, True), problem, b, k0)

    a0_feasible = _feasible(b, k0, a, tol)
    if _closed_forms_apply(bundle, problem):
        hit = _closed_form_candidate(bundle, problem, b, k0, tol)
        if hit is not None:
            policy, cert = hit
            return _verify(_result(bundle, policy, cert, True), problem, b, k0)

        pruned, extra, rounds = prune_faces(bundle, problem, k0, tol)
        remaining = problem.n - len(pruned)
        if remaining <= max(bruteforce_limit, 0) or remaining <= PRUNED_CAP:
            rows = pruned_vertices(problem, b, k0, pruned, tol)
            rows = np.vstack([rows] + ([u[None]] if _feasible(b, k0, u, tol) else []) + [p[None] for p in extra])
            return _verify(
                _best_of(bundle, rows, Certificate.PRUNED_SEARCH, True, pruned=sorted(pruned), rounds=rounds),
                problem, b, k0,
            )
        if problem.n <= bruteforce_limit:
            rows = box_halfspace_vertices(a, u, b, k0)
            return _verify(_best_of(bundle, rows, Certificate.BRUTE_FORCE, True), problem, b, k0)
        rows = [p[None] for p in extra]
        if _feasible(b, k0, u, tol):
            rows.append(u[None])
        if a0_feasible:
            rows.append(a[None])
        rows.extend(p[None] for p in _reference_points(problem, b, k0, tol).values())
        return _verify(_best_of(bundle, np.vstack(rows), Certificate.PRUNED_SEARCH, False), problem, b, k0)

    # Outside the interior region welfare is no longer one quadratic, so a
    # vertex search is only a heuristic.
    if problem.n > bruteforce_limit:
        raise ConfigError(
            f"policy box reaches past the price limit and n={problem.n} exceeds the brute-force limit {bruteforce_limit}"
        )
    rows = box_halfspace_vertices(a, u, b, k0)
    brute = _best_of(bundle, rows, Certificate.BRUTE_FORCE, False, reason="equilibrium not interior over the box")
    if _closed_forms_apply(bundle, problem, require_a_positive=False):
        # Some A-effort is zero at p_a0. The sufficient conditions are only
        # reported when the vertex search confirms them.
        hit = _closed_form_candidate(bundle, problem, b, k0, tol)
        if hit is not None:
            cand = _result(bundle, hit[0], hit[1], False, reason="A-effort not positive at p_a0; confirmed by vertex search")
            if cand.welfare >= brute.welfare - 1e-12 * max(1.0, abs(brute.welfare)):
                return _verify(cand, problem, b, k0)
    return _verify(brute, problem, b, k0)
