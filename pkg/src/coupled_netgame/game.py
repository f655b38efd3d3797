"""Coupled-activity linear-quadratic network game.

Each agent ``i`` splits effort between a sustainable activity A and an
unsustainable activity B and receives

    u_i = pA_i xA_i + pB_i xB_i - (xA_i^2 + xB_i^2)/2 - beta xA_i xB_i
          + delta xA_i (G xA)_i + delta xB_i (G xB)_i
          + mu xA_i (G xB)_i + mu xB_i (G xA)_i.

Working in the rotated coordinates ``s = xA + xB`` and ``d = xA - xB`` the
first-order conditions decouple into two single-activity systems solved by
the Leontief matrices ``M+ = ((1+beta)I - (delta+mu)G)^-1`` and
``M- = ((1-beta)I - (delta-mu)G)^-1``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .errors import AssumptionViolationError, NumericalFailureError
from .network import Network, spectral_radius

NONNEG_TOL = 1e-9
KKT_TOL = 1e-8


@dataclass(frozen=True)
class GameParams:
    beta: float
    delta: float
    mu: float

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.delta <= 0.0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.mu <= 0.0:
            raise ValueError(f"mu must be positive, got {self.mu}")


def _vec(x, n=None, name="vector"):
    a = np.array(x, dtype=float).reshape(-1)
    if n is not None and a.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got {a.shape[0]}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PriceProfile:
    p_a: np.ndarray
    p_b: np.ndarray

    def __post_init__(self):
        p_a = _vec(self.p_a, name="p_a")
        p_b = _vec(self.p_b, len(p_a), name="p_b")
        if np.any(p_a < 0) or np.any(p_b < 0):
            raise ValueError("prices must be non-negative")
        object.__setattr__(self, "p_a", p_a)
        object.__setattr__(self, "p_b", p_b)

    @property
    def n(self):
        return len(self.p_a)


@dataclass(frozen=True, eq=False)
class EffortProfile:
    x_a: np.ndarray
    x_b: np.ndarray

    def __post_init__(self):
        x_a = _vec(self.x_a, name="x_a")
        object.__setattr__(self, "x_a", x_a)
        object.__setattr__(self, "x_b", _vec(self.x_b, len(x_a), name="x_b"))

    def is_nonnegative(self, tol=NONNEG_TOL) -> bool:
        return bool(np.all(self.x_a >= -tol) and np.all(self.x_b >= -tol))

    def clipped(self) -> "EffortProfile":
        return EffortProfile(np.maximum(self.x_a, 0.0), np.maximum(self.x_b, 0.0))


@dataclass(frozen=True, eq=False)
class LeontiefBundle:
    params: GameParams
    adjacency: np.ndarray
    p_b0: np.ndarray
    m_plus: np.ndarray
    m_minus: np.ndarray
    m_delta: np.ndarray
    q_mat: np.ndarray
    r_mat: np.ndarray
    v_vec: np.ndarray
    b_delta: np.ndarray
    p_lim: np.ndarray

    @property
    def n(self):
        return len(self.p_b0)

    @property
    def m_sum(self):
        return self.m_plus + self.m_minus


class Branch(str, Enum):
    INTERIOR = "INTERIOR"
    ALL_B_ZERO = "ALL_B_ZERO"
    MIXED_MINIMAL_SET = "MIXED_MINIMAL_SET"
    # Some A-effort is also zero; only reachable when pre-intervention
    # efforts are not all positive.
    GENERAL_ACTIVE_SET = "GENERAL_ACTIVE_SET"


@dataclass(frozen=True)
class EquilibriumCertificate:
    branch: Branch
    active_set: tuple[int, ...] = ()
    kkt_residual: float = 0.0
    zero_a: tuple[int, ...] = ()


class Welfare(NamedTuple):
    value: float
    closed_form: bool


BOUNDARY_RTOL = 1e-12


def check_assumption1(g: Network, params: GameParams, rho: float | None = None):
    """Return ``(holds, margin)`` for the network-effect bound.

    ``margin`` is ``max{(delta+mu)/(1+beta), |delta-mu|/(1-beta)} * rho(G)``;
    the assumption holds when it is below one.
    """
    if rho is None:
        rho = spectral_radius(g)
    b, d, m = params.beta, params.delta, params.mu
    margin = max((d + m) / (1 + b), abs(d - m) / (1 - b)) * rho
    return margin < 1.0, margin


def check_assumption2prime(params: GameParams) -> bool:
    """Cross-activity effect dominated: ``mu < beta * delta``, boundary excluded up to rounding."""
    return params.mu < params.beta * params.delta * (1.0 - BOUNDARY_RTOL)


def _inverse(a: np.ndarray) -> np.ndarray:
    # LAPACK gesv: LU with partial pivoting.
    return np.linalg.solve(a, np.eye(a.shape[0]))


def leontief_bundle(g: Network, params: GameParams, p_b0, check: bool = True) -> LeontiefBundle:
    n = g.n
    p_b0 = _vec(p_b0, n, name="p_b0")
    if check:
        ok, margin = check_assumption1(g, params)
        if not ok:
            raise AssumptionViolationError(
                f"network effects too strong: assumption-1 margin {margin:.6g} >= 1"
            )
    b, d, m = params.beta, params.delta, params.mu
    eye = np.eye(n)
    adj = g.adjacency
    m_plus = _inverse((1 + b) * eye - (d + m) * adj)
    m_minus = _inverse((1 - b) * eye - (d - m) * adj)
    m_delta = m_minus - m_plus
    mp2 = m_plus @ m_plus
    mm2 = m_minus @ m_minus
    q_mat = (1 + b) * mp2 + (1 - b) * mm2
    r_mat = (1 - b) * mm2 - (1 + b) * mp2
    q_mat = 0.5 * (q_mat + q_mat.T)
    r_mat = 0.5 * (r_mat + r_mat.T)
    if np.linalg.cond(m_delta) > 1e14:
        raise NumericalFailureError("M_delta is numerically singular", {"cond": np.linalg.cond(m_delta)})
    p_lim = np.linalg.solve(m_delta, (m_plus + m_minus) @ p_b0)
    mats = dict(
        m_plus=m_plus, m_minus=m_minus, m_delta=m_delta, q_mat=q_mat, r_mat=r_mat,
        v_vec=2.0 * r_mat @ p_b0, b_delta=m_delta.sum(axis=1), p_lim=p_lim,
    )
    for a in mats.values():
        a.setflags(write=False)
    return LeontiefBundle(params=params, adjacency=adj, p_b0=p_b0, **mats)


def centrality(bundle: LeontiefBundle) -> np.ndarray:
    """Per-agent reduction in aggregate B-effort per unit raise of its A-price."""
    return np.array(bundle.b_delta)


def price_limit(bundle: LeontiefBundle, p_b) -> np.ndarray:
    """A-price threshold beyond which interior B-effort turns negative, at B-prices ``p_b``."""
    return np.linalg.solve(bundle.m_delta, bundle.m_sum @ np.asarray(p_b, dtype=float))


def interior_equilibrium(bundle: LeontiefBundle, prices: PriceProfile, tol: float = NONNEG_TOL):
    """Unconstrained Nash equilibrium; returns ``(efforts, all_nonnegative)``."""
    pa, pb = prices.p_a, prices.p_b
    s = bundle.m_plus @ (pa + pb)
    d = bundle.m_minus @ (pa - pb)
    eff = EffortProfile(0.5 * (s + d), 0.5 * (s - d))
    return eff, eff.is_nonnegative(tol)


def marginal_utilities(adjacency, params: GameParams, prices: PriceProfile, efforts: EffortProfile):
    """Own-effort partial derivatives ``(du_i/dxA_i, du_i/dxB_i)``."""
    g = np.asarray(adjacency, dtype=float)
    xa, xb = efforts.x_a, efforts.x_b
    b, d, m = params.beta, params.delta, params.mu
    ga = prices.p_a - xa - b * xb + d * (g @ xa) + m * (g @ xb)
    gb = prices.p_b - xb - b * xa + d * (g @ xb) + m * (g @ xa)
    return ga, gb


def kkt_residual(adjacency, params, prices, efforts) -> float:
    """Max natural residual ``|min(x, -du/dx)|`` of the non-negative game."""
    ga, gb = marginal_utilities(adjacency, params, prices, efforts)
    ra = np.abs(np.minimum(efforts.x_a, -ga))
    rb = np.abs(np.minimum(efforts.x_b, -gb))
    return float(max(ra.max(initial=0.0), rb.max(initial=0.0)))


def hatted_b_prices(bundle: LeontiefBundle, prices: PriceProfile, s_set) -> np.ndarray:
    """B-prices with the entries in ``s_set`` replaced so that their interior B-effort is zero."""
    s_idx = np.asarray(sorted(s_set), dtype=int)
    p_hat = np.array(prices.p_b)
    if len(s_idx) == 0:
        return p_hat
    t_idx = np.setdiff1d(np.arange(bundle.n), s_idx)
    msum, mdel = bundle.m_sum, bundle.m_delta
    rhs = mdel[np.ix_(s_idx, t_idx)] @ prices.p_a[t_idx] + mdel[np.ix_(s_idx, s_idx)] @ prices.p_a[s_idx]
    rhs -= msum[np.ix_(s_idx, t_idx)] @ prices.p_b[t_idx]
    p_hat[s_idx] = np.linalg.solve(msum[np.ix_(s_idx, s_idx)], rhs)
    return p_hat


def hatted_equilibrium(bundle: LeontiefBundle, prices: PriceProfile, s_set) -> EffortProfile:
    pa = prices.p_a
    pb = hatted_b_prices(bundle, prices, s_set)
    s = bundle.m_plus @ (pa + pb)
    d = bundle.m_minus @ (pa - pb)
    xa, xb = 0.5 * (s + d), 0.5 * (s - d)
    xb[list(s_set)] = 0.0  # exact zero by construction; drop round-off
    return EffortProfile(xa, xb)


def greedy_minimal_set(bundle: LeontiefBundle, prices: PriceProfile, tol: float = NONNEG_TOL):
    """Grow ``S`` one index at a time until the hatted B-efforts are non-negative.

    The index added is the most negative hatted B-effort, preferring agents
    whose interior B-effort is already negative. Returns ``(S, efforts)``.
    """
    interior, _ = interior_equilibrium(bundle, prices)
    candidates = set(np.flatnonzero(interior.x_b < -tol).tolist())
    s_set: list[int] = []
    eff = interior
    for _ in range(bundle.n + 1):
        neg = [i for i in np.flatnonzero(eff.x_b < -tol).tolist() if i not in s_set]
        if not neg:
            return tuple(sorted(s_set)), eff
        pool = [i for i in neg if i in candidates] or neg
        s_set.append(min(pool, key=lambda i: eff.x_b[i]))
        eff = hatted_equilibrium(bundle, prices, s_set)
    raise NumericalFailureError(
        "no index set makes the hatted B-efforts non-negative",
        {"last_set": tuple(sorted(s_set)), "x_b": eff.x_b},
    )


def nonneg_equilibrium(
    g: Network,
    params: GameParams,
    prices: PriceProfile,
    x_ref: Optional[EffortProfile] = None,
    bundle: Optional[LeontiefBundle] = None,
    tol: float = NONNEG_TOL,
    kkt_tol: float = KKT_TOL,
):
    """Nash equilibrium of the game with efforts constrained to be non-negative.

    Returns ``(efforts, certificate)``. Raises ``NumericalFailureError`` when
    the constructed profile fails the KKT check at ``kkt_tol`` (scaled by the
    price magnitude).
    """
    if bundle is None:
        bundle = leontief_bundle(g, params, prices.p_b)
    if x_ref is not None and not (np.all(x_ref.x_a > 0) and np.all(x_ref.x_b > 0)):
        warnings.warn("reference equilibrium has non-positive efforts", RuntimeWarning, stacklevel=2)

    scale = max(1.0, float(np.max(prices.p_a, initial=0.0)), float(np.max(prices.p_b, initial=0.0)))
    interior, ok = interior_equilibrium(bundle, prices, tol * scale)
    if ok:
        eff, branch, s_set = interior.clipped(), Branch.INTERIOR, ()
    elif np.all(prices.p_a >= price_limit(bundle, prices.p_b) - tol * scale):
        eye = np.eye(bundle.n)
        x_a = np.linalg.solve(eye - params.delta * bundle.adjacency, prices.p_a)
        eff, branch = EffortProfile(x_a, np.zeros(bundle.n)), Branch.ALL_B_ZERO
        s_set = tuple(range(bundle.n))
    else:
        s_set, eff = greedy_minimal_set(bundle, prices, tol * scale)
        eff, branch = eff.clipped(), Branch.MIXED_MINIMAL_SET

    res = kkt_residual(bundle.adjacency, params, prices, eff)
    zero_a: tuple[int, ...] = ()
    if res > kkt_tol * scale:
        eff = active_set_equilibrium(bundle.adjacency, params, prices)
        res = kkt_residual(bundle.adjacency, params, prices, eff)
        branch = Branch.GENERAL_ACTIVE_SET
        s_set = tuple(np.flatnonzero(eff.x_b == 0).tolist())
        zero_a = tuple(np.flatnonzero(eff.x_a == 0).tolist())
    if res > kkt_tol * scale:
        raise NumericalFailureError(
            f"equilibrium candidate ({branch.value}) violates KKT conditions: residual {res:.3e}",
            {"branch": branch.value, "active_set": s_set, "residual": res},
        )
    return eff, EquilibriumCertificate(branch, tuple(s_set), res, zero_a)


def _game_matrix(adjacency, params: GameParams) -> np.ndarray:
    # Own-effort Hessian blocks; the game is a potential game, so this is
    # symmetric, and it is positive definite under the spectral bound.
    g = np.asarray(adjacency, dtype=float)
    eye = np.eye(g.shape[0])
    diag = eye - params.delta * g
    off = params.beta * eye - params.mu * g
    return np.block([[diag, off], [off, diag]])


def active_set_equilibrium(adjacency, params: GameParams, prices: PriceProfile, sweeps: int = 10_000) -> EffortProfile:
    """Equilibrium of the non-negative game as ``min x'Ax/2 - p'x`` over ``x >= 0``.

    Projected Gauss-Seidel locates the zero pattern; the pattern is then
    refined by exact solves on the free coordinates until complementarity
    holds.
    """
    a = _game_matrix(adjacency, params)
    p = np.concatenate([prices.p_a, prices.p_b])
    m = len(p)
    x = np.zeros(m)
    diag = np.diag(a)
    for _ in range(sweeps):
        biggest = 0.0
        for i in range(m):
            new = max(0.0, x[i] + (p[i] - a[i] @ x) / diag[i])
            biggest = max(biggest, abs(new - x[i]))
            x[i] = new
        if biggest < 1e-13 * max(1.0, float(np.max(np.abs(p)))):
            break
    free = x > 0
    for _ in range(m + 1):
        y = np.zeros(m)
        if np.any(free):
            y[free] = np.linalg.solve(a[np.ix_(free, free)], p[free])
        grad = p - a @ y
        neg = free & (y < 0)
        gain = ~free & (grad > 0)
        if not np.any(neg) and not np.any(gain):
            return EffortProfile(y[: m // 2], y[m // 2:])
        free = (free & ~neg) | gain
    return EffortProfile(np.maximum(x[: m // 2], 0.0), np.maximum(x[m // 2:], 0.0))


def utilities(g, params: GameParams, prices: PriceProfile, efforts: EffortProfile) -> np.ndarray:
    adj = g.adjacency if isinstance(g, Network) else np.asarray(g, dtype=float)
    xa, xb = efforts.x_a, efforts.x_b
    b, d, m = params.beta, params.delta, params.mu
    return (
        prices.p_a * xa + prices.p_b * xb
        - 0.5 * xa**2 - 0.5 * xb**2 - b * xa * xb
        + d * xa * (adj @ xa) + d * xb * (adj @ xb)
        + m * xa * (adj @ xb) + m * xb * (adj @ xa)
    )


def equilibrium_utilities_closed(params: GameParams, efforts: EffortProfile) -> np.ndarray:
    """Per-agent equilibrium utility ``(1+b)((xA+xB)/2)^2 + (1-b)((xA-xB)/2)^2``."""
    s = 0.5 * (efforts.x_a + efforts.x_b)
    d = 0.5 * (efforts.x_a - efforts.x_b)
    return (1 + params.beta) * s**2 + (1 - params.beta) * d**2


def quadratic_welfare(bundle: LeontiefBundle, p_a, p_b=None) -> float:
    """Welfare at the interior equilibrium as a quadratic form in the prices."""
    p_a = np.asarray(p_a, dtype=float)
    p_b = bundle.p_b0 if p_b is None else np.asarray(p_b, dtype=float)
    q, r = bundle.q_mat, bundle.r_mat
    return 0.25 * float(p_a @ q @ p_a - 2.0 * p_a @ r @ p_b + p_b @ q @ p_b)


def welfare_gradient(bundle: LeontiefBundle, p_a) -> np.ndarray:
    return 0.25 * (2.0 * bundle.q_mat @ np.asarray(p_a, dtype=float) - bundle.v_vec)


def welfare_at(bundle: LeontiefBundle, prices: PriceProfile):
    """Welfare at the non-negative equilibrium; returns ``(value, efforts, certificate)``."""
    eff, cert = nonneg_equilibrium(None, bundle.params, prices, bundle=bundle)
    u = utilities(bundle.adjacency, bundle.params, prices, eff)
    return float(u.sum()), eff, cert


def welfare_closed_form(bundle: LeontiefBundle, p_a, p_b0=None) -> Welfare:
    """``(pA'Q pA - v'pA + pB0'Q pB0)/4``, or direct summation when that premise fails.

    The quadratic form is only valid when the interior equilibrium is
    non-negative; otherwise utilities are summed at the constrained
    equilibrium and ``closed_form`` is False.
    """
    p_b0 = bundle.p_b0 if p_b0 is None else _vec(p_b0, bundle.n, name="p_b0")
    prices = PriceProfile(p_a, p_b0)
    _, ok = interior_equilibrium(bundle, prices)
    if ok:
        return Welfare(quadratic_welfare(bundle, prices.p_a, p_b0), True)
    value, _, _ = welfare_at(bundle, prices)
    return Welfare(value, False)


def aggregate_unsustainable(efforts: EffortProfile) -> float:
    return float(np.sum(efforts.x_b))


def k_zero(bundle: LeontiefBundle, p_b0, tau_b: float) -> float:
    """Right-hand side of the tolerance constraint rewritten as ``b_delta' pA >= k0``."""
    p_b0 = np.asarray(p_b0, dtype=float)
    return float(np.sum(bundle.m_sum @ p_b0) - 2.0 * tau_b)


def interior_aggregate_b(bundle: LeontiefBundle, p_a, p_b) -> float:
    """Aggregate B-effort from the interior formula (linear in prices)."""
    p_a = np.asarray(p_a, dtype=float)
    p_b = np.asarray(p_b, dtype=float)
    return 0.5 * float(np.sum(bundle.m_sum @ p_b) - bundle.b_delta @ p_a)


def evaluate_policies(bundle: LeontiefBundle, p_a_rows, p_b_rows=None):
    """Welfare and aggregate B-effort at the non-negative equilibrium, one row per policy.

    Rows whose interior equilibrium is non-negative use the closed forms;
    the rest go through :func:`nonneg_equilibrium`.
    """
    pa = np.atleast_2d(np.asarray(p_a_rows, dtype=float))
    pb = np.broadcast_to(bundle.p_b0 if p_b_rows is None else np.asarray(p_b_rows, dtype=float), pa.shape)
    s = (pa + pb) @ bundle.m_plus.T
    d = (pa - pb) @ bundle.m_minus.T
    xa, xb = 0.5 * (s + d), 0.5 * (s - d)
    scale = max(1.0, float(np.max(pa, initial=0.0)), float(np.max(pb, initial=0.0)))
    interior = np.all(xa >= -NONNEG_TOL * scale, axis=1) & np.all(xb >= -NONNEG_TOL * scale, axis=1)
    beta = bundle.params.beta
    welfare = np.sum((1 + beta) * (0.5 * s) ** 2 + (1 - beta) * (0.5 * d) ** 2, axis=1)
    agg = np.sum(np.maximum(xb, 0.0), axis=1)
    for k in np.flatnonzero(~interior):
        w, eff, _ = welfare_at(bundle, PriceProfile(pa[k], pb[k]))
        welfare[k] = w
        agg[k] = aggregate_unsustainable(eff)
    return welfare, agg, interior
