"""Coupled sustainable/unsustainable activity network game and price-intervention solvers."""

from .componentwise import ComponentAggregates, RelaxationResult, component_aggregates, p0_star, solve_ptilde
from .errors import (
    AssumptionViolationError,
    ConfigError,
    InfeasibleProblemError,
    NetGameError,
    NumericalFailureError,
)
from .feasibility import Regime, RegimeReport, classify_regime
from .game import (
    Branch,
    EffortProfile,
    EquilibriumCertificate,
    GameParams,
    LeontiefBundle,
    PriceProfile,
    aggregate_unsustainable,
    centrality,
    check_assumption1,
    check_assumption2prime,
    interior_equilibrium,
    k_zero,
    leontief_bundle,
    nonneg_equilibrium,
    utilities,
    welfare_closed_form,
)
from .network import ComponentDecomposition, Network, connected_components, load_network, min_degree, spectral_radius
from .oracle import best_response_fixed_point, finite_diff_gradient, grid_search_pr, subset_minimal_s, vertex_enumeration_p
from .oracle import vertex_enumeration_ptilde
from .problems import Certificate, PolicyResult, ProblemP, ProblemPR, ProblemPTilde
from .redistribution import Recommendation, budget_penalty_check, recommend_policy, solve_pr, vanish_penalty
from .solver_p import solve_p, solve_p0, thm4_compare

__all__ = [name for name in dir() if not name.startswith("_")]
