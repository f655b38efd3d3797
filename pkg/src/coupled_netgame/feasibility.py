"""Can raising sustainable prices lower aggregate unsustainable effort?"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import AssumptionViolationError
from .game import GameParams, check_assumption2prime, leontief_bundle
from .network import Network, connected_components


class Regime(str, Enum):
    S_PLUS = "S_PLUS"
    S_MINUS = "S_MINUS"
    NETWORK_DEPENDENT = "NETWORK_DEPENDENT"


# Weakest first: a single bad component spoils the aggregate label.
_STRENGTH = {Regime.S_MINUS: 0, Regime.NETWORK_DEPENDENT: 1, Regime.S_PLUS: 2}


@dataclass(frozen=True)
class RegimeReport:
    regime: Regime
    triggered_condition: str
    b_delta_signs: np.ndarray
    essentially_feasible_p: bool
    essentially_feasible_pr: bool | None
    component_regimes: tuple = field(default_factory=tuple)

    def summary(self) -> str:
        pr = "n/a" if self.essentially_feasible_pr is None else str(self.essentially_feasible_pr)
        return (
            f"regime: {self.regime.value} ({self.triggered_condition})\n"
            f"essentially feasible (price raise): {self.essentially_feasible_p}\n"
            f"essentially feasible (redistribution): {pr}\n"
            f"centrality signs: {' '.join('+' if s > 0 else '-' if s < 0 else '0' for s in self.b_delta_signs)}"
        )


def s_minus_threshold(params: GameParams, d_min: int) -> float:
    """Cross-effect level above which raising A-prices always backfires."""
    b, d = params.beta, params.delta
    by_degree = np.inf if d_min == 0 else b / d_min
    return max(2 * b * d / (1 + b * b), by_degree)


def _classify_connected(g: Network, params: GameParams, b_delta: np.ndarray):
    m = params.mu
    if check_assumption2prime(params):
        return Regime.S_PLUS, "mu < beta*delta"
    if m > s_minus_threshold(params, int(g.degrees().min()) if g.n > 1 else 0):
        return Regime.S_MINUS, "mu > max(2*beta*delta/(1+beta^2), beta/d_min)"
    if np.all(b_delta > 0):
        return Regime.NETWORK_DEPENDENT, "centrality entrywise positive"
    if np.any(b_delta > 0):
        return Regime.NETWORK_DEPENDENT, "centrality has mixed signs"
    return Regime.NETWORK_DEPENDENT, "centrality entrywise non-positive"


def classify_regime(g: Network, params: GameParams, rho_max=None) -> RegimeReport:
    """Regime of the network game and essential feasibility of both problems.

    Disconnected inputs are classified per component and the weakest
    component label is reported. ``essentially_feasible_pr`` is None when
    no penalty bound is supplied.
    """
    if params.mu >= params.delta:
        raise AssumptionViolationError(
            f"cross-activity effect must be below intra-activity effect: mu={params.mu} >= delta={params.delta}"
        )
    bundle = leontief_bundle(g, params, np.ones(g.n))
    b_delta = np.array(bundle.b_delta)
    per_comp = []
    for comp in connected_components(g).components:
        sub = g.subgraph(comp)
        per_comp.append(_classify_connected(sub, params, b_delta[list(comp)]))
    regime, tag = min(per_comp, key=lambda rt: _STRENGTH[rt[0]])
    if len(per_comp) > 1:
        feas_p = bool(np.any(b_delta > 0))
    elif regime is Regime.S_PLUS:
        feas_p = True
    elif regime is Regime.S_MINUS:
        feas_p = False
    else:
        feas_p = bool(np.any(b_delta > 0))
    feas_pr = None if rho_max is None else bool(np.max(np.asarray(rho_max, dtype=float)) > 0)
    return RegimeReport(
        regime=regime,
        triggered_condition=tag,
        b_delta_signs=np.sign(b_delta),
        essentially_feasible_p=feas_p,
        essentially_feasible_pr=feas_pr,
        component_regimes=tuple(r.value for r, _ in per_comp),
    )
