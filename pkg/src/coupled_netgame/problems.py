"""Problem instances and the result record shared by all policy solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


def _arr(x, n=None, name="vector"):
    a = np.array(x, dtype=float).reshape(-1)
    if n is not None and a.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got {a.shape[0]}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ProblemP:
    """Raise sustainable prices within ``[p_a0, p_max]`` subject to ``sum xB <= tau_b``."""

    p_a0: np.ndarray
    p_max: np.ndarray
    p_b0: np.ndarray
    tau_b: float

    def __post_init__(self):
        p_a0 = _arr(self.p_a0, name="p_a0")
        n = len(p_a0)
        p_max = _arr(self.p_max, n, "p_max")
        p_b0 = _arr(self.p_b0, n, "p_b0")
        if np.any(p_max < p_a0):
            raise ValueError("p_max must be >= p_a0 entrywise")
        if np.any(p_a0 < 0) or np.any(p_b0 < 0):
            raise ValueError("prices must be non-negative")
        if self.tau_b < 0:
            raise ValueError("tau_b must be non-negative")
        object.__setattr__(self, "p_a0", p_a0)
        object.__setattr__(self, "p_max", p_max)
        object.__setattr__(self, "p_b0", p_b0)
        object.__setattr__(self, "tau_b", float(self.tau_b))

    @property
    def n(self):
        return len(self.p_a0)


@dataclass(frozen=True, eq=False)
class ProblemPR:
    """Joint premiums and penalties: ``pB in [p_b0 - rho_max, p_b0]``, ``pA + pB <= p_a0 + p_b0 + budget``."""

    p_a0: np.ndarray
    p_b0: np.ndarray
    rho_max: np.ndarray
    budget: np.ndarray
    tau_b: float

    def __post_init__(self):
        p_a0 = _arr(self.p_a0, name="p_a0")
        n = len(p_a0)
        p_b0 = _arr(self.p_b0, n, "p_b0")
        rho = _arr(self.rho_max, n, "rho_max")
        budget = _arr(self.budget, n, "budget")
        if np.any(rho < 0) or np.any(rho > p_b0):
            raise ValueError("rho_max must lie in [0, p_b0] entrywise")
        if np.any(budget < 0):
            raise ValueError("budget must be non-negative")
        if self.tau_b < 0:
            raise ValueError("tau_b must be non-negative")
        for k, v in dict(p_a0=p_a0, p_b0=p_b0, rho_max=rho, budget=budget).items():
            object.__setattr__(self, k, v)
        object.__setattr__(self, "tau_b", float(self.tau_b))

    @property
    def n(self):
        return len(self.p_a0)


@dataclass(frozen=True, eq=False)
class ProblemPTilde:
    """Component-wise uniform A-prices; bounds are given per agent and must be uniform per component."""

    p_a0: np.ndarray
    p_max: np.ndarray
    p_b0: np.ndarray
    tau_b: float

    def __post_init__(self):
        inner = ProblemP(self.p_a0, self.p_max, self.p_b0, self.tau_b)
        for k in ("p_a0", "p_max", "p_b0", "tau_b"):
            object.__setattr__(self, k, getattr(inner, k))

    @property
    def n(self):
        return len(self.p_a0)


class Certificate(str, Enum):
    P0_BASELINE = "P0_BASELINE"
    THM4_PMAX = "THM4_PMAX"
    THM4_PA0 = "THM4_PA0"
    COR1_IA = "COR1_IA"
    COR1_IB = "COR1_IB"
    COR1_IC = "COR1_IC"
    COR1_II = "COR1_II"
    PRUNED_SEARCH = "PRUNED_SEARCH"
    BRUTE_FORCE = "BRUTE_FORCE"
    TRIVIAL_BOX = "TRIVIAL_BOX"
    THM5_MAXRHO = "THM5_MAXRHO"
    PROP3_STATUS_QUO = "PROP3_STATUS_QUO"
    GRID_SEARCH = "GRID_SEARCH"
    COR2_P0STAR = "COR2_P0STAR"
    THM6_EXACT = "THM6_EXACT"
    THM6_RELAXED = "THM6_RELAXED"


@dataclass(frozen=True, eq=False)
class PolicyResult:
    policy_a: np.ndarray
    policy_b: np.ndarray
    welfare: float
    agg_unsustainable: float
    certificate: Certificate
    optimality_exact: bool
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "policy_a": self.policy_a.tolist(),
            "policy_b": self.policy_b.tolist(),
            "welfare": self.welfare,
            "agg_unsustainable": self.agg_unsustainable,
            "certificate": self.certificate.value,
            "optimality_exact": self.optimality_exact,
        }
