"""Undirected interaction networks: ingestion, components, spectral radius."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, NumericalFailureError

POWER_ITER_CAP = 10_000
POWER_ITER_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Network:
    """Simple undirected graph on ``n`` agents held as a dense 0/1 matrix."""

    n: int
    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=float)
        if self.n < 1:
            raise ValueError("a network needs at least one agent")
        if a.shape != (self.n, self.n):
            raise ValueError(f"adjacency must be {self.n}x{self.n}, got {a.shape}")
        if not np.all((a == 0) | (a == 1)):
            raise ValueError("adjacency must be binary")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency must have a zero diagonal")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency))
        return list(zip(i.tolist(), j.tolist()))

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def subgraph(self, nodes: Sequence[int]) -> "Network":
        idx = np.asarray(nodes, dtype=int)
        return Network(len(idx), self.adjacency[np.ix_(idx, idx)])

    def permuted(self, perm: Sequence[int]) -> "Network":
        """Relabel so that new node k is old node ``perm[k]``."""
        return self.subgraph(perm)


@dataclass(frozen=True)
class ComponentDecomposition:
    components: tuple[tuple[int, ...], ...]

    @property
    def c(self) -> int:
        return len(self.components)

    def labels(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=int)
        for k, comp in enumerate(self.components):
            out[list(comp)] = k
        return out


def load_network(edge_list: Iterable[Sequence[int]], n: int) -> Network:
    n = int(n)
    if n < 1:
        raise ValueError("n must be positive")
    adj = np.zeros((n, n))
    for edge in edge_list:
        i, j = (int(edge[0]), int(edge[1]))
        if i == j:
            raise ValueError(f"self-loop at node {i}")
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
        adj[i, j] = adj[j, i] = 1.0
    return Network(n, adj)


def read_network(path, n: int | None = None) -> Network:
    """Read a ``src,dst`` CSV edge list or a ``{"n": N, "edges": [...]}`` JSON file."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text())
        if "edges" not in data:
            raise ConfigError(f"{path}: missing field 'edges'")
        n_file = data.get("n", n)
        if n_file is None:
            raise ConfigError(f"{path}: missing field 'n'")
        return load_network(data["edges"], int(n_file))
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"src", "dst"} <= set(reader.fieldnames):
            raise ConfigError(f"{path}: edge CSV needs a 'src,dst' header")
        edges = [(int(row["src"]), int(row["dst"])) for row in reader]
    if n is None:
        n = 1 + max((max(e) for e in edges), default=0)
    return load_network(edges, n)


def write_network(g: Network, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps({"n": g.n, "edges": [list(e) for e in g.edges]}))
        return
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["src", "dst"])
        w.writerows(g.edges)


def connected_components(g: Network) -> ComponentDecomposition:
    """Components ordered by their smallest vertex; vertices sorted within each."""
    seen = np.zeros(g.n, dtype=bool)
    nbrs = [np.flatnonzero(row) for row in g.adjacency]
    comps = []
    for root in range(g.n):
        if seen[root]:
            continue
        seen[root] = True
        stack, comp = [root], [root]
        while stack:
            u = stack.pop()
            for w in nbrs[u]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(int(w))
                    comp.append(int(w))
        comps.append(tuple(sorted(comp)))
    return ComponentDecomposition(tuple(comps))


def _power_iteration(a: np.ndarray, tol: float, cap: int) -> float:
    # A + I shifts the spectrum so the Perron root strictly dominates even on
    # bipartite graphs, where -rho is also an eigenvalue.
    m = a + np.eye(a.shape[0])
    x = np.ones(a.shape[0]) / np.sqrt(a.shape[0])
    lam = 0.0
    for _ in range(cap):
        y = m @ x
        lam_new = float(x @ y)
        norm = np.linalg.norm(y)
        x = y / norm
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new - 1.0
        lam = lam_new
    raise NumericalFailureError(
        "power iteration did not converge", diagnostics={"last_iterate": x, "estimate": lam - 1.0}
    )


def spectral_radius(g: Network, tol: float = POWER_ITER_TOL, cap: int = POWER_ITER_CAP) -> float:
    """Largest adjacency eigenvalue, by power iteration on each component."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    rho = 0.0
    for comp in connected_components(g).components:
        if len(comp) == 1:
            continue
        sub = g.adjacency[np.ix_(comp, comp)]
        rho = max(rho, _power_iteration(sub, tol, cap))
    return rho


def min_degree(g: Network) -> int:
    return int(g.degrees().min())
