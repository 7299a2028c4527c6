"""Communication topologies and Metropolis mixing matrices."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

KINDS = ("line", "random", "complete")


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected connected graph with a symmetric doubly stochastic weight matrix.

    Agents are 0-based internally.  ``edges`` holds sorted pairs ``(i, j)`` with
    ``i < j``.
    """

    n_agents: int
    edges: tuple[tuple[int, int], ...]
    weights: np.ndarray
    degree: tuple[int, ...]
    kind: str = "custom"
    seed: int | None = None
    _csr: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        W = self.weights
        indptr = [0]
        indices = []
        vals = []
        for i in range(self.n_agents):
            nz = np.flatnonzero(W[i])
            indices.extend(nz.tolist())
            vals.extend(W[i, nz].tolist())
            indptr.append(len(indices))
        csr = (
            np.asarray(indptr, dtype=np.int_),
            np.asarray(indices, dtype=np.int_),
            np.asarray(vals, dtype=np.float64),
        )
        object.__setattr__(self, "_csr", csr)

    @property
    def csr(self):
        """(indptr, indices, weights) of W with self-loops, columns ascending."""
        return self._csr

    def neighbors(self, i: int) -> list[int]:
        indptr, indices, _ = self._csr
        return [j for j in indices[indptr[i]:indptr[i + 1]].tolist() if j != i]

    @cached_property
    def edge_arrays(self):
        """(i, j, a_ij) for every undirected edge, as arrays."""
        if not self.edges:
            return np.empty(0, np.int_), np.empty(0, np.int_), np.empty(0)
        E = np.asarray(self.edges, dtype=np.int_)
        return E[:, 0], E[:, 1], self.weights[E[:, 0], E[:, 1]]

    @property
    def laplacian(self) -> np.ndarray:
        """I - W, the weighted consensus Laplacian."""
        return np.eye(self.n_agents) - self.weights

    def to_json(self) -> str:
        doc = {
            "n": self.n_agents,
            "kind": self.kind,
            "seed": self.seed,
            "edges": [[i + 1, j + 1] for i, j in self.edges],
            "weights": [float(v) for v in self.weights.ravel()],
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "WeightedGraph":
        doc = json.loads(text)
        n = int(doc["n"])
        edges = [(int(i) - 1, int(j) - 1) for i, j in doc["edges"]]
        g = metropolis_weights(edges, n, kind=doc.get("kind", "custom"), seed=doc.get("seed"))
        if "weights" in doc:
            W = np.array([float(v) for v in doc["weights"]]).reshape(n, n)
            if not np.array_equal(W, g.weights):
                raise ValueError("stored weights disagree with the Metropolis rule for the stored edges")
        return g


def _normalize_edges(edges, n):
    out = set()
    for i, j in edges:
        i, j = int(i), int(j)
        if i == j:
            raise ValueError(f"self-loop on agent {i}")
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i}, {j}) out of range for {n} agents")
        out.add((min(i, j), max(i, j)))
    return tuple(sorted(out))


def is_connected(edges, n: int) -> bool:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    comps = n
    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            comps -= 1
    return comps == 1


def _random_spanning_tree(n, rng):
    # Wilson's algorithm on K_n: uniform over all spanning trees
    in_tree = [False] * n
    nxt = [-1] * n
    root = int(rng.integers(n))
    in_tree[root] = True
    for start in range(n):
        u = start
        while not in_tree[u]:
            v = int(rng.integers(n - 1))
            nxt[u] = v if v < u else v + 1
            u = nxt[u]
        u = start
        while not in_tree[u]:
            in_tree[u] = True
            u = nxt[u]
    return {(min(i, nxt[i]), max(i, nxt[i])) for i in range(n) if i != root}


def random_edge_count(n: int, connectivity: float) -> int:
    # round half away from zero so that e.g. 0.5*20*19/2 = 95 exactly
    return int(np.floor(connectivity * n * (n - 1) / 2 + 0.5))


def build_topology(kind: str, n: int, connectivity: float = 0.5, seed: int = 0):
    """Edge set of a connected undirected graph on ``n`` agents.

    Parameters
    ----------
    kind : {"line", "random", "complete"}
    n : int
        Number of agents, at least 2.
    connectivity : float
        Fraction of the ``n(n-1)/2`` possible edges (random kind only).
    seed : int
        Seed for the random kind.

    Returns
    -------
    tuple of (i, j) pairs, 0-based with i < j, sorted.
    """
    if n < 2:
        raise ValueError("need at least 2 agents")
    if kind == "line":
        return tuple((i, i + 1) for i in range(n - 1))
    if kind == "complete":
        return tuple((i, j) for i in range(n) for j in range(i + 1, n))
    if kind != "random":
        raise ValueError(f"unknown topology kind {kind!r}")
    if not 0 < connectivity <= 1:
        raise ValueError("connectivity must lie in (0, 1]")
    target = random_edge_count(n, connectivity)
    if target < n - 1:
        raise ValueError(
            f"{target} edges cannot connect {n} agents (need at least {n - 1})"
        )
    rng = np.random.Generator(np.random.Philox(seed))
    edges = _random_spanning_tree(n, rng)
    rest = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in edges]
    extra = rng.choice(len(rest), size=target - len(edges), replace=False)
    edges.update(rest[k] for k in sorted(extra.tolist()))
    return tuple(sorted(edges))


def metropolis_weights(edges, n: int, kind: str = "custom", seed=None) -> WeightedGraph:
    """Metropolis mixing matrix with the common denominator ``max_i d_i + 1``."""
    edges = _normalize_edges(edges, n)
    if not is_connected(edges, n):
        raise ValueError("edge set is not connected")
    deg = [0] * n
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
    denom = max(deg) + 1
    W = np.zeros((n, n))
    for i, j in edges:
        W[i, j] = W[j, i] = 1.0 / denom
    for i in range(n):
        W[i, i] = 1.0 - deg[i] / denom
    return WeightedGraph(n, edges, W, tuple(deg), kind=kind, seed=seed)


def make_graph(kind: str, n: int, connectivity: float = 0.5, seed: int = 0) -> WeightedGraph:
    edges = build_topology(kind, n, connectivity, seed)
    return metropolis_weights(edges, n, kind=kind, seed=seed if kind == "random" else None)


def min_eigenvalue(W) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.allclose(W, W.T, rtol=0.0, atol=1e-14 * max(1.0, np.abs(W).max())):
        raise ValueError("matrix is not symmetric")
    return float(np.linalg.eigvalsh(0.5 * (W + W.T))[0])


def sqrt_laplacian(graph: WeightedGraph) -> np.ndarray:
    """Symmetric square root of I - W (only needed by the dense reference forms)."""
    vals, vecs = np.linalg.eigh(graph.laplacian)
    # the null eigenvalue comes out at rounding level; its square root would not
    tiny = 64 * np.finfo(np.float64).eps * max(1.0, float(np.abs(vals).max()))
    vals = np.where(vals <= tiny, 0.0, vals)
    return (vecs * np.sqrt(vals)) @ vecs.T
