"""Problem instances: synthetic generators, LIBSVM ingestion, partitioning, bundles.

All randomness comes from ``numpy.random.Philox`` seeded with the caller's seed,
so instances are reproducible bit for bit on a given numpy version.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .graph import WeightedGraph, make_graph
from .linalg import lambda_max_AAT
from .prox import LossBatch, LossSpec, RegularizerBatch, RegularizerSpec

FAMILIES = ("lasso", "group_lasso", "logistic")
BUNDLE_FORMAT = "dhpr-bundle/1"


class ParseError(ValueError):
    """Malformed LIBSVM input."""


def _rng(seed):
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True, eq=False)
class AgentProblem:
    A: np.ndarray
    loss: LossSpec
    reg: RegularizerSpec
    lambda_A: float

    @property
    def m(self):
        return self.A.shape[0]


def make_agent(A, loss, reg, lambda_A=None) -> AgentProblem:
    A = np.asarray(A, dtype=np.float64)
    if loss.kind != "zero" and loss.b.shape != (A.shape[0],):
        raise ValueError("loss data does not match the number of rows of A")
    if reg.kind == "sparse_group" and reg.dim != A.shape[1]:
        raise ValueError("groups do not cover the feature dimension")
    if lambda_A is None:
        # any positive value is admissible when A = 0
        lambda_A = lambda_max_AAT(A) if np.any(A) else 1.0
    if lambda_A <= 0:
        raise ValueError("lambda_A must be positive")
    return AgentProblem(A, loss, reg, float(lambda_A))


@dataclass(eq=False)
class DistributedProblem:
    """N agents sharing the decision variable x in R^p over a communication graph."""

    agents: list
    graph: WeightedGraph
    p: int
    family: str = "custom"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.agents) != self.graph.n_agents:
            raise ValueError("one agent per graph node required")
        if any(a.A.shape[1] != self.p for a in self.agents):
            raise ValueError("all agents must share the feature dimension p")

    @property
    def n_agents(self):
        return len(self.agents)

    @cached_property
    def sizes(self):
        return np.array([a.m for a in self.agents], dtype=np.int_)

    @cached_property
    def A_stack(self):
        """(N, m_max, p) zero-padded stack of the local data matrices."""
        out = np.zeros((self.n_agents, int(self.sizes.max()), self.p))
        for i, a in enumerate(self.agents):
            out[i, : a.m] = a.A
        return out

    @cached_property
    def lambda_A(self):
        return np.array([a.lambda_A for a in self.agents])

    @cached_property
    def loss(self) -> LossBatch:
        return LossBatch([a.loss for a in self.agents], self.sizes, int(self.sizes.max()))

    @cached_property
    def reg(self) -> RegularizerBatch:
        return RegularizerBatch([a.reg for a in self.agents])

    def A_mul(self, X):
        """Row i: A_i x_i, returned as (N, m_max)."""
        return np.matmul(self.A_stack, X[:, :, None])[:, :, 0]

    def AT_mul(self, Z):
        """Row i: A_i^T z_i, returned as (N, p)."""
        return np.matmul(Z[:, None, :], self.A_stack)[:, 0, :]

    def objective(self, x) -> float:
        """Centralized primal objective sum_i f_i(A_i x) + r_i(x)."""
        X = np.broadcast_to(x, (self.n_agents, self.p))
        return self.loss.value(self.A_mul(np.ascontiguousarray(X))) + self.reg.value(X)


def _theta(A, b):
    return 0.01 * float(np.abs(A.T @ b).max()) if A.size else 0.0


def random_groups(p, rng, n_groups=None):
    """Adjacent groups with random sizes from g-1 uniform cut points in {1..p-1}."""
    g = max(1, int(round(p / 10))) if n_groups is None else int(n_groups)
    g = min(g, p)
    cuts = np.sort(rng.choice(np.arange(1, p), size=g - 1, replace=False)) if g > 1 else np.empty(0, int)
    bounds = np.concatenate([[0], cuts, [p]]).astype(int)
    groups = tuple(np.arange(bounds[l], bounds[l + 1]) for l in range(g))
    weights = tuple(float(np.sqrt(len(G))) for G in groups)
    return groups, weights


def _regularizer(kind, theta, groups=None, weights=None):
    if kind == "l1":
        return RegularizerSpec("l1", theta)
    return RegularizerSpec("sparse_group", theta, theta, groups, weights)


def _default_graph(N, graph, seed):
    if graph is None:
        return make_graph("random", N, 0.5, seed)
    if graph.n_agents != N:
        raise ValueError("graph size does not match N")
    return graph


def gen_regression(N, m, p, delta=1e-2, reg_kind="l1", seed=0, graph=None) -> DistributedProblem:
    """Synthetic (group) LASSO instance: b_i = A_i 1_p + delta e_i.

    Parameters
    ----------
    N, m, p : int
        Agents, rows per agent, features.
    delta : float
        Noise level.
    reg_kind : {"l1", "sparse_group"}
    seed : int
    graph : WeightedGraph, optional
        Defaults to a random graph with connectivity 0.5 drawn from ``seed``.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if reg_kind not in ("l1", "sparse_group"):
        raise ValueError(f"unknown regularizer kind {reg_kind!r}")
    graph = _default_graph(N, graph, seed)
    rng = _rng(seed)
    x_true = np.ones(p)
    data = []
    for _ in range(N):
        A = rng.standard_normal((m, p))
        e = rng.standard_normal(m)
        data.append((A, A @ x_true + delta * e))
    groups = weights = None
    if reg_kind == "sparse_group":
        groups, weights = random_groups(p, rng)
    agents = [
        make_agent(A, LossSpec("least_squares", b), _regularizer(reg_kind, _theta(A, b), groups, weights))
        for A, b in data
    ]
    family = "lasso" if reg_kind == "l1" else "group_lasso"
    meta = {"source": "synthetic", "N": N, "m": m, "p": p, "delta": delta, "seed": seed}
    return DistributedProblem(agents, graph, p, family, meta)


def gen_logistic(N, m, p, seed=0, graph=None) -> DistributedProblem:
    """Synthetic l1-regularized logistic regression; classes drawn from N(+-0.1, 1)."""
    graph = _default_graph(N, graph, seed)
    rng = _rng(seed)
    agents = []
    for _ in range(N):
        n_pos = (m + 1) // 2
        b = np.concatenate([np.ones(n_pos), -np.ones(m - n_pos)])
        A = rng.standard_normal((m, p)) + 0.1 * b[:, None]
        agents.append(make_agent(A, LossSpec("logistic", b), RegularizerSpec("l1", _theta(A, b))))
    meta = {"source": "synthetic", "N": N, "m": m, "p": p, "seed": seed}
    return DistributedProblem(agents, graph, p, "logistic", meta)


@dataclass(eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray

    @property
    def n_samples(self):
        return self.X.shape[0]


def load_libsvm(path, scale=False) -> Dataset:
    """Parse a LIBSVM text file into a dense matrix and label vector.

    Lines read ``label idx:val idx:val ...`` with 1-based, strictly increasing
    indices.  With ``scale=True`` every column is mapped linearly onto [-1, 1].
    """
    labels = []
    rows = []
    n_feat = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip().replace("−", "-")
            if not line:
                continue
            tokens = line.split()
            try:
                labels.append(float(tokens[0]))
            except ValueError:
                raise ParseError(f"line {lineno}: bad label {tokens[0]!r}") from None
            row = {}
            last = 0
            for tok in tokens[1:]:
                idx, sep, val = tok.partition(":")
                try:
                    j = int(idx)
                    v = float(val)
                except ValueError:
                    raise ParseError(f"line {lineno}: bad feature {tok!r}") from None
                if not sep or j < 1:
                    raise ParseError(f"line {lineno}: bad feature {tok!r}")
                if j <= last:
                    raise ParseError(f"line {lineno}: indices not strictly increasing at {j}")
                last = j
                row[j - 1] = v
            n_feat = max(n_feat, last)
            rows.append(row)
    if not rows:
        raise ParseError(f"{path}: no samples")
    X = np.zeros((len(rows), n_feat))
    for r, row in enumerate(rows):
        for j, v in row.items():
            X[r, j] = v
    if scale:
        lo, hi = X.min(axis=0), X.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        X = np.where(hi > lo, 2.0 * (X - lo) / span - 1.0, 0.0)
    return Dataset(X, np.asarray(labels))


def partition(n_samples, N, seed=0):
    """Random split of ``range(n_samples)`` into N parts whose sizes differ by at most one."""
    if isinstance(n_samples, Dataset):
        n_samples = n_samples.n_samples
    if n_samples < N:
        raise ValueError(f"{n_samples} samples cannot be spread over {N} agents")
    perm = _rng(seed).permutation(n_samples)
    return [np.sort(part) for part in np.array_split(perm, N)]


def problem_from_dataset(ds: Dataset, family, N, graph=None, seed=0) -> DistributedProblem:
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    graph = _default_graph(N, graph, seed)
    parts = partition(ds, N, seed)
    y = ds.y
    if family == "logistic":
        classes = np.unique(y)
        if len(classes) != 2:
            raise ValueError("logistic regression needs exactly two label values")
        y = np.where(y == classes[1], 1.0, -1.0)
    groups = weights = None
    if family == "group_lasso":
        groups, weights = random_groups(ds.X.shape[1], _rng(seed + 1))
    agents = []
    for idx in parts:
        A, b = ds.X[idx], y[idx]
        theta = _theta(A, b)
        if family == "logistic":
            agents.append(make_agent(A, LossSpec("logistic", b), RegularizerSpec("l1", theta)))
        else:
            kind = "l1" if family == "lasso" else "sparse_group"
            agents.append(make_agent(A, LossSpec("least_squares", b), _regularizer(kind, theta, groups, weights)))
    return DistributedProblem(agents, graph, ds.X.shape[1], family, {"source": "libsvm", "N": N, "seed": seed})


def save_bundle(problem: DistributedProblem, directory):
    """Write ``problem.json`` plus one ``agent_<i>.csv`` (1-based) per agent.

    Each CSV row is ``b_l, a_l1, ..., a_lp``.
    """
    os.makedirs(directory, exist_ok=True)
    ref = problem.agents[0].reg
    doc = {
        "format": BUNDLE_FORMAT,
        "family": problem.family,
        "n_agents": problem.n_agents,
        "p": problem.p,
        "loss": problem.agents[0].loss.kind,
        "reg": ref.kind,
        "agents": [
            {"index": i + 1, "m": a.m, "theta1": a.reg.theta1, "theta2": a.reg.theta2, "lambda_A": a.lambda_A}
            for i, a in enumerate(problem.agents)
        ],
        "groups": [[int(j) + 1 for j in g] for g in ref.groups] if ref.kind == "sparse_group" else None,
        "group_weights": list(ref.group_weights) if ref.kind == "sparse_group" else None,
        "graph": json.loads(problem.graph.to_json()),
        "meta": problem.meta,
    }
    with open(os.path.join(directory, "problem.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    for i, a in enumerate(problem.agents):
        b = a.loss.b if a.loss.kind != "zero" else np.zeros(a.m)
        with open(os.path.join(directory, f"agent_{i + 1}.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            for l in range(a.m):
                w.writerow([repr(float(b[l]))] + [repr(float(v)) for v in a.A[l]])


def load_bundle(directory) -> DistributedProblem:
    with open(os.path.join(directory, "problem.json"), encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != BUNDLE_FORMAT:
        raise ValueError(f"{directory}: not a {BUNDLE_FORMAT} bundle")
    graph = WeightedGraph.from_json(json.dumps(doc["graph"]))
    groups = weights = ()
    if doc["reg"] == "sparse_group":
        groups = tuple(np.asarray(g, dtype=np.int_) - 1 for g in doc["groups"])
        weights = tuple(doc["group_weights"])
    agents = []
    for spec in doc["agents"]:
        rows = []
        with open(os.path.join(directory, f"agent_{spec['index']}.csv"), newline="", encoding="utf-8") as fh:
            for rec in csv.reader(fh):
                rows.append([float(v) for v in rec])
        arr = np.asarray(rows, dtype=np.float64).reshape(spec["m"], doc["p"] + 1)
        b, A = arr[:, 0], arr[:, 1:]
        loss = LossSpec(doc["loss"], b if doc["loss"] != "zero" else np.zeros(0))
        if doc["reg"] == "l1":
            reg = RegularizerSpec("l1", spec["theta1"])
        else:
            reg = RegularizerSpec("sparse_group", spec["theta1"], spec["theta2"], groups, weights)
        agents.append(make_agent(A, loss, reg, spec["lambda_A"]))
    return DistributedProblem(agents, graph, doc["p"], doc["family"], doc.get("meta", {}))
