"""Synchronous round-based message passing over a weighted graph.

Agents only see each other through :meth:`Network.exchange`, which returns for
every agent the W-weighted sum of its own and its neighbours' payloads.  Sums run
over neighbours in ascending index order, so results are bitwise reproducible.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import kernels
from .graph import WeightedGraph


@dataclass
class CommStats:
    rounds: int = 0
    scalars_sent: int = 0
    edges: tuple = ()

    @property
    def edge_messages(self):
        """Messages carried per undirected edge (one each way per round)."""
        return {e: 2 * self.rounds for e in self.edges}

    def copy(self):
        return CommStats(self.rounds, self.scalars_sent, self.edges)


@dataclass(frozen=True, eq=False)
class ExchangeRecord:
    round_index: int
    payloads: np.ndarray
    aggregates: np.ndarray


class LocalityViolation(RuntimeError):
    pass


class Network:
    """Exchange harness for one run.

    Parameters
    ----------
    graph : WeightedGraph
    log : bool
        Keep :class:`ExchangeRecord` copies of every round for auditing.
    log_capacity : int, optional
        Keep only the most recent ``log_capacity`` records.
    """

    def __init__(self, graph: WeightedGraph, log=False, log_capacity=None):
        self.graph = graph
        self.stats = CommStats(edges=graph.edges)
        self.log = deque(maxlen=log_capacity) if log else None
        self._indptr, self._indices, self._weights = graph.csr

    def exchange(self, payloads):
        """One communication round; returns the (N, d) array of aggregates."""
        X = np.ascontiguousarray(payloads, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] != self.graph.n_agents:
            raise ValueError(
                f"expected one payload row per agent ({self.graph.n_agents}), got shape {X.shape}"
            )
        out = kernels.neighbor_mix(self._indptr, self._indices, self._weights, X)
        st = self.stats
        st.rounds += 1
        st.scalars_sent += X.shape[0] * X.shape[1]
        if self.log is not None:
            self.log.append(ExchangeRecord(st.rounds, X.copy(), out.copy()))
        return out

    def write_round_log(self, path):
        """CSV with columns round, agent (1-based), payload_norm."""
        if self.log is None:
            raise ValueError("exchange logging is disabled")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["round", "agent", "payload_norm"])
            for rec in self.log:
                for i, row in enumerate(rec.payloads):
                    w.writerow([rec.round_index, i + 1, repr(float(np.linalg.norm(row)))])


@dataclass
class AuditReport:
    passed: bool
    rounds_checked: int
    violations: list

    def check(self):
        if not self.passed:
            raise LocalityViolation(
                f"{len(self.violations)} locality violations, first: {self.violations[0]}"
            )
        return self


def locality_audit(records, graph: WeightedGraph, rtol=1e-12) -> AuditReport:
    """Recompute every logged aggregate from neighbour payloads only.

    An aggregate that cannot be reproduced from the payloads of the agent and its
    graph neighbours (W[i, j] > 0) is reported as a violation.
    """
    W = graph.weights
    mask = W > 0
    violations = []
    n = 0
    for rec in records:
        n += 1
        for i in range(graph.n_agents):
            nbrs = np.flatnonzero(mask[i])
            expect = np.zeros(rec.payloads.shape[1])
            for j in nbrs:
                expect += W[i, j] * rec.payloads[j]
            scale = 1.0 + np.abs(rec.payloads).max()
            err = np.abs(rec.aggregates[i] - expect).max() if expect.size else 0.0
            if err > rtol * scale:
                violations.append((rec.round_index, i, float(err)))
    return AuditReport(not violations, n, violations)
