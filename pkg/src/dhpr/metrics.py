"""KKT residual map, relative residuals, dual objective error and complexity-bound constants.

States are network-wide arrays with one row per agent: ``z`` is (N, m_max)
zero-padded, ``s``, ``v`` and ``x`` are (N, p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dense import DenseOperators
from .linalg import power_iteration
from .prox import ConjugateUnavailable, prox_reg


def consensus_norm(X, graph):
    """||U x||, using x^T ((I - W) (x) I_p) x = sum over edges a_ij ||x_i - x_j||^2.

    The edge form avoids the cancellation of the quadratic form near consensus.
    """
    I, J, a = graph.edge_arrays
    D = X[I] - X[J]
    return math.sqrt(float(a @ np.einsum("ij,ij->i", D, D)))


@dataclass
class ResidualReport:
    R_vec_norms: tuple
    eta_re: float
    eta_kkt: float
    dual_gap: float | None
    consensus_err: float

    @property
    def kkt_norm(self):
        return math.sqrt(sum(r * r for r in self.R_vec_norms))


def kkt_blocks(z, s, v, x, problem):
    """The four blocks of the residual map R at (z, s, v, x), with unit prox steps.

    Returns the block norms plus the norms that appear in the relative residual.
    """
    Ax = problem.A_mul(x)
    r1 = problem.loss.prox(z + Ax, 1.0) - Ax
    r3 = problem.reg.prox(v + x, 1.0) - x
    r4 = problem.AT_mul(z) + s + v
    cons = consensus_norm(x, problem.graph)
    norms = (float(np.linalg.norm(r1)), cons, float(np.linalg.norm(r3)), float(np.linalg.norm(r4)))
    aux = {
        "z": float(np.linalg.norm(z)),
        "s": float(np.linalg.norm(s)),
        "v": float(np.linalg.norm(v)),
        "x": float(np.linalg.norm(x)),
        "Ax": float(np.linalg.norm(Ax)),
    }
    return norms, aux


def eta_kkt_from(norms, aux):
    n1, n2, n3, n4 = norms
    return max(
        n1 / (1.0 + aux["z"] + aux["Ax"]),
        n2 / (1.0 + aux["x"]),
        n3 / (1.0 + aux["v"] + aux["x"]),
        n4 / (1.0 + aux["z"] + aux["s"] + aux["v"]),
    )


def eta_kkt(z, s, v, x, problem) -> float:
    """Relative KKT residual: the max of the four normalized residual blocks."""
    return eta_kkt_from(*kkt_blocks(z, s, v, x, problem))


def eta_re(X, problem) -> float:
    """Relative residual at the agents' local copies ``X``.

    First term: prox-gradient residual of the centralized problem at the
    average x_bar, using the prox of sum_i r_i with unit step.  Second term:
    consensus error ||U x|| / (1 + ||x||).
    """
    X = np.asarray(X, dtype=np.float64)
    xbar = X.mean(axis=0)
    Xb = np.broadcast_to(xbar, X.shape)
    G = problem.AT_mul(problem.loss.grad(problem.A_mul(np.ascontiguousarray(Xb)))).sum(axis=0)
    pr = prox_reg(problem.reg.combined(), xbar - G, 1.0)
    t1 = np.linalg.norm(xbar - pr) / (1.0 + np.linalg.norm(xbar) + np.linalg.norm(G))
    t2 = consensus_norm(X, problem.graph) / (1.0 + np.linalg.norm(X))
    return float(max(t1, t2))


def dual_value(z, v, problem) -> float:
    """f*(z) + r*(v); raises ConjugateUnavailable for unsupported kinds."""
    return problem.loss.conjugate(z) + problem.reg.conjugate(v)


def dual_objective_error(z, v, reference_value, problem):
    """f*(z) + r*(v) minus the optimal dual value; None when unavailable."""
    try:
        return dual_value(z, v, problem) - reference_value
    except ConjugateUnavailable:
        return None


def kkt_residual(z, s, v, x, problem, reference_value=None) -> ResidualReport:
    norms, aux = kkt_blocks(z, s, v, x, problem)
    gap = None
    if reference_value is not None:
        gap = dual_objective_error(z, v, reference_value, problem)
    return ResidualReport(norms, eta_re(x, problem), eta_kkt_from(norms, aux), gap, norms[1])


@dataclass
class BoundConstants:
    R0: float
    A_U_norm: float
    sqrtT_norm: float
    x_star_norm: float
    sigma: float

    @property
    def kkt_constant(self):
        s = self.sigma
        return (s * self.A_U_norm + 1.0) / math.sqrt(s) + self.sqrtT_norm

    def bound_kkt(self, k):
        """Upper bound on ||R(u_bar^{k+1})||."""
        return self.kkt_constant * self.R0 / (k + 1)

    def dual_lower(self, k):
        return -(self.x_star_norm / math.sqrt(self.sigma)) * self.R0 / (k + 1)

    def dual_upper(self, k):
        return (3.0 * self.R0 + self.x_star_norm / math.sqrt(self.sigma)) * self.R0 / (k + 1)


def theorem2_constants(problem, sigma, lambda_U, u0, u_star, ops=None) -> BoundConstants:
    """Constants of the O(1/k) bounds for a restart-free run.

    ``u0`` and ``u_star`` are (z, w, v, x) in stacked w-coordinates
    (see :class:`DenseOperators`).
    """
    ops = ops or DenseOperators(problem, sigma, lambda_U)
    dz, dw, _, dx = (np.asarray(a) - np.asarray(b) for a, b in zip(u0, u_star))
    R0 = math.sqrt(max(ops.m_norm_sq(dz, dw, dx), 0.0))
    AU = ops.A_U
    au2 = power_iteration(lambda y: AU @ (AU.T @ y), AU.shape[0], tol=1e-13, max_iter=20000)
    T = ops.T
    t_max = power_iteration(lambda y: T @ y, T.shape[0], tol=1e-13, max_iter=20000)
    return BoundConstants(
        R0=R0,
        A_U_norm=math.sqrt(au2),
        sqrtT_norm=math.sqrt(max(t_max, 0.0)),
        x_star_norm=float(np.linalg.norm(u_star[3])),
        sigma=float(sigma),
    )
