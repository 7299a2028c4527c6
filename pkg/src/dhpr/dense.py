"""Assembled network-wide matrices for desk-scale reference computations.

The distributed solvers never form these.  They back the w-form iteration, the
joint (z, w) subproblem solve and the complexity-bound constants, all of which
work in stacked coordinates: z in R^m (agents' rows concatenated, no padding),
and w, v, x in R^{Np} (agent-major).
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .graph import sqrt_laplacian
from .prox import prox_loss

MAX_DENSE_DIM = 4000


class DenseOperators:
    """Dense A, U = sqrt(I - W) (x) I_p and the semi-proximal matrices S, S_hat, T."""

    def __init__(self, problem, sigma, lambda_U):
        N, p = problem.n_agents, problem.p
        self.problem = problem
        self.sigma = float(sigma)
        self.lambda_U = float(lambda_U)
        self.N, self.p = N, p
        self.sizes = problem.sizes
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        self.m = int(self.offsets[-1])
        self.Np = N * p
        if self.m + 3 * self.Np > MAX_DENSE_DIM:
            raise ValueError(f"instance too large for dense assembly (m + 3Np = {self.m + 3 * self.Np})")
        A = np.zeros((self.m, self.Np))
        for i, a in enumerate(problem.agents):
            A[self.offsets[i]:self.offsets[i + 1], i * p:(i + 1) * p] = a.A
        self.A = A
        self.U = np.kron(sqrt_laplacian(problem.graph), np.eye(p))
        self.L = np.kron(problem.graph.laplacian, np.eye(p))
        self.lam_rows = np.repeat(problem.lambda_A, self.sizes)

    # --- coordinate conversions -------------------------------------------------
    def pack_z(self, Z):
        return np.concatenate([Z[i, :m] for i, m in enumerate(self.sizes)])

    def unpack_z(self, z):
        out = np.zeros((self.N, int(self.sizes.max())))
        for i, m in enumerate(self.sizes):
            out[i, :m] = z[self.offsets[i]:self.offsets[i + 1]]
        return out

    def pack(self, X):
        return np.asarray(X, dtype=np.float64).reshape(-1)

    def unpack(self, x):
        return np.asarray(x).reshape(self.N, self.p)

    # --- operators ----------------------------------------------------------------
    @cached_property
    def A_U(self):
        """[A^T  U^T], mapping (z, w) to A^T z + U^T w."""
        return np.hstack([self.A.T, self.U.T])

    @cached_property
    def S_z(self):
        return np.diag(self.lam_rows) - self.A @ self.A.T

    @cached_property
    def S_w(self):
        return self.lambda_U * np.eye(self.Np) - self.U @ self.U

    @cached_property
    def S(self):
        out = np.zeros((self.m + self.Np, self.m + self.Np))
        out[: self.m, : self.m] = self.sigma * self.S_z
        out[self.m:, self.m:] = self.sigma * self.S_w
        return out

    @cached_property
    def S_hat(self):
        out = np.zeros((self.m + self.Np, self.m + self.Np))
        AU = self.A @ self.U
        # (S_w + U^2)^{-1} = I / lambda_U
        out[: self.m, : self.m] = (self.sigma / self.lambda_U) * (AU @ AU.T)
        return out

    @cached_property
    def T(self):
        return self.S + self.S_hat

    @cached_property
    def M(self):
        """The (z, w, v, x) metric operator; the v block is zero."""
        n_y = self.m + self.Np
        dim = n_y + 2 * self.Np
        out = np.zeros((dim, dim))
        out[:n_y, :n_y] = self.sigma * self.A_U.T @ self.A_U + self.T
        out[:n_y, n_y + self.Np:] = -self.A_U.T
        out[n_y + self.Np:, :n_y] = -self.A_U
        out[n_y + self.Np:, n_y + self.Np:] = np.eye(self.Np) / self.sigma
        return out

    def m_norm_sq(self, z, w, x):
        """||(z, w, v, x)||_M^2 via the closed form (v does not enter)."""
        y = np.concatenate([z, w])
        r = np.sqrt(self.sigma) * (self.A_U @ y) - x / np.sqrt(self.sigma)
        return float(r @ r + y @ (self.T @ y))

    # --- proximal maps in stacked coordinates --------------------------------------
    def prox_f(self, xi, t_rows):
        out = np.empty_like(xi)
        for i, a in enumerate(self.problem.agents):
            sl = slice(self.offsets[i], self.offsets[i + 1])
            t = t_rows[sl]
            if a.loss.kind != "zero" and not np.all(t == t[0]):
                raise ValueError("prox step must be constant within an agent")
            out[sl] = prox_loss(a.loss, xi[sl], float(t[0]) if len(t) else 1.0)
        return out

    def prox_r(self, xi, t):
        return self.pack(self.problem.reg.prox(self.unpack(xi).copy(), t))
