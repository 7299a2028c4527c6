"""Dense reference forms of the method, in (z, w, v, x) coordinates.

These materialize U = sqrt(I - W) (x) I_p and serve as oracles for the executed
per-agent form: the w-form sweep (w-half, z, w), the joint (z, w) minimization
that the sweep is equivalent to, and the generic semi-proximal HPR step for an
arbitrary proximal matrix T.  Desk scale only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dense import DenseOperators


@dataclass
class WFormState:
    """Stacked vectors: z in R^m, w, v, x in R^{Np} (agent-major)."""

    z: np.ndarray
    w: np.ndarray
    v: np.ndarray
    x: np.ndarray

    @classmethod
    def zeros(cls, ops: DenseOperators):
        return cls(np.zeros(ops.m), np.zeros(ops.Np), np.zeros(ops.Np), np.zeros(ops.Np))

    def copy(self):
        return WFormState(self.z.copy(), self.w.copy(), self.v.copy(), self.x.copy())


def _sigma_lam(ops):
    return ops.sigma * ops.lam_rows


def v_x_update(u: WFormState, ops: DenseOperators):
    """v_bar = prox_{r*/sigma}(x/sigma - A^T z - U^T w) via Moreau; then x_bar."""
    sigma = ops.sigma
    q = u.x / sigma - ops.A.T @ u.z - ops.U.T @ u.w
    v_bar = q - ops.prox_r(sigma * q, sigma) / sigma
    x_bar = u.x - sigma * (ops.A.T @ u.z + ops.U.T @ u.w + v_bar)
    return v_bar, x_bar


def sgs_sweep(z, w, v_bar, x_bar, ops: DenseOperators):
    """Symmetric Gauss-Seidel pass over (w, z, w); returns (w_half, z_bar, w_bar)."""
    sigma, lam_U = ops.sigma, ops.lambda_U
    A, U = ops.A, ops.U
    w_half = w + U @ (x_bar - sigma * (A.T @ z + U.T @ w + v_bar)) / (sigma * lam_U)
    xi = A @ x_bar - sigma * (A @ (U.T @ w_half + v_bar)) + sigma * (ops.S_z @ z)
    t = _sigma_lam(ops)
    z_bar = (xi - ops.prox_f(xi, t)) / t
    w_bar = w + U @ (x_bar - sigma * (A.T @ z_bar + U.T @ w + v_bar)) / (sigma * lam_U)
    return w_half, z_bar, w_bar


def _stacked_b(ops):
    return np.concatenate([a.loss.b for a in ops.problem.agents])


def joint_zw_solve(z, w, v_bar, x_bar, ops: DenseOperators, T):
    """argmin_{z,w} L_sigma(z, w, v_bar; x_bar) + 1/2 ||(z, w) - (z^k, w^k)||_T^2.

    Solved from the normal equations; needs a quadratic f* (least-squares loss,
    or the zero loss whose conjugate pins z = 0).
    """
    kind = ops.problem.loss.kind
    sigma = ops.sigma
    AU = ops.A_U
    m = ops.m
    yk = np.concatenate([z, w])
    rhs = AU.T @ x_bar - sigma * (AU.T @ v_bar) + T @ yk
    H = sigma * (AU.T @ AU) + T
    if kind == "least_squares":
        H = H.copy()
        H[np.arange(m), np.arange(m)] += 1.0
        rhs[:m] -= _stacked_b(ops)
        idx = slice(None)
    elif kind == "zero":
        idx = slice(m, None)
    else:
        raise ValueError(f"joint solve needs a quadratic conjugate, got loss {kind!r}")
    Hs = H[idx, idx]
    if np.linalg.cond(Hs) > 1e12:
        raise np.linalg.LinAlgError("joint (z, w) system is singular; check the lambda choices")
    y = np.zeros_like(yk)
    y[idx] = np.linalg.solve(Hs, rhs[idx])
    return y[:m], y[m:]


def sgs_joint_oracle(z, w, v_bar, x_bar, ops: DenseOperators):
    """The joint solve with T = S + S_hat; equals :func:`sgs_sweep`'s (z_bar, w_bar)."""
    return joint_zw_solve(z, w, v_bar, x_bar, ops, ops.T)


def _halpern(anchor, u, bar, k):
    a = 1.0 / (k + 2)
    b = (k + 1.0) / (k + 2)
    return WFormState(
        *(a * u0 + b * (2.0 * ub - uk) for u0, uk, ub in zip(
            (anchor.z, anchor.w, anchor.v, anchor.x), (u.z, u.w, u.v, u.x), (bar.z, bar.w, bar.v, bar.x)
        ))
    )


def wform_iteration(u: WFormState, anchor: WFormState, k, ops: DenseOperators):
    """One w-form iteration; returns (u_next, bar, w_half)."""
    v_bar, x_bar = v_x_update(u, ops)
    w_half, z_bar, w_bar = sgs_sweep(u.z, u.w, v_bar, x_bar, ops)
    bar = WFormState(z_bar, w_bar, v_bar, x_bar)
    return _halpern(anchor, u, bar, k), bar, w_half


def sphpr_iteration(u: WFormState, anchor: WFormState, k, ops: DenseOperators, T):
    """Semi-proximal HPR step with an arbitrary PSD proximal matrix T."""
    v_bar, x_bar = v_x_update(u, ops)
    z_bar, w_bar = joint_zw_solve(u.z, u.w, v_bar, x_bar, ops, T)
    bar = WFormState(z_bar, w_bar, v_bar, x_bar)
    return _halpern(anchor, u, bar, k), bar


def run_wform(problem, sigma, lambda_U, n_iter, initial: WFormState | None = None, ops=None):
    """Plain (restart-free) w-form run; returns the lists of u^k and bar u^k."""
    ops = ops or DenseOperators(problem, sigma, lambda_U)
    u = WFormState.zeros(ops) if initial is None else initial.copy()
    anchor = u.copy()
    us, bars = [u], []
    for k in range(n_iter):
        u, bar, _ = wform_iteration(u, anchor, k, ops)
        us.append(u)
        bars.append(bar)
    return us, bars
