"""Dual linearized HPR: the semi-proximal HPR with T = sigma (lambda_AU I - A_U^T A_U).

The full linearization decouples (z, w) in one step, so each iteration needs a
single exchange round, at the price of a much larger proximal term.
"""

from __future__ import annotations

import numpy as np

from ..linalg import LAMBDA_MARGIN, power_iteration
from ..simnet import Network
from .config import SolverConfig
from .dhpr import initial_state
from .hpr import Iterate, RunResult, check_finite, hpr_loop


def lambda_AU(problem, margin=LAMBDA_MARGIN):
    """Inflated estimate of lambda_max(A_U^T A_U), from the operator
    y -> A^T (A y) + ((I - W) (x) I_p) y on the agents' stacked copies."""
    N, p = problem.n_agents, problem.p
    W = problem.graph.weights

    def apply(y):
        Y = y.reshape(N, p)
        return (problem.AT_mul(problem.A_mul(Y)) + Y - W @ Y).reshape(-1)

    return power_iteration(apply, N * p) * (1.0 + margin)


def lhpr_sweep(u: Iterate, problem, net: Network, sigma, lam, need_v=True) -> Iterate:
    phi = u.x - sigma * (problem.AT_mul(u.z) + u.s)
    check_finite(phi, "phi")
    x_bar = problem.reg.prox(phi, sigma)
    check_finite(x_bar, "x_bar")
    v_bar = (phi - x_bar) / sigma if need_v else None
    p1 = 2.0 * x_bar - u.x
    agg = net.exchange(p1)
    s_bar = u.s + (p1 - agg) / (sigma * lam)
    check_finite(s_bar, "s_bar")
    t = sigma * lam
    xi = t * u.z + problem.A_mul(p1)
    t_rows = np.full(problem.n_agents, t)
    z_bar = (xi - problem.loss.prox(xi, t_rows)) / t
    check_finite(z_bar, "z_bar")
    return Iterate(z_bar, s_bar, v_bar, x_bar, phi)


def dual_lhpr_run(problem, config: SolverConfig | None = None, lam=None, initial=None, callback=None) -> RunResult:
    """Run dual L-HPR with the same Halpern, restart and stopping machinery as dHPR.

    ``lam`` defaults to :func:`lambda_AU`.  The returned result's ``lambda_U``
    field holds ``lam``.
    """
    config = config or SolverConfig()
    lam = lambda_AU(problem) if lam is None else float(lam)
    net = Network(problem.graph, log=config.log_exchanges, log_capacity=config.log_capacity)
    state = initial_state(problem, config, initial)

    def sweep(u, sigma, need_v):
        return lhpr_sweep(u, problem, net, sigma, lam, need_v)

    z_w = np.full(problem.n_agents, lam)
    trace, x_avg, bar, status = hpr_loop(problem, config, sweep, state, net, z_w, lam, "dual_lhpr", callback)
    return RunResult(trace, x_avg, state, bar, status, net, lam, config)
