"""The dHPR iteration in its executed per-agent form and the run driver."""

from __future__ import annotations

from ..simnet import Network
from .config import SolverConfig
from .hpr import (
    HPRState,
    Iterate,
    RunResult,
    check_finite,
    halpern_step,
    hpr_loop,
    load_checkpoint,
)


def dhpr_sweep(u: Iterate, problem, net: Network, sigma, lambda_U, need_v=True) -> Iterate:
    """One pass of agent updates producing the bar-iterate (two exchange rounds).

    Per agent i:
        phi    = x - sigma (A^T z + s)
        x_bar  = prox_{sigma r}(phi),  v_bar = (phi - x_bar) / sigma
        s_half = s + (P1 - W P1) / (sigma lambda_U),  P1 = 2 x_bar - x
        xi     = A [P1 - sigma (s_half - s)] + sigma lambda_A z
        z_bar  = (xi - prox_{sigma lambda_A f}(xi)) / (sigma lambda_A)
        s_bar  = s_half + (P2 - W P2) / lambda_U,  P2 = A^T (z - z_bar)
    """
    lam_A = problem.lambda_A
    phi = u.x - sigma * (problem.AT_mul(u.z) + u.s)
    check_finite(phi, "phi")
    x_bar = problem.reg.prox(phi, sigma)
    check_finite(x_bar, "x_bar")
    v_bar = (phi - x_bar) / sigma if need_v else None

    p1 = 2.0 * x_bar - u.x
    agg1 = net.exchange(p1)
    s_half = u.s + (p1 - agg1) / (sigma * lambda_U)
    check_finite(s_half, "s_half")

    t = sigma * lam_A
    xi = problem.A_mul(p1 - sigma * (s_half - u.s)) + t[:, None] * u.z
    check_finite(xi, "xi")
    z_bar = (xi - problem.loss.prox(xi, t)) / t[:, None]
    check_finite(z_bar, "z_bar")

    p2 = problem.AT_mul(u.z - z_bar)
    agg2 = net.exchange(p2)
    s_bar = s_half + (p2 - agg2) / lambda_U
    check_finite(s_bar, "s_bar")
    return Iterate(z_bar, s_bar, v_bar, x_bar, phi)


def dhpr_iteration(u: Iterate, anchor: Iterate, k_eff, problem, net, sigma, lambda_U, need_v=True):
    """One full dHPR iteration; returns (u_next, bar)."""
    bar = dhpr_sweep(u, problem, net, sigma, lambda_U, need_v)
    return halpern_step(anchor, u, bar, k_eff), bar


def initial_state(problem, config: SolverConfig, initial=None) -> HPRState:
    u = Iterate.zeros(problem) if initial is None else initial.copy()
    u.phi = None
    return HPRState(u=u, anchor=u.copy(), sigma=config.sigma)


def run_dhpr(problem, config: SolverConfig | None = None, initial=None, resume=None, callback=None) -> RunResult:
    """Run dHPR until the stop metric reaches ``config.tol`` or ``k_max`` iterations.

    Parameters
    ----------
    problem : DistributedProblem
    config : SolverConfig, optional
    initial : Iterate, optional
        Starting point (default zero).  It is also the first Halpern anchor.
    resume : str or path, optional
        Checkpoint written by :func:`save_checkpoint`; its state, counters and
        sigma replace ``initial``.  ``config`` still governs stopping.
    callback : callable, optional
        See :func:`hpr_loop`.
    """
    config = config or SolverConfig()
    lambda_U = config.resolve_lambda_U(problem.graph)
    net = Network(problem.graph, log=config.log_exchanges, log_capacity=config.log_capacity)
    if resume is not None:
        state, _, comm, lambda_U = load_checkpoint(resume, problem)
        net.stats.rounds = int(comm["rounds"])
        net.stats.scalars_sent = int(comm["scalars_sent"])
    else:
        state = initial_state(problem, config, initial)

    def sweep(u, sigma, need_v):
        return dhpr_sweep(u, problem, net, sigma, lambda_U, need_v)

    trace, x_avg, bar, status = hpr_loop(
        problem, config, sweep, state, net, problem.lambda_A, lambda_U, "dhpr", callback
    )
    return RunResult(trace, x_avg, state, bar, status, net, lambda_U, config)
