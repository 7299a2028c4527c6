"""Decentralized proximal-gradient baselines: PG-EXTRA and NIDS.

Both use W_tilde = (I + W) / 2 and one exchange round per iteration.  Step sizes
are 1.2/L (PG-EXTRA) and 1.9/L (NIDS) with L = max_i lambda_A^i, the estimate of
max_i ||A_i^T A_i|| already carried by the problem.
"""

from __future__ import annotations

import time

import numpy as np

from ..metrics import eta_re
from ..simnet import Network
from .config import SolverConfig
from .hpr import DivergenceError, check_finite
from .trace import Trace, TraceRow

PG_EXTRA_STEP = 1.2
NIDS_STEP = 1.9


class BaselineResult:
    def __init__(self, trace, x, status, network, step, iterations):
        self.trace = trace
        self.x = x
        self.x_avg = x.mean(axis=0)
        self.status = status
        self.network = network
        self.step = step
        self.iterations = iterations

    @property
    def comm(self):
        return self.network.stats


def lipschitz_L(problem):
    return float(np.max(problem.lambda_A))


def _require_smooth(problem):
    if problem.loss.kind not in ("least_squares", "logistic"):
        raise ValueError(f"{problem.loss.kind!r} loss is not differentiable; baselines need a smooth f")


def _grad(problem, X):
    return problem.AT_mul(problem.loss.grad(problem.A_mul(X)))


class _Recorder:
    def __init__(self, name, problem, config, net):
        self.trace = Trace(name)
        self.problem = problem
        self.config = config
        self.net = net
        self.t0 = time.perf_counter()

    def record(self, k, X):
        """Append a row if due; returns True when the run should stop."""
        cfg = self.config
        if k % cfg.trace_every and k != cfg.k_max:
            return False
        er = eta_re(X, self.problem)
        wall = (time.perf_counter() - self.t0) * 1e3 if cfg.record_time else None
        st = self.net.stats
        self.trace.append(TraceRow(k, er, None, None, None, None, 0, st.rounds, st.scalars_sent, wall))
        return er <= cfg.tol


def _run(name, problem, config, step_factor, init, step):
    _require_smooth(problem)
    config = config or SolverConfig()
    net = Network(problem.graph, log=config.log_exchanges, log_capacity=config.log_capacity)
    alpha = step_factor / lipschitz_L(problem)
    rec = _Recorder(name, problem, config, net)
    status = "max_iter"
    X = np.zeros((problem.n_agents, problem.p))
    k = 0
    if config.k_max == 0:
        return BaselineResult(rec.trace, X, status, net, alpha, 0)
    ctx = init(X, alpha, net)
    X = ctx["x"]
    k = 1
    try:
        if rec.record(k, X):
            status = "converged"
        while status != "converged" and k < config.k_max:
            X = step(ctx, alpha, net)
            k += 1
            if rec.record(k, X):
                status = "converged"
    except DivergenceError as exc:
        exc.k = k + 1
        raise
    return BaselineResult(rec.trace, X, status, net, alpha, k)


def pg_extra_run(problem, config: SolverConfig | None = None) -> BaselineResult:
    """PG-EXTRA from x^0 = 0.

    x^{1/2} = W x^0 - a grad(x^0),  x^1 = prox_{a r}(x^{1/2});
    x^{k+3/2} = W x^{k+1} + x^{k+1/2} - W_tilde x^k - a [grad(x^{k+1}) - grad(x^k)],
    x^{k+2} = prox_{a r}(x^{k+3/2}).  W x^k is reused from the previous round.
    """

    def init(X0, a, net):
        g0 = _grad(problem, X0)
        WX0 = net.exchange(X0)
        half = WX0 - a * g0
        X1 = problem.reg.prox(half, a)
        check_finite(X1, "x")
        return {"x": X1, "x_prev": X0, "Wx_prev": WX0, "g_prev": g0, "half": half}

    def step(c, a, net):
        X = c["x"]
        g = _grad(problem, X)
        WX = net.exchange(X)
        wt_prev = 0.5 * (c["x_prev"] + c["Wx_prev"])
        half = WX + c["half"] - wt_prev - a * (g - c["g_prev"])
        X_new = problem.reg.prox(half, a)
        check_finite(X_new, "x")
        c.update(x=X_new, x_prev=X, Wx_prev=WX, g_prev=g, half=half)
        return X_new

    return _run("pg_extra", problem, config, PG_EXTRA_STEP, init, step)


def nids_run(problem, config: SolverConfig | None = None) -> BaselineResult:
    """NIDS from x^0 = 0.

    z^1 = x^0 - a grad(x^0),  x^1 = prox_{a r}(z^1);
    z^{k+1} = z^k - x^k + W_tilde (2 x^k - x^{k-1} - a grad(x^k) + a grad(x^{k-1})),
    x^{k+1} = prox_{a r}(z^{k+1}).
    """

    def init(X0, a, net):
        g0 = _grad(problem, X0)
        Z1 = X0 - a * g0
        X1 = problem.reg.prox(Z1, a)
        check_finite(X1, "x")
        return {"x": X1, "x_prev": X0, "g_prev": g0, "z": Z1}

    def step(c, a, net):
        X = c["x"]
        g = _grad(problem, X)
        P = 2.0 * X - c["x_prev"] - a * g + a * c["g_prev"]
        WP = net.exchange(P)
        Z = c["z"] - X + 0.5 * (P + WP)
        X_new = problem.reg.prox(Z, a)
        check_finite(X_new, "x")
        c.update(x=X_new, x_prev=X, g_prev=g, z=Z)
        return X_new

    return _run("nids", problem, config, NIDS_STEP, init, step)
