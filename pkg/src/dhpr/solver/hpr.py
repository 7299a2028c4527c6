"""Halpern scaffolding shared by dHPR and dual L-HPR: iterates, the anchored
update, restarts with sigma updates, tracing and checkpoints."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass

import numpy as np

from ..metrics import kkt_blocks, kkt_residual
from ..simnet import CommStats, Network
from .config import SolverConfig
from .trace import Trace, TraceRow

CHECKPOINT_FORMAT = "dhpr-checkpoint/1"


class DivergenceError(ArithmeticError):
    """A non-finite value appeared in an iterate."""

    def __init__(self, agent, step, k=None):
        self.agent = agent
        self.step = step
        self.k = k
        where = f" at iteration {k}" if k is not None else ""
        super().__init__(f"non-finite value in {step} of agent {agent + 1}{where}")


def check_finite(arr, step):
    if not np.isfinite(arr).all():
        bad = np.flatnonzero(~np.isfinite(arr).reshape(arr.shape[0], -1).all(axis=1))
        raise DivergenceError(int(bad[0]), step)


@dataclass
class Iterate:
    """Network-wide (z, s, v, x), one row per agent; z is zero-padded to m_max.

    ``v`` may be None on a bar-iterate whose v was not needed (it is recoverable
    from ``phi``).
    """

    z: np.ndarray
    s: np.ndarray
    v: np.ndarray | None
    x: np.ndarray
    phi: np.ndarray | None = None

    @classmethod
    def zeros(cls, problem):
        N, p = problem.n_agents, problem.p
        return cls(np.zeros((N, int(problem.sizes.max()))), np.zeros((N, p)), np.zeros((N, p)), np.zeros((N, p)))

    def copy(self):
        c = lambda a: None if a is None else a.copy()  # noqa: E731
        return Iterate(self.z.copy(), self.s.copy(), c(self.v), self.x.copy(), c(self.phi))

    def ensure_v(self, sigma):
        if self.v is None:
            self.v = (self.phi - self.x) / sigma
        return self.v


def halpern_step(anchor: Iterate, u: Iterate, bar: Iterate, k_eff: int) -> Iterate:
    """u+ = anchor/(k+2) + (k+1)/(k+2) * (2 bar - u), k counted since the last restart."""
    a = 1.0 / (k_eff + 2)
    b = (k_eff + 1.0) / (k_eff + 2)

    def blk(u0, uk, ub):
        return a * u0 + b * (2.0 * ub - uk)

    v = u.v if bar.v is None else blk(anchor.v, u.v, bar.v)
    return Iterate(blk(anchor.z, u.z, bar.z), blk(anchor.s, u.s, bar.s), v, blk(anchor.x, u.x, bar.x))


@dataclass
class HPRState:
    u: Iterate
    anchor: Iterate
    sigma: float
    k: int = 0
    k_eff: int = 0
    merit_restart: float = 0.0
    merit_prev: float = 0.0


def merit(u, bar, sigma, z_weights, s_weight):
    """sqrt(sigma sum_i w_i ||dz_i||^2 + sigma w_s ||ds||^2 + ||dx||^2 / sigma)."""
    dz = u.z - bar.z
    ds = u.s - bar.s
    dx = u.x - bar.x
    val = sigma * float(z_weights @ np.einsum("ij,ij->i", dz, dz))
    val += sigma * s_weight * float(np.sum(ds * ds)) + float(np.sum(dx * dx)) / sigma
    return math.sqrt(val)


def should_restart(policy, state, r):
    """Decide a restart from the merit ``r`` of the iteration just taken.

    The reference merit is the one of the first iteration of the current epoch,
    so it is measured with the epoch's sigma.
    """
    if state.k_eff == 1:
        state.merit_restart = r
        state.merit_prev = r
        return False
    r0 = state.merit_restart
    fire = (
        r <= policy.sufficient_decay * r0
        or (r <= policy.necessary_decay * r0 and r > state.merit_prev)
        or state.k_eff >= policy.long_run_cap
        or (
            policy.long_run_fraction is not None
            and state.k > state.k_eff
            and state.k_eff >= policy.long_run_fraction * state.k
        )
    )
    state.merit_prev = r
    return fire


def sigma_proposal(bar, problem, sigma):
    """sigma * primal_res / dual_res, with primal_res = ||A^T z + s + v||."""
    norms, _ = kkt_blocks(bar.z, bar.s, bar.v, bar.x, problem)
    primal = norms[3]
    dual = math.sqrt(norms[0] ** 2 + norms[1] ** 2 + norms[2] ** 2)
    if primal == 0.0 or dual == 0.0:
        return None
    return primal / dual


def sigma_movement(bar, anchor, sigma, z_weights, s_weight):
    """Ratio that balances the x and (z, s) parts of the merit over one restart
    epoch: ||dx|| / (sigma sqrt(sum_i w_i ||dz_i||^2 + w_s ||ds||^2))."""
    dz = bar.z - anchor.z
    ds = bar.s - anchor.s
    dx = bar.x - anchor.x
    dy = math.sqrt(float(z_weights @ np.einsum("ij,ij->i", dz, dz)) + s_weight * float(np.sum(ds * ds)))
    nx = float(np.linalg.norm(dx))
    if dy == 0.0 or nx == 0.0:
        return None
    return nx / (sigma * dy)


def update_sigma(policy, sigma, sigma0, ratio):
    if ratio is None:
        return sigma
    new = sigma * ratio ** policy.exponent
    return float(min(max(new, policy.clip_low * sigma0), policy.clip_high * sigma0))


@dataclass
class RunResult:
    trace: Trace
    x_avg: np.ndarray
    state: HPRState
    bar: Iterate | None
    status: str
    network: Network
    lambda_U: float
    config: SolverConfig

    @property
    def iterations(self):
        return self.state.k

    @property
    def comm(self) -> CommStats:
        return self.network.stats


def hpr_loop(problem, config: SolverConfig, sweep, state: HPRState, net, z_weights, s_weight, name, callback=None):
    """Drive ``sweep`` with Halpern steps, restarts, tracing and stopping.

    ``sweep(u, sigma, need_v)`` returns the bar-iterate for one iteration.
    ``callback(info)``, if given, receives a dict with k, k_eff, u, bar, u_next
    and anchor after every iteration (arrays are not copied).
    """
    trace = Trace(name)
    t0 = time.perf_counter()
    sigma0 = config.sigma
    status = "max_iter"
    bar = None
    while state.k < config.k_max:
        k_next = state.k + 1
        due = k_next % config.trace_every == 0 or k_next == config.k_max
        bar = sweep(state.u, state.sigma, config.compute_v_each_iter or due)
        k_eff = state.k_eff
        u_next = halpern_step(state.anchor, state.u, bar, k_eff)
        for name_, arr in (("z", u_next.z), ("s", u_next.s), ("x", u_next.x)):
            try:
                check_finite(arr, f"halpern step ({name_})")
            except DivergenceError as exc:
                exc.k = k_next
                raise
        if callback is not None:
            callback({"k": state.k, "k_eff": k_eff, "u": state.u, "bar": bar, "u_next": u_next, "anchor": state.anchor})
        r = merit(state.u, bar, state.sigma, z_weights, s_weight) if config.restart.enabled else 0.0
        state.k = k_next
        state.k_eff += 1
        state.u = u_next
        restarted = False
        if config.restart.enabled and should_restart(config.restart, state, r):
            restarted = True
            bar.ensure_v(state.sigma)
            if config.sigma_update.enabled:
                if config.sigma_update.rule == "residual":
                    ratio = sigma_proposal(bar, problem, state.sigma)
                else:
                    ratio = sigma_movement(bar, state.anchor, state.sigma, z_weights, s_weight)
                new_sigma = update_sigma(config.sigma_update, state.sigma, sigma0, ratio)
            else:
                new_sigma = state.sigma
            state.anchor = bar.copy()
            state.anchor.phi = None
            state.u = state.anchor.copy()
            state.k_eff = 0
        stop = False
        if due:
            bar.ensure_v(state.sigma)
            rep = kkt_residual(bar.z, bar.s, bar.v, bar.x, problem, config.reference_value)
            wall = (time.perf_counter() - t0) * 1e3 if config.record_time else None
            trace.append(
                TraceRow(
                    iter=state.k,
                    eta_re=rep.eta_re,
                    eta_kkt=rep.eta_kkt,
                    kkt_norm=rep.kkt_norm,
                    dual_gap=rep.dual_gap,
                    sigma=state.sigma,
                    restart_flag=int(restarted),
                    comm_rounds_cum=net.stats.rounds,
                    scalars_sent_cum=net.stats.scalars_sent,
                    wall_ms=wall,
                )
            )
            metric = rep.eta_re if config.stop_metric == "eta_re" else rep.eta_kkt
            stop = metric <= config.tol
        if restarted:
            state.sigma = new_sigma
        if stop:
            status = "converged"
            break
    x_avg = (bar.x if bar is not None else state.u.x).mean(axis=0)
    return trace, x_avg, bar, status


# --- checkpoints --------------------------------------------------------------------


def _iterate_to_json(it: Iterate, sizes):
    return {
        "z": [row[:m].tolist() for row, m in zip(it.z, sizes)],
        "s": it.s.tolist(),
        "v": None if it.v is None else it.v.tolist(),
        "x": it.x.tolist(),
    }


def _iterate_from_json(d, sizes):
    N = len(sizes)
    z = np.zeros((N, int(max(sizes))))
    for i, row in enumerate(d["z"]):
        if len(row) != sizes[i]:
            raise ValueError("checkpoint does not match the problem's row counts")
        z[i, : sizes[i]] = row
    v = None if d["v"] is None else np.asarray(d["v"], dtype=np.float64)
    return Iterate(z, np.asarray(d["s"], dtype=np.float64), v, np.asarray(d["x"], dtype=np.float64))


def save_checkpoint(path, result: RunResult, problem, solver="dhpr"):
    """JSON snapshot of the per-agent states, config and iteration counters."""
    st = result.state
    sizes = [int(m) for m in problem.sizes]
    doc = {
        "format": CHECKPOINT_FORMAT,
        "solver": solver,
        "k": st.k,
        "k_eff": st.k_eff,
        "sigma": st.sigma,
        "lambda_U": result.lambda_U,
        "merit_restart": st.merit_restart,
        "merit_prev": st.merit_prev,
        "comm": {"rounds": result.comm.rounds, "scalars_sent": result.comm.scalars_sent},
        "config": result.config.to_dict(),
        "u": _iterate_to_json(st.u, sizes),
        "anchor": _iterate_to_json(st.anchor, sizes),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_checkpoint(path, problem):
    """Returns (HPRState, SolverConfig, comm dict, lambda_U)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a checkpoint file")
    sizes = [int(m) for m in problem.sizes]
    state = HPRState(
        u=_iterate_from_json(doc["u"], sizes),
        anchor=_iterate_from_json(doc["anchor"], sizes),
        sigma=float(doc["sigma"]),
        k=int(doc["k"]),
        k_eff=int(doc["k_eff"]),
        merit_restart=float(doc["merit_restart"]),
        merit_prev=float(doc["merit_prev"]),
    )
    return state, SolverConfig.from_dict(doc["config"]), doc["comm"], float(doc["lambda_U"])
