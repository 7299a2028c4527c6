"""Solver configuration records."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

from ..graph import min_eigenvalue

STOP_METRICS = ("eta_re", "eta_kkt")


@dataclass
class RestartPolicy:
    """Halpern restart thresholds on the weighted merit ||u^k - u_bar^{k+1}||.

    The reference merit r0 is the one of the first iteration after the last
    restart.  A restart fires on sufficient decay (merit <= sufficient_decay *
    r0), on a stall after necessary decay (merit <= necessary_decay * r0 while
    it grew since the previous iteration), or once ``long_run_cap`` iterations
    have passed since the last restart.
    ``long_run_fraction`` adds a cap relative to the total count: a restart
    also fires when the current epoch is that fraction of all iterations so
    far.  The first epoch is exempt.  None, the default, disables it.
    """

    enabled: bool = True
    sufficient_decay: float = 0.2
    necessary_decay: float = 0.8
    long_run_cap: int = 1000
    long_run_fraction: float | None = None


SIGMA_RULES = ("residual", "movement")


@dataclass
class SigmaPolicy:
    """sigma <- clip(sigma * ratio**exponent) at each restart.

    ``rule="residual"``: ratio = ||A^T z + s + v|| / ||other residual blocks||
    at the restart point.  ``rule="movement"``: ratio balances the x and (z, s)
    parts of the merit norm over the change between consecutive anchors.
    """

    enabled: bool = True
    clip_low: float = 1e-4
    clip_high: float = 1e4
    exponent: float = 0.5
    rule: str = "residual"

    def __post_init__(self):
        if self.rule not in SIGMA_RULES:
            raise ValueError(f"sigma rule must be one of {SIGMA_RULES}")


@dataclass
class SolverConfig:
    """Parameters shared by the dHPR-family solvers and the baselines.

    ``lambda_U=None`` resolves to exactly 1 - lambda_min(W).  The clip bounds of
    the sigma update are relative to the initial ``sigma``.
    """

    sigma: float = 1.0
    lambda_U: float | None = None
    restart: RestartPolicy = field(default_factory=RestartPolicy)
    sigma_update: SigmaPolicy = field(default_factory=SigmaPolicy)
    tol: float = 1e-8
    k_max: int = 20000
    trace_every: int = 1
    compute_v_each_iter: bool = True
    stop_metric: str = "eta_re"
    reference_value: float | None = None
    log_exchanges: bool = False
    log_capacity: int | None = None
    record_time: bool = False

    def __post_init__(self):
        if isinstance(self.restart, dict):
            self.restart = RestartPolicy(**self.restart)
        if isinstance(self.sigma_update, dict):
            self.sigma_update = SigmaPolicy(**self.sigma_update)
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.lambda_U is not None and not self.lambda_U > 0:
            raise ValueError("lambda_U must be positive")
        if self.k_max < 0 or self.trace_every < 1:
            raise ValueError("k_max must be >= 0 and trace_every >= 1")
        if self.stop_metric not in STOP_METRICS:
            raise ValueError(f"stop_metric must be one of {STOP_METRICS}")
        if not self.tol >= 0:
            raise ValueError("tol must be nonnegative")

    def without_restarts(self):
        """Copy with restarts and sigma updates switched off."""
        d = self.to_dict()
        d["restart"]["enabled"] = False
        d["sigma_update"]["enabled"] = False
        return SolverConfig.from_dict(d)

    def resolve_lambda_U(self, graph, slack=1e-12):
        lam_min = min_eigenvalue(graph.weights)
        floor = 1.0 - lam_min
        if self.lambda_U is None:
            return floor
        if self.lambda_U < floor - slack:
            raise ValueError(f"lambda_U={self.lambda_U} is below 1 - lambda_min(W) = {floor}")
        return float(self.lambda_U)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown solver option(s): {sorted(unknown)}")
        return cls(**d)
