"""dHPR, its dense reference forms, dual L-HPR and the NIDS / PG-EXTRA baselines."""

from .baselines import BaselineResult, lipschitz_L, nids_run, pg_extra_run
from .config import RestartPolicy, SigmaPolicy, SolverConfig
from .dhpr import dhpr_iteration, dhpr_sweep, run_dhpr
from .hpr import DivergenceError, HPRState, Iterate, RunResult, halpern_step, load_checkpoint, save_checkpoint
from .lhpr import dual_lhpr_run, lambda_AU, lhpr_sweep
from .reference import ReferenceSolution, centralized_reference, dhpr_reference
from .trace import COLUMNS, Trace, TraceRow

SOLVERS = ("dhpr", "dual_lhpr", "nids", "pg_extra")

__all__ = [
    "COLUMNS",
    "SOLVERS",
    "BaselineResult",
    "DivergenceError",
    "HPRState",
    "Iterate",
    "ReferenceSolution",
    "RestartPolicy",
    "RunResult",
    "SigmaPolicy",
    "SolverConfig",
    "Trace",
    "TraceRow",
    "centralized_reference",
    "dhpr_iteration",
    "dhpr_reference",
    "dhpr_sweep",
    "dual_lhpr_run",
    "halpern_step",
    "lambda_AU",
    "lhpr_sweep",
    "lipschitz_L",
    "load_checkpoint",
    "nids_run",
    "pg_extra_run",
    "run_dhpr",
    "save_checkpoint",
]
