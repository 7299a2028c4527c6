"""Distributed Halpern Peaceman-Rachford solver for consensus composite optimization.

Submodules
----------
graph     topologies and Metropolis weights
prox      proximal operators and conjugates
problem   synthetic generators, LIBSVM input, bundles
simnet    round-based neighbour exchange harness
solver    dHPR, its dense reference forms, dual L-HPR, NIDS and PG-EXTRA
metrics   KKT residuals, relative residuals, dual objective error
cli       ``dhpr`` command line entry point
"""

from .graph import WeightedGraph, make_graph, metropolis_weights, min_eigenvalue
from .kernels import BACKEND
from .problem import DistributedProblem, gen_logistic, gen_regression, load_bundle, save_bundle
from .solver import SolverConfig, run_dhpr

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DistributedProblem",
    "SolverConfig",
    "WeightedGraph",
    "gen_logistic",
    "gen_regression",
    "load_bundle",
    "make_graph",
    "metropolis_weights",
    "min_eigenvalue",
    "run_dhpr",
    "save_bundle",
]
