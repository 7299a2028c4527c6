"""Command-line experiment runner: ``dhpr gen | run | plot | audit``.

Experiments are described by a JSON file; command-line flags override its
values.  Schema (every key optional)::

    {
      "problem": {"family": "lasso" | "group_lasso" | "logistic",
                  "source": "synthetic" | "libsvm",
                  "path": "data.txt" or "bundled:sample_binary.txt",
                  "scale": false,
                  "N": 20, "m": 10, "p": 50, "delta": 0.01, "seed": 0},
      "graph": {"kind": "random" | "line" | "complete", "connectivity": 0.5, "seed": 0},
      "bundle": "path/to/bundle",       # load this problem instead of building one
      "solvers": ["dhpr", "nids", "pg_extra"],
      "solver_config": {...},           # SolverConfig fields
      "tol": 1e-8,
      "k_max": 20000,
      "output_dir": "dhpr_out"
    }

The output directory is taken from ``--output-dir``, else from the
``DHPR_OUTPUT_DIR`` environment variable, else from the file.

Exit codes: 0 success, 2 configuration or malformed input, 3 a solver diverged,
4 I/O error.  ``audit`` returns 1 when it finds a locality violation.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

from . import __version__
from .graph import make_graph
from .plot import PlotError, plot_traces
from .problem import (
    FAMILIES,
    ParseError,
    gen_logistic,
    gen_regression,
    load_bundle,
    load_libsvm,
    problem_from_dataset,
    save_bundle,
)
from .simnet import locality_audit
from .solver import (
    SOLVERS,
    DivergenceError,
    SolverConfig,
    centralized_reference,
    dual_lhpr_run,
    nids_run,
    pg_extra_run,
    run_dhpr,
    save_checkpoint,
)

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 2, 3, 4
OUTPUT_ENV = "DHPR_OUTPUT_DIR"
THRESHOLDS = (1e-4, 1e-6, 1e-8)
DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
BUNDLED_PREFIX = "bundled:"


class ConfigError(ValueError):
    pass


DEFAULT_PROBLEM = {
    "family": "lasso",
    "source": "synthetic",
    "path": None,
    "scale": False,
    "N": 20,
    "m": 10,
    "p": 50,
    "delta": 1e-2,
    "seed": 0,
}
DEFAULT_GRAPH = {"kind": "random", "connectivity": 0.5, "seed": 0}


@dataclass
class ExperimentConfig:
    problem: dict = field(default_factory=lambda: dict(DEFAULT_PROBLEM))
    graph: dict = field(default_factory=lambda: dict(DEFAULT_GRAPH))
    bundle: str | None = None
    solvers: list = field(default_factory=lambda: ["dhpr"])
    solver_config: dict = field(default_factory=dict)
    tol: float = 1e-8
    k_max: int = 20000
    output_dir: str = "dhpr_out"

    @classmethod
    def from_dict(cls, d):
        d = copy.deepcopy(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        prob = dict(DEFAULT_PROBLEM)
        prob.update(_section(d.pop("problem", {}), DEFAULT_PROBLEM, "problem"))
        graph = dict(DEFAULT_GRAPH)
        graph.update(_section(d.pop("graph", {}), DEFAULT_GRAPH, "graph"))
        cfg = cls(problem=prob, graph=graph, **d)
        cfg.validate()
        return cfg

    def validate(self):
        p = self.problem
        if p["family"] not in FAMILIES:
            raise ConfigError(f"problem.family must be one of {FAMILIES}")
        if p["source"] not in ("synthetic", "libsvm"):
            raise ConfigError("problem.source must be 'synthetic' or 'libsvm'")
        if p["source"] == "libsvm" and not p["path"]:
            raise ConfigError("problem.path is required for a libsvm source")
        for key in ("N", "m", "p"):
            if not isinstance(p[key], int) or p[key] < 1:
                raise ConfigError(f"problem.{key} must be a positive integer")
        if p["N"] < 2:
            raise ConfigError("problem.N must be at least 2")
        if self.graph["kind"] not in ("random", "line", "complete"):
            raise ConfigError("graph.kind must be random, line or complete")
        if not self.solvers:
            raise ConfigError("solver list is empty")
        bad = [s for s in self.solvers if s not in SOLVERS]
        if bad:
            raise ConfigError(f"unknown solver(s) {bad}; choose from {SOLVERS}")
        if not (isinstance(self.tol, (int, float)) and self.tol > 0):
            raise ConfigError("tol must be positive")
        if not isinstance(self.k_max, int) or self.k_max < 1:
            raise ConfigError("k_max must be a positive integer")
        self.solver_settings()

    def solver_settings(self) -> SolverConfig:
        d = dict(self.solver_config)
        d["tol"] = float(self.tol)
        d["k_max"] = int(self.k_max)
        try:
            return SolverConfig.from_dict(d)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"solver_config: {exc}") from None

    def resolved_path(self):
        path = self.problem["path"]
        if path and path.startswith(BUNDLED_PREFIX):
            return os.path.join(DATA_DIR, path[len(BUNDLED_PREFIX):])
        return path

    def instance_name(self):
        if self.bundle:
            return os.path.basename(os.path.normpath(self.bundle))
        p = self.problem
        if p["source"] == "libsvm":
            return f"{p['family']}-{os.path.splitext(os.path.basename(self.resolved_path()))[0]}"
        return f"{p['family']}-N{p['N']}-m{p['m']}-p{p['p']}-s{p['seed']}"


def _section(d, defaults, name):
    if not isinstance(d, dict):
        raise ConfigError(f"{name} must be an object")
    unknown = set(d) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown {name} key(s): {sorted(unknown)}")
    return d


# --- problem construction ---------------------------------------------------------


def check_inputs(cfg: ExperimentConfig):
    """Raise FileNotFoundError for missing inputs before anything is written."""
    if cfg.bundle:
        if not os.path.isfile(os.path.join(cfg.bundle, "problem.json")):
            raise FileNotFoundError(f"no problem bundle at {cfg.bundle}")
    elif cfg.problem["source"] == "libsvm":
        path = cfg.resolved_path()
        if not os.path.isfile(path):
            raise FileNotFoundError(f"libsvm file not found: {path}")


def build_problem(cfg: ExperimentConfig):
    check_inputs(cfg)
    if cfg.bundle:
        return load_bundle(cfg.bundle)
    p, g = cfg.problem, cfg.graph
    try:
        graph = make_graph(g["kind"], p["N"], g["connectivity"], g["seed"])
    except ValueError as exc:
        raise ConfigError(f"graph: {exc}") from None
    if p["source"] == "libsvm":
        ds = load_libsvm(cfg.resolved_path(), scale=bool(p["scale"]))
        try:
            return problem_from_dataset(ds, p["family"], p["N"], graph=graph, seed=p["seed"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if p["family"] == "logistic":
        return gen_logistic(p["N"], p["m"], p["p"], seed=p["seed"], graph=graph)
    kind = "l1" if p["family"] == "lasso" else "sparse_group"
    try:
        return gen_regression(p["N"], p["m"], p["p"], delta=p["delta"], reg_kind=kind, seed=p["seed"], graph=graph)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# --- run --------------------------------------------------------------------------


def _dispatch(name, problem, settings, resume=None):
    if name == "dhpr":
        return run_dhpr(problem, settings, resume=resume)
    if name == "dual_lhpr":
        return dual_lhpr_run(problem, settings)
    if name == "nids":
        return nids_run(problem, settings)
    return pg_extra_run(problem, settings)


def iterations_summary(trace, status, tol):
    """Iterations to each threshold: an int, "F" if the run hit its cap first,
    or None if the run stopped at a looser tolerance before trying."""
    out = {}
    for eps in THRESHOLDS:
        k = trace.iterations_to(eps, "eta_re")
        if k is None:
            k = "F" if status == "max_iter" or eps >= tol else None
        out[f"{eps:.0e}"] = k
    return out


def run_solvers(cfg: ExperimentConfig, problem, out_dir, dual_gap=False, checkpoint=None, resume=None):
    """Run every selected solver and write traces, summary.json and table.csv.

    Returns the summary dict; a diverged solver is reported without stopping
    the others.
    """
    settings = cfg.solver_settings()
    if dual_gap and problem.family == "lasso":
        ref = centralized_reference(problem)
        settings.reference_value = -ref.objective
    os.makedirs(out_dir, exist_ok=True)
    summary = {"instance": cfg.instance_name(), "solvers": {}}
    for name in cfg.solvers:
        t0 = time.perf_counter()
        try:
            res = _dispatch(name, problem, settings, resume if name == "dhpr" else None)
        except DivergenceError as exc:
            summary["solvers"][name] = {"status": "diverged", "error": str(exc)}
            continue
        wall = time.perf_counter() - t0
        res.trace.write_csv(os.path.join(out_dir, f"trace_{name}.csv"), timing=settings.record_time)
        if settings.log_exchanges:
            res.network.write_round_log(os.path.join(out_dir, f"round_log_{name}.csv"))
        if checkpoint and name == "dhpr":
            save_checkpoint(checkpoint, res, problem)
        last = res.trace[-1] if len(res.trace) else None
        summary["solvers"][name] = {
            "status": res.status,
            "iterations": res.iterations,
            "iterations_to": iterations_summary(res.trace, res.status, settings.tol),
            "final": {
                "eta_re": last.eta_re if last else None,
                "eta_kkt": last.eta_kkt if last else None,
            },
            "comm": {"rounds": res.comm.rounds, "scalars_sent": res.comm.scalars_sent},
            "wall_time_s": wall,
        }
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    write_table(summary, os.path.join(out_dir, "table.csv"))
    return summary


def _json_default(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    raise TypeError(f"not serializable: {v!r}")


def table_rows(summary):
    """(instance, solver, iters@1e-4, iters@1e-6, iters@1e-8) rows; diverged runs show "F"."""
    rows = []
    for name, entry in summary["solvers"].items():
        its = entry.get("iterations_to", {})
        cells = [its.get(f"{eps:.0e}", "F") for eps in THRESHOLDS]
        rows.append([summary["instance"], name] + ["-" if c is None else str(c) for c in cells])
    return rows


def write_table(summary, path):
    header = ["instance", "solver"] + [f"{eps:.0e}" for eps in THRESHOLDS]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in table_rows(summary):
            fh.write(",".join(row) + "\n")


# --- argument handling ------------------------------------------------------------


def _add_experiment_flags(p):
    p.add_argument("--config", help="experiment JSON file")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--libsvm", metavar="PATH", help="use a LIBSVM file as the data source")
    p.add_argument("--scale", action="store_true", default=None, help="scale LIBSVM columns to [-1, 1]")
    p.add_argument("--N", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--graph", dest="graph_kind", choices=("random", "line", "complete"))
    p.add_argument("--connectivity", type=float)
    p.add_argument("--graph-seed", type=int)
    p.add_argument("--output-dir")


def _add_solver_flags(p):
    p.add_argument("--bundle", help="problem bundle directory to load")
    p.add_argument("--solvers", help="comma-separated list from " + ",".join(SOLVERS))
    p.add_argument("--tol", type=float)
    p.add_argument("--k-max", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--no-restart", action="store_true", help="disable restarts and sigma updates")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="SolverConfig override, value parsed as JSON (repeatable)")


def load_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: top level must be an object")
    data = copy.deepcopy(data)
    prob = data.setdefault("problem", {})
    graph = data.setdefault("graph", {})
    if not isinstance(prob, dict) or not isinstance(graph, dict):
        raise ConfigError("problem and graph must be objects")
    for flag, key in (("family", "family"), ("N", "N"), ("m", "m"), ("p", "p"), ("delta", "delta"),
                      ("seed", "seed"), ("scale", "scale")):
        val = getattr(args, flag, None)
        if val is not None:
            prob[key] = val
    if getattr(args, "libsvm", None):
        prob["source"] = "libsvm"
        prob["path"] = args.libsvm
    for flag, key in (("graph_kind", "kind"), ("connectivity", "connectivity"), ("graph_seed", "seed")):
        val = getattr(args, flag, None)
        if val is not None:
            graph[key] = val
    if getattr(args, "bundle", None):
        data["bundle"] = args.bundle
    if getattr(args, "solvers", None) is not None:
        data["solvers"] = [s for s in args.solvers.split(",") if s]
    for flag, key in (("tol", "tol"), ("k_max", "k_max")):
        val = getattr(args, flag, None)
        if val is not None:
            data[key] = val
    sc = data.setdefault("solver_config", {})
    if not isinstance(sc, dict):
        raise ConfigError("solver_config must be an object")
    if getattr(args, "sigma", None) is not None:
        sc["sigma"] = args.sigma
    if getattr(args, "no_restart", False):
        sc["restart"] = dict(sc.get("restart", {}), enabled=False)
        sc["sigma_update"] = dict(sc.get("sigma_update", {}), enabled=False)
    for item in getattr(args, "set", []) or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            sc[key] = json.loads(raw)
        except json.JSONDecodeError:
            sc[key] = raw
    env_dir = os.environ.get(OUTPUT_ENV)
    if getattr(args, "output_dir", None):
        data["output_dir"] = args.output_dir
    elif env_dir:
        data["output_dir"] = env_dir
    return ExperimentConfig.from_dict(data)


def cmd_gen(args):
    cfg = load_config(args)
    check_inputs(cfg)
    problem = build_problem(cfg)
    out = args.out or os.path.join(cfg.output_dir, "bundle")
    save_bundle(problem, out)
    print(f"wrote bundle with {problem.n_agents} agents to {out}")
    return EXIT_OK


def cmd_run(args):
    cfg = load_config(args)
    check_inputs(cfg)
    if args.resume and not os.path.isfile(args.resume):
        raise FileNotFoundError(f"checkpoint not found: {args.resume}")
    problem = build_problem(cfg)
    resume = args.resume
    summary = run_solvers(cfg, problem, cfg.output_dir, dual_gap=args.dual_gap,
                          checkpoint=args.checkpoint, resume=resume)
    header = ["instance", "solver"] + [f"{eps:.0e}" for eps in THRESHOLDS]
    print("  ".join(f"{h:>10}" for h in header))
    for row in table_rows(summary):
        print("  ".join(f"{c:>10}" for c in row))
    diverged = [n for n, e in summary["solvers"].items() if e["status"] == "diverged"]
    for n in diverged:
        print(f"{n}: {summary['solvers'][n]['error']}", file=sys.stderr)
    return EXIT_DIVERGED if diverged else EXIT_OK


def cmd_plot(args):
    plot_traces(args.traces, args.output, metric=args.metric)
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_audit(args):
    """Run the selected solvers with exchange logging and re-derive every
    aggregate from neighbour payloads."""
    cfg = load_config(args)
    check_inputs(cfg)
    problem = build_problem(cfg)
    settings = cfg.solver_settings()
    settings.log_exchanges = True
    settings.k_max = min(settings.k_max, args.iterations)
    failed = False
    for name in cfg.solvers:
        try:
            res = _dispatch(name, problem, settings)
        except DivergenceError as exc:
            print(f"{name}: diverged ({exc})", file=sys.stderr)
            return EXIT_DIVERGED
        rep = locality_audit(res.network.log, problem.graph)
        verdict = "PASS" if rep.passed else "FAIL"
        print(f"{name}: {verdict} ({rep.rounds_checked} rounds checked, {len(rep.violations)} violations)")
        failed |= not rep.passed
    return 1 if failed else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="dhpr", description="Distributed composite optimization experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="build a problem and write it as a bundle directory")
    _add_experiment_flags(g)
    g.add_argument("--out", help="bundle directory (default <output-dir>/bundle)")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run solvers and write traces, summary.json and table.csv")
    _add_experiment_flags(r)
    _add_solver_flags(r)
    r.add_argument("--dual-gap", action="store_true",
                   help="record the dual objective error against a centralized reference (lasso only)")
    r.add_argument("--checkpoint", metavar="PATH", help="write the final dhpr state here")
    r.add_argument("--resume", metavar="PATH", help="continue dhpr from a checkpoint")
    r.set_defaults(func=cmd_run)

    pl = sub.add_parser("plot", help="SVG chart of trace CSVs")
    pl.add_argument("traces", nargs="+")
    pl.add_argument("-o", "--output", required=True)
    pl.add_argument("--metric", default="eta_re")
    pl.set_defaults(func=cmd_plot)

    a = sub.add_parser("audit", help="check that every exchange used neighbour data only")
    _add_experiment_flags(a)
    _add_solver_flags(a)
    a.add_argument("--iterations", type=int, default=50)
    a.set_defaults(func=cmd_audit)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PlotError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
