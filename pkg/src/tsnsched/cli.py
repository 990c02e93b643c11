"""Command line: generate scenarios, synthesize schedules, analyze, export GCLs."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .analysis import kpi_row, monte_carlo_success, success_probability, validate_schedule
from .io import (
    SCHEMA_VERSION,
    FormatError,
    dumps,
    load_instance,
    load_schedule,
    save_gcl,
    save_instance,
    save_kpi_csv,
    save_schedule,
)
from .model import ModelError, as_fraction
from .scenario import ScenarioError, generate_scenario, load_config
from .scheduler import run_batch_heuristic, solve_exact
from .solver import SolverConfigError, SolverError

log = logging.getLogger("tsnsched")

EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_INPUT = 4
EXIT_SOLVER = 5
EXIT_INVALID = 6


def _gamma_values(args) -> list[Fraction]:
    if args.gamma_sweep:
        return [Fraction(i, 10) for i in range(11)]
    return [as_fraction(args.gamma)]


def _solver_opts(args) -> dict:
    return {"backend": args.backend, "solver_cmd": args.solver_cmd}


def cmd_generate(args) -> int:
    cfg = load_config(args.config)
    overrides = {"seed": args.seed}
    if args.streams is not None:
        overrides["streams"] = args.streams
    if args.feasible_bias:
        overrides["feasible_bias"] = True
    cfg = type(cfg).from_dict({**cfg.to_dict(), **overrides})
    solver = {"backend": args.backend, "solver_cmd": args.solver_cmd, "total_time_limit": 600.0}
    inst = generate_scenario(cfg, solver)
    save_instance(inst, args.out)
    print(json.dumps({"instance": str(args.out), "streams": len(inst.streams), "id": inst.id}))
    return 0


def cmd_schedule(args) -> int:
    inst = load_instance(args.instance)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    opts = _solver_opts(args)
    rows, series, runs = [], [], []
    for gamma in _gamma_values(args):
        t0 = time.perf_counter()
        if args.method == "exact":
            start = None
            if args.warm_start:
                start = run_batch_heuristic(inst, max(1, len(inst.streams)), gamma, args.time_limit, **opts)
            sched = solve_exact(inst, gamma, args.time_limit, warm_start=start, **opts)
        else:
            sched = run_batch_heuristic(inst, args.batches, gamma, args.time_limit, **opts)
        runtime = time.perf_counter() - t0
        violations = validate_schedule(inst, sched)
        if violations:
            for v in violations[:20]:
                log.error("%s", v)
            raise SolverError(f"schedule failed validation with {len(violations)} violation(s)")
        tag = f"{args.method}-b{sched.batch_count}-g{float(gamma):.2f}"
        save_schedule(sched, out / f"schedule-{tag}.json", args.reproducible)
        save_gcl(sched, out / f"gcl-{tag}.json", sorted(inst.graph.ports))
        row = kpi_row(inst, sched, None if args.reproducible else runtime, args.trials, args.seed)
        rows.append(row)
        series.append({"gamma": str(gamma), **{k: row[k] for k in ("scheduled", "scheduled_p3", "port_util", "success_prob_analytic")}})
        runs.append({
            "gamma": str(gamma), "status": sched.status, "accepted": sched.objective,
            "requested": len(inst.streams), "schedule": f"schedule-{tag}.json", "gcl": f"gcl-{tag}.json",
            "runtime_s": 0.0 if args.reproducible else round(runtime, 3),
        })
    save_kpi_csv(rows, out / "kpi.csv")
    report = {
        "schema_version": SCHEMA_VERSION, "kind": "report", "version": __version__,
        "instance_id": inst.id, "method": args.method, "batches": args.batches,
        "backend": args.backend, "time_limit_s": args.time_limit, "runs": runs,
    }
    (out / "report.json").write_text(dumps(report), encoding="utf-8")
    plot = {"schema_version": SCHEMA_VERSION, "kind": "plot-data", "x": "gamma", "series": series}
    (out / "plot_data.json").write_text(dumps(plot), encoding="utf-8")
    print(json.dumps({"out": str(out), "runs": runs}))
    return 0


def cmd_analyze(args) -> int:
    inst = load_instance(args.instance)
    sched = load_schedule(args.schedule)
    violations = validate_schedule(inst, sched)
    per_stream = {sid: success_probability(inst, sched, sid) for sid in sched.accepted}
    result = {
        "schema_version": SCHEMA_VERSION,
        "kind": "analysis",
        "violations": [str(v) for v in violations],
        "success_prob_analytic": per_stream,
    }
    if args.trials:
        result["success_prob_mc"] = {
            sid: monte_carlo_success(inst, sched, args.trials, args.seed, sid) for sid in sched.accepted
        }
        result["trials"] = args.trials
        result["seed"] = args.seed
    print(dumps(result), end="")
    return EXIT_INVALID if violations else 0


def cmd_gcl(args) -> int:
    sched = load_schedule(args.schedule)
    save_gcl(sched, args.out)
    print(json.dumps({"gcl": str(args.out)}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tsnsched", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def solver_flags(p):
        p.add_argument("--backend", choices=("external", "oracle"), default="external",
                       help="external: LP file + --solver-cmd; oracle: exhaustive search (tiny models)")
        p.add_argument("--solver-cmd", help="solver command template or alias (default: $TSNSCHED_SOLVER_CMD)")

    g = sub.add_parser("generate", help="generate a seeded scenario")
    g.add_argument("--config", required=True, help="preset name or JSON config path")
    g.add_argument("--seed", required=True, type=int)
    g.add_argument("--out", required=True)
    g.add_argument("--streams", type=int)
    g.add_argument("--feasible-bias", action="store_true")
    solver_flags(g)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("schedule", help="synthesize a schedule")
    s.add_argument("--instance", required=True)
    s.add_argument("--method", choices=("exact", "batch"), default="batch")
    s.add_argument("--batches", type=int, default=1)
    s.add_argument("--gamma", default="1")
    s.add_argument("--gamma-sweep", action="store_true", help="run gamma = 0, 0.1, ..., 1")
    s.add_argument("--time-limit", type=float, default=7200.0)
    s.add_argument("--warm-start", action="store_true",
                   help="exact only: seed the solver with a one-stream-per-batch heuristic schedule")
    s.add_argument("--trials", type=int, default=0, help="Monte Carlo trials for the KPI row")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--reproducible", action="store_true", help="zero wall-clock fields in outputs")
    s.add_argument("--out", required=True)
    solver_flags(s)
    s.set_defaults(func=cmd_schedule)

    a = sub.add_parser("analyze", help="validate a schedule and report success probabilities")
    a.add_argument("--instance", required=True)
    a.add_argument("--schedule", required=True)
    a.add_argument("--trials", type=int, default=0)
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("gcl", help="export per-port gate control lists")
    c.add_argument("--schedule", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_gcl)
    return ap


def _error(kind: str, exc: BaseException, code: int) -> int:
    record = {"schema_version": SCHEMA_VERSION, "kind": "error", "error": kind, "message": str(exc)}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "batches", 1) < 1:
            raise ValueError("--batches must be >= 1")
        return args.func(args)
    except SolverConfigError as exc:
        return _error("solver-config", exc, EXIT_CONFIG)
    except (FormatError, ModelError, ScenarioError, FileNotFoundError, json.JSONDecodeError) as exc:
        return _error("input", exc, EXIT_INPUT)
    except SolverError as exc:
        return _error("solver", exc, EXIT_SOLVER)
    except ValueError as exc:
        return _error("usage", exc, EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
