"""Run an external MILP solver through LP file exchange.

The solver command is a template with ``{input}``, ``{output}`` and
``{time_limit_s}`` placeholders, plus an optional ``{start}`` that receives
the path of a starting solution (or an empty argument when there is none).
The command must write a solution file of ``name value`` lines (``#``
starts a comment) and report its outcome through the exit code:

====  =========================================
0     optimal
10    feasible, stopped at the time limit
20    proven infeasible
30    unbounded
40    stopped at the time limit, no incumbent
====  =========================================

Anything else is treated as a solver error.
"""

from __future__ import annotations

import logging
import os
import shlex
import shutil
import subprocess
import sys
import tempfile
import time

from ..milp import MilpModel
from .lpfile import export_lp
from .result import MilpSolution, SolverConfigError, SolverError

log = logging.getLogger(__name__)

ENV_VAR = "TSNSCHED_SOLVER_CMD"
EXIT_STATUS = {0: "optimal", 10: "feasible-time-limit", 20: "infeasible", 30: "unbounded", 40: "unknown"}


def builtin_commands() -> dict[str, str]:
    py = shlex.quote(sys.executable)
    return {"highs": f"{py} -m tsnsched.solver.highs_adapter {{input}} {{output}} {{time_limit_s}} {{start}}"}


def resolve_command(solver_cmd: str | None = None) -> str:
    """Explicit template, else the environment variable; aliases expand."""
    cmd = solver_cmd or os.environ.get(ENV_VAR)
    if not cmd:
        raise SolverConfigError(
            f"no MILP solver configured: pass --solver-cmd or set {ENV_VAR} (e.g. 'highs')"
        )
    return builtin_commands().get(cmd.strip(), cmd)


def parse_solution_file(text: str, model: MilpModel) -> tuple[list[int], dict[str, str]]:
    values = [v.lb for v in model.variables]
    meta: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split(None, 1)
            if len(parts) == 2:
                meta[parts[0]] = parts[1].strip()
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SolverError(f"solution line {lineno} unparseable: {raw!r}")
        name, val = parts
        if name not in model.index:
            raise SolverError(f"solution names unknown variable {name!r}")
        try:
            num = float(val)
        except ValueError as exc:
            raise SolverError(f"solution line {lineno}: bad value {val!r}") from exc
        values[model.index[name]] = int(round(num))
    return values, meta


def write_solution(model: MilpModel, values: list[int]) -> str:
    return "".join(f"{v.name} {x}\n" for v, x in zip(model.variables, values))


def solve_external(
    model: MilpModel,
    solver_cmd: str | None = None,
    time_limit: float = 60.0,
    keep_dir: str | None = None,
    initial: list[int] | None = None,
) -> MilpSolution:
    """``initial`` is a full assignment offered through ``{start}``; templates
    without that placeholder ignore it."""
    if time_limit <= 0:
        raise ValueError("time limit must be positive")
    template = resolve_command(solver_cmd)
    workdir = keep_dir or tempfile.mkdtemp(prefix="tsnsched-")
    try:
        lp_path = os.path.join(workdir, "model.lp")
        sol_path = os.path.join(workdir, "model.sol")
        with open(lp_path, "w") as fh:
            fh.write(export_lp(model))
        start_arg = ""
        if initial is not None:
            start_arg = os.path.join(workdir, "start.sol")
            with open(start_arg, "w") as fh:
                fh.write(write_solution(model, initial))
        cmd = template.format(
            input=shlex.quote(lp_path), output=shlex.quote(sol_path), time_limit_s=f"{time_limit:g}",
            start=shlex.quote(start_arg),
        )
        argv = shlex.split(cmd)
        if shutil.which(argv[0]) is None and not os.path.exists(argv[0]):
            raise SolverConfigError(f"solver command not found: {argv[0]!r}")
        t0 = time.perf_counter()
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=time_limit * 2 + 30)
        except subprocess.TimeoutExpired:
            return MilpSolution("unknown", wall_time=time.perf_counter() - t0)
        wall = time.perf_counter() - t0
        status = EXIT_STATUS.get(proc.returncode, "error")
        if status == "error":
            log.warning("solver exited with %s: %s", proc.returncode, proc.stderr.strip()[-500:])
            return MilpSolution("error", wall_time=wall, message=proc.stderr.strip()[-500:])
        if status not in ("optimal", "feasible-time-limit"):
            return MilpSolution(status, wall_time=wall)
        if not os.path.exists(sol_path):
            raise SolverError("solver reported a solution but wrote no solution file")
        with open(sol_path) as fh:
            values, meta = parse_solution_file(fh.read(), model)
        gap = float(meta["gap"]) if "gap" in meta else None
        return MilpSolution(status, model.objective_value(values), values, wall, gap)
    finally:
        if keep_dir is None:
            shutil.rmtree(workdir, ignore_errors=True)
