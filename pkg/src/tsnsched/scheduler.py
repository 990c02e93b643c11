"""Exact solving and the sequential batch heuristic."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .milp import FixedBlock, MilpModel, build_model
from .model import ProblemInstance, Stream, as_fraction
from .solver import MilpSolution, SolverConfigError, SolverError, solve_external, solve_oracle
from .timing import TimingTable, cycle_structure

log = logging.getLogger(__name__)


@dataclass
class StreamSchedule:
    stream_id: str
    accepted: bool = False
    path_index: int | None = None
    path: tuple[str, ...] = ()
    # (repetition, port) -> (start, length)
    windows: dict[tuple[int, str], tuple[int, int]] = field(default_factory=dict)
    batch: int | None = None

    def talker_offsets(self) -> dict[int, int]:
        if not self.accepted:
            return {}
        return {u: start for (u, p), (start, _) in self.windows.items() if p == self.path[0]}


@dataclass
class BatchReport:
    index: int
    streams: list[str]
    status: str
    objective: int | None
    wall_time: float
    time_budget: float | None
    constraints: dict[str, int]
    variables: int
    accepted: list[str] = field(default_factory=list)
    message: str = ""


@dataclass
class Schedule:
    instance_id: str
    gamma: Fraction
    hypercycle: int
    streams: dict[str, StreamSchedule]
    method: str = "exact"
    batch_count: int = 1
    batches: list[BatchReport] = field(default_factory=list)

    @property
    def accepted(self) -> list[str]:
        return [sid for sid, s in self.streams.items() if s.accepted]

    @property
    def objective(self) -> int:
        return len(self.accepted)

    @property
    def status(self) -> str:
        statuses = {b.status for b in self.batches}
        if not statuses or statuses == {"optimal"}:
            return "optimal"
        if statuses <= {"optimal", "feasible-time-limit"}:
            return "feasible-time-limit"
        return "partial"

    @property
    def wall_time(self) -> float:
        return sum(b.wall_time for b in self.batches)

    def port_timeline(self) -> dict[str, list[tuple[int, int, str, int]]]:
        """Per port: sorted (start, end, stream id, repetition)."""
        out: dict[str, list[tuple[int, int, str, int]]] = {}
        for sid, ss in self.streams.items():
            for (u, p), (start, length) in ss.windows.items():
                out.setdefault(p, []).append((start, start + length, sid, u))
        for p in out:
            out[p].sort()
        return out


def sort_streams(streams: Sequence[Stream]) -> list[Stream]:
    """Highest priority first, then shorter period, then id."""
    return sorted(streams, key=lambda s: (-s.priority, s.period, s.id))


def partition(items: Sequence, batches: int) -> list[list]:
    """Contiguous chunks of ceil(n / batches); the last one takes the rest."""
    if batches < 1:
        raise ValueError("batch count must be >= 1")
    if not items:
        return []
    size = math.ceil(len(items) / batches)
    return [list(items[i:i + size]) for i in range(0, len(items), size)]


def merge_fixed_blocks(intervals: Sequence[tuple[int, int]], min_window: int, port: str = "") -> list[FixedBlock]:
    """Coalesce occupied intervals whose gap cannot host a ``min_window`` window."""
    blocks: list[list[int]] = []
    for start, end in sorted(intervals):
        if blocks and start - blocks[-1][1] < min_window:
            blocks[-1][1] = max(blocks[-1][1], end)
        else:
            blocks.append([start, end])
    return [FixedBlock(port, s, e) for s, e in blocks]


def solve_model(
    model: MilpModel,
    backend: str = "external",
    solver_cmd: str | None = None,
    time_limit: float = 60.0,
    start: list[int] | None = None,
) -> MilpSolution:
    if backend == "oracle":
        return solve_oracle(model)
    if backend == "external":
        return solve_external(model, solver_cmd, time_limit, initial=start)
    raise ValueError(f"unknown backend {backend!r}")


def decode_solution(
    model: MilpModel,
    solution: MilpSolution,
    instance: ProblemInstance,
    gamma=None,
    stream_ids: Sequence[str] | None = None,
) -> dict[str, StreamSchedule]:
    """Windows of every stream in the model; hard error on an invalid assignment."""
    if not solution.has_assignment:
        raise SolverError(f"solution with status {solution.status} carries no assignment")
    values = solution.values
    bad = model.violations(values)
    if bad:
        raise SolverError(f"assignment violates {len(bad)} model constraint(s), e.g. {bad[:3]}")
    table = TimingTable(instance, gamma)
    out: dict[str, StreamSchedule] = {}
    ids = stream_ids if stream_ids is not None else list(model.a_index)
    for sid in ids:
        ss = StreamSchedule(sid)
        if values[model.a_index[sid]] == 1:
            chosen = [r for r in range(len(instance.candidate_paths(sid))) if values[model.z_index[(sid, r)]] == 1]
            if len(chosen) != 1:
                raise SolverError(f"stream {sid} accepted with {len(chosen)} active paths")
            r = chosen[0]
            path = instance.candidate_paths(sid)[r]
            ss.accepted, ss.path_index, ss.path = True, r, tuple(path)
            for u in range(1, model.hypercycle // instance.stream_map[sid].period + 1):
                for p in path:
                    ss.windows[(u, p)] = (values[model.x_index[(sid, r, u, p)]], table.window(sid, p))
        out[sid] = ss
    return out


def encode_schedule(model: MilpModel, instance: ProblemInstance, streams: dict[str, StreamSchedule]) -> list[int] | None:
    """Full model assignment reproducing ``streams``; None if it is not feasible.

    Inactive paths sit at zero. Each ordering binary takes the value that
    satisfies its own pair of rows.
    """
    values = [0] * len(model.variables)
    for sid, a in model.a_index.items():
        ss = streams.get(sid)
        if ss is None or not ss.accepted:
            continue
        values[a] = 1
        values[model.z_index[(sid, ss.path_index)]] = 1
        for (u, p), (start, _) in ss.windows.items():
            key = (sid, ss.path_index, u, p)
            if key not in model.x_index:
                return None
            values[model.x_index[key]] = start
    rows_of: dict[int, list] = {}
    for con in model.constraints:
        if con.family in ("isolation", "fixed_block"):
            for i, _ in con.terms:
                if model.variables[i].name.startswith(("y(", "yf(")):
                    rows_of.setdefault(i, []).append(con)
    for i, rows in rows_of.items():
        values[i] = 0
        if not all(c.satisfied(values) for c in rows):
            values[i] = 1
    return None if model.violations(values) else values


def _empty_schedule(instance: ProblemInstance, gamma, method: str, batch_count: int) -> Schedule:
    hc = cycle_structure(instance.streams).hypercycle if instance.streams else 0
    streams = {s.id: StreamSchedule(s.id) for s in instance.streams}
    return Schedule(instance.id, gamma, hc, streams, method, batch_count)


def solve_exact(
    instance: ProblemInstance,
    gamma=None,
    time_limit: float = 7200.0,
    solver_cmd: str | None = None,
    backend: str = "external",
    prune_disjoint: bool = True,
    warm_start: Schedule | None = None,
) -> Schedule:
    """One model over all streams, one solve.

    ``warm_start`` hands a known schedule to the solver as its first
    incumbent, when the solver command takes a ``{start}`` argument.
    """
    gamma = instance.gamma if gamma is None else as_fraction(gamma)
    sched = _empty_schedule(instance, gamma, "exact", 1)
    t0 = time.perf_counter()
    model = build_model(instance, gamma=gamma, prune_disjoint=prune_disjoint)
    start = None
    if warm_start is not None and backend == "external":
        start = encode_schedule(model, instance, warm_start.streams)
        if start is None:
            log.warning("warm start does not fit the model; solving cold")
    sol = solve_model(model, backend, solver_cmd, time_limit, start)
    report = BatchReport(
        0, [s.id for s in instance.streams], sol.status, sol.objective,
        time.perf_counter() - t0, time_limit if backend != "oracle" else None,
        dict(model.counts()), len(model.variables), message=sol.message,
    )
    sched.batches.append(report)
    if sol.has_assignment:
        decoded = decode_solution(model, sol, instance, gamma)
        for sid, ss in decoded.items():
            ss.batch = 0 if ss.accepted else None
            sched.streams[sid] = ss
        report.accepted = [sid for sid, ss in decoded.items() if ss.accepted]
    elif sol.status == "error":
        raise SolverError(f"solver failed: {sol.message}")
    return sched


def fixed_blocks_for(instance: ProblemInstance, table: TimingTable, batch: Sequence[str], timeline: dict[str, list[tuple[int, int]]]):
    blocks: dict[tuple[str, str], list[FixedBlock]] = {}
    for sid in batch:
        ports = {p for path in instance.candidate_paths(sid) for p in path}
        if not ports:
            continue
        min_window = min(table.window(sid, p) for p in ports)
        for p in sorted(ports):
            if timeline.get(p):
                blocks[(sid, p)] = merge_fixed_blocks(timeline[p], min_window, p)
    return blocks


def run_batch_heuristic(
    instance: ProblemInstance,
    batches: int,
    gamma=None,
    total_time_limit: float = 7200.0,
    solver_cmd: str | None = None,
    backend: str = "external",
    on_batch: Callable[[int, Schedule], None] | None = None,
    prune_disjoint: bool = True,
) -> Schedule:
    """Sort by priority, solve contiguous batches in turn, fix what each accepts.

    Unused time of a batch rolls over to the remaining ones. Streams a batch
    rejects stay unscheduled.
    """
    gamma = instance.gamma if gamma is None else as_fraction(gamma)
    order = sort_streams(instance.streams)
    groups = partition([s.id for s in order], batches)
    sched = _empty_schedule(instance, gamma, "batch", batches)
    table = TimingTable(instance, gamma)
    timeline: dict[str, list[tuple[int, int]]] = {}
    remaining = total_time_limit
    for i, group in enumerate(groups):
        budget = max(remaining / (len(groups) - i), 1e-3)
        t0 = time.perf_counter()
        blocks = fixed_blocks_for(instance, table, group, timeline)
        model = build_model(instance, group, blocks, gamma, prune_disjoint=prune_disjoint)
        try:
            sol = solve_model(model, backend, solver_cmd, budget)
        except SolverConfigError:
            raise
        except SolverError as exc:
            sol = MilpSolution("error", message=str(exc))
        report = BatchReport(
            i, list(group), sol.status, sol.objective, 0.0,
            budget if backend != "oracle" else None,
            dict(model.counts()), len(model.variables), message=sol.message,
        )
        if sol.has_assignment:
            for sid, ss in decode_solution(model, sol, instance, gamma, group).items():
                if ss.accepted:
                    ss.batch = i
                    sched.streams[sid] = ss
                    report.accepted.append(sid)
                    for (u, p), (start, length) in ss.windows.items():
                        timeline.setdefault(p, []).append((start, start + length))
        else:
            log.warning("batch %d: solver status %s, %d stream(s) left unscheduled", i, sol.status, len(group))
        report.wall_time = time.perf_counter() - t0
        remaining -= report.wall_time
        sched.batches.append(report)
        if on_batch is not None:
            on_batch(i, sched)
    return sched
