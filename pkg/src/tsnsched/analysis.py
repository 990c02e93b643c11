"""Schedule validation, KPIs and delivery success probability."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .milp import FixedBlock
from .model import ProblemInstance
from .scheduler import Schedule
from .timing import TimingTable, frame_budgets, robust_budget

KPI_COLUMNS = (
    "instance_id",
    "method",
    "batches",
    "gamma",
    "requested",
    "scheduled",
    "scheduled_p3",
    "port_util",
    "runtime_s",
    "success_prob_analytic",
    "success_prob_mc",
)


@dataclass(frozen=True)
class Violation:
    family: str
    entities: tuple
    detail: str

    def __str__(self):
        return f"[{self.family}] {self.entities}: {self.detail}"


@dataclass
class KpiReport:
    requested: int
    scheduled_ratio: float
    priority3_ratio: float
    port_utilization: float
    success: dict[str, float]
    aggregate_success: float
    violations: list[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations


def validate_schedule(
    instance: ProblemInstance,
    schedule: Schedule,
    gamma=None,
    fixed_blocks: Sequence[FixedBlock] = (),
) -> list[Violation]:
    """Replay every timing rule on the emitted windows with integer arithmetic."""
    gamma = schedule.gamma if gamma is None else gamma
    table = TimingTable(instance, gamma)
    smap = instance.stream_map
    hc = schedule.hypercycle
    out: list[Violation] = []
    for sid, ss in schedule.streams.items():
        if not ss.accepted:
            if ss.windows:
                out.append(Violation("structure", (sid,), "rejected stream holds windows"))
            continue
        s = smap[sid]
        paths = instance.candidate_paths(sid)
        if ss.path_index is None or ss.path_index >= len(paths) or tuple(paths[ss.path_index]) != tuple(ss.path):
            out.append(Violation("structure", (sid,), "path is not one of the candidates"))
            continue
        reps = hc // s.period
        expected = {(u, p) for u in range(1, reps + 1) for p in ss.path}
        if set(ss.windows) != expected:
            out.append(Violation("structure", (sid,), "windows do not cover every (instance, port)"))
            continue
        for (u, p), (start, length) in sorted(ss.windows.items()):
            want = table.window(sid, p)
            if length != want:
                out.append(Violation("window", (sid, u, p), f"length {length} != {want}"))
            if start < 0:
                out.append(Violation("window", (sid, u, p), f"negative start {start}"))
        first, last = ss.path[0], ss.path[-1]
        for u in range(1, reps + 1):
            for p, q in zip(ss.path, ss.path[1:]):
                gap = ss.windows[(u, q)][0] - ss.windows[(u, p)][0]
                ns = table.offset(sid, p, q)
                if gap != ns:
                    out.append(Violation("next_port", (sid, u, p, q), f"offset {gap} != {ns}"))
            start = ss.windows[(u, first)][0]
            if start < (u - 1) * s.period:
                out.append(Violation("cyclic", (sid, u), f"start {start} before {(u - 1) * s.period}"))
            end = ss.windows[(u, last)][0] + ss.windows[(u, last)][1]
            limit = s.max_latency + (u - 1) * s.period
            if end > limit:
                out.append(Violation("latency", (sid, u), f"ends at {end}, limit {limit} (late by {end - limit})"))
        phases = [ss.windows[(u, first)][0] - (u - 1) * s.period for u in range(1, reps + 1)]
        for i in range(reps):
            for j in range(i + 1, reps):
                diff = abs(phases[i] - phases[j])
                if diff > s.max_jitter:
                    out.append(Violation("jitter", (sid, i + 1, j + 1), f"phase spread {diff} > {s.max_jitter}"))

    for p, wins in schedule.port_timeline().items():
        for (s1, e1, a, u1), (s2, e2, b, u2) in zip(wins, wins[1:]):
            if s2 < e1:
                out.append(Violation("isolation", (p, a, u1, b, u2), f"[{s1},{e1}) overlaps [{s2},{e2}) by {e1 - s2}"))
        if wins and max(e for _, e, _, _ in wins) > hc + max((smap[w[2]].max_latency for w in wins), default=0):
            out.append(Violation("window", (p,), "window beyond hypercycle"))
    by_port: dict[str, list[FixedBlock]] = {}
    for blk in fixed_blocks:
        by_port.setdefault(blk.port, []).append(blk)
    timeline = schedule.port_timeline()
    for p, blocks in by_port.items():
        for start, end, sid, u in timeline.get(p, ()):
            for blk in blocks:
                if start < blk.end and blk.start < end:
                    out.append(Violation("fixed_block", (p, sid, u), f"[{start},{end}) hits block [{blk.start},{blk.end})"))
    return out


def port_utilization(schedule: Schedule, ports: Sequence[str]) -> float:
    """Mean over ``ports`` of the reserved fraction of the hypercycle."""
    if not ports or schedule.hypercycle <= 0:
        return 0.0
    busy = {p: 0 for p in ports}
    for ss in schedule.streams.values():
        for (_, p), (_, length) in ss.windows.items():
            if p in busy:
                busy[p] += length
    return sum(Fraction(b, schedule.hypercycle) for b in busy.values()).__float__() / len(ports)


def scheduled_ratio(instance: ProblemInstance, schedule: Schedule, priority: int | None = None) -> float:
    """Accepted over requested; an empty request set counts as full success."""
    wanted = [s.id for s in instance.streams if priority is None or s.priority == priority]
    if not wanted:
        return 1.0
    return sum(schedule.streams[sid].accepted for sid in wanted) / len(wanted)


def _frame_cutoffs(instance: ProblemInstance, schedule: Schedule, sid: str, mode: str = "frame"):
    """(histogram, cutoff) per wireless frame transmission on the chosen path."""
    table = TimingTable(instance, schedule.gamma)
    ss = schedule.streams[sid]
    s = instance.stream_map[sid]
    out = []
    for p in ss.path:
        port = instance.graph.ports[p]
        if not port.wireless:
            continue
        prof = instance.graph.profiles[port.profile]
        timing = table.timing(sid, p)
        g = table.level(sid, p)
        if mode == "frame":
            budgets = frame_budgets(timing, g)
            for k, size in enumerate(s.frame_sizes):
                out.append((prof.histogram(size), timing.ft[k] + budgets[k]))
        elif mode == "stream":
            size = s.frame_sizes[0]
            out.append((prof.histogram(size), timing.ft[0] + robust_budget(g, timing.fd[0])))
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return out


def traverses_wireless(instance: ProblemInstance, schedule: Schedule, sid: str) -> bool:
    return any(instance.graph.ports[p].wireless for p in schedule.streams[sid].path)


def success_probability(instance: ProblemInstance, schedule: Schedule, stream_id: str, mode: str = "frame") -> float:
    """Probability every wireless frame of the stream lands inside its budget."""
    ss = schedule.streams[stream_id]
    if not ss.accepted:
        raise ValueError(f"stream {stream_id} is not scheduled")
    prob = Fraction(1)
    for hist, cutoff in _frame_cutoffs(instance, schedule, stream_id, mode):
        prob *= hist.cdf(cutoff)
    return float(prob)


def aggregate_success(instance: ProblemInstance, schedule: Schedule, mode: str = "frame") -> float:
    """Mean over accepted streams with a wireless hop (1.0 when there are none)."""
    sids = [sid for sid in schedule.accepted if traverses_wireless(instance, schedule, sid)]
    if not sids:
        return 1.0
    return float(np.mean([success_probability(instance, schedule, sid, mode) for sid in sids]))


def monte_carlo_success(
    instance: ProblemInstance,
    schedule: Schedule,
    trials: int,
    seed: int,
    stream_id: str | None = None,
    mode: str = "frame",
) -> float:
    """Empirical success rate from sampled wireless delays.

    For one stream: fraction of trials in which all its wireless frames meet
    their budgets. Without ``stream_id``: mean of that rate over accepted
    wireless streams.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if stream_id is not None:
        sids = [stream_id]
    else:
        sids = [sid for sid in schedule.accepted if traverses_wireless(instance, schedule, sid)]
        if not sids:
            return 1.0
    root = np.random.SeedSequence(seed)
    rates = []
    for sid, child in zip(sids, root.spawn(len(sids))):
        frames = _frame_cutoffs(instance, schedule, sid, mode)
        ok = np.ones(trials, dtype=bool)
        for (hist, cutoff), sub in zip(frames, child.spawn(len(frames))):
            rng = np.random.default_rng(sub)
            cum = np.cumsum([float(m) for m in hist.masses])
            cum[-1] = 1.0
            idx = np.searchsorted(cum, rng.random(trials), side="right")
            delays = np.asarray(hist.delays, dtype=np.int64)[np.minimum(idx, len(cum) - 1)]
            ok &= delays <= cutoff
        rates.append(ok.mean())
    return float(np.mean(rates))


def kpi_report(instance: ProblemInstance, schedule: Schedule, validate: bool = True) -> KpiReport:
    success = {sid: success_probability(instance, schedule, sid) for sid in schedule.accepted}
    return KpiReport(
        requested=len(instance.streams),
        scheduled_ratio=scheduled_ratio(instance, schedule),
        priority3_ratio=scheduled_ratio(instance, schedule, 3),
        port_utilization=port_utilization(schedule, sorted(instance.graph.ports)),
        success=success,
        aggregate_success=aggregate_success(instance, schedule),
        violations=validate_schedule(instance, schedule) if validate else [],
    )


def kpi_row(instance, schedule: Schedule, runtime_s: float | None, trials: int = 0, seed: int = 0) -> dict:
    rep = kpi_report(instance, schedule, validate=False)
    mc = monte_carlo_success(instance, schedule, trials, seed) if trials > 0 else ""
    return {
        "instance_id": instance.id,
        "method": schedule.method,
        "batches": schedule.batch_count,
        "gamma": f"{float(schedule.gamma):.4g}",
        "requested": rep.requested,
        "scheduled": f"{rep.scheduled_ratio:.6f}",
        "scheduled_p3": f"{rep.priority3_ratio:.6f}",
        "port_util": f"{rep.port_utilization:.6f}",
        "runtime_s": "" if runtime_s is None else f"{runtime_s:.3f}",
        "success_prob_analytic": f"{rep.aggregate_success:.6f}",
        "success_prob_mc": "" if mc == "" else f"{mc:.6f}",
    }
