"""Robust timing: per-frame bounds, windows, inter-port offsets, hypercycle.

Robustness levels are exact rationals; ``gamma * d`` is rounded up to whole
ticks before it enters any bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

from .model import ModelError, NetworkGraph, Stream, as_fraction, transmission_time

DEFAULT_HC_CAP = 10**9


@dataclass(frozen=True)
class PortTiming:
    ft: tuple[int, ...]
    fd: tuple[int, ...]

    @property
    def t(self) -> int:
        return sum(self.ft)

    @property
    def d(self) -> int:
        return sum(self.fd)

    @property
    def frames(self) -> int:
        return len(self.ft)


@dataclass(frozen=True)
class CycleStructure:
    hypercycle: int
    repetitions: dict[str, int]


def robust_budget(gamma, deviation: int) -> int:
    return math.ceil(as_fraction(gamma) * deviation)


def frame_min_time(graph: NetworkGraph, port_id: str, size: int) -> int:
    port = graph.ports[port_id]
    if port.wireless:
        return graph.profiles[port.profile].min_delay(size)
    return transmission_time(size, port, graph) + port.prop_delay + port.proc_delay


def frame_deviation(graph: NetworkGraph, port_id: str, size: int) -> int:
    port = graph.ports[port_id]
    if not port.wireless:
        return 0
    return graph.profiles[port.profile].deviation(size)


def timing_for_sizes(graph: NetworkGraph, port_id: str, sizes: Sequence[int]) -> PortTiming:
    if not sizes:
        raise ModelError("at least one frame required")
    return PortTiming(
        tuple(frame_min_time(graph, port_id, s) for s in sizes),
        tuple(frame_deviation(graph, port_id, s) for s in sizes),
    )


def port_timing(graph: NetworkGraph, stream: Stream, port_id: str) -> PortTiming:
    return timing_for_sizes(graph, port_id, stream.frame_sizes)


def arrival_bound(timing: PortTiming, i: int, gamma) -> int:
    """Latest completion of frame ``i`` (1-based) under the robustness budget."""
    if not 1 <= i <= timing.frames:
        raise ValueError(f"frame index {i} outside 1..{timing.frames}")
    return sum(timing.ft[:i]) + min(robust_budget(gamma, timing.d), sum(timing.fd[:i]))


def inter_port_offset(timing: PortTiming, next_timing: PortTiming, gamma, next_gamma=None) -> int:
    """Start offset between consecutive ports; each bound uses its own port's level."""
    next_gamma = gamma if next_gamma is None else next_gamma
    ns = arrival_bound(timing, 1, gamma)
    for i in range(2, timing.frames + 1):
        ns = max(ns, arrival_bound(timing, i, gamma) - arrival_bound(next_timing, i - 1, next_gamma))
    return ns


def window_length(timing: PortTiming, gamma) -> int:
    return timing.t + robust_budget(gamma, timing.d)


def frame_budgets(timing: PortTiming, gamma) -> list[int]:
    """Deviation budget of each frame: the cumulative truncation split per frame."""
    cap = robust_budget(gamma, timing.d)
    out, prev, acc = [], 0, 0
    for fd in timing.fd:
        acc += fd
        cur = min(cap, acc)
        out.append(cur - prev)
        prev = cur
    return out


def cycle_structure(streams: Iterable[Stream], cap: int = DEFAULT_HC_CAP) -> CycleStructure:
    streams = list(streams)
    periods = [s.period for s in streams]
    if any(p <= 0 for p in periods):
        raise ModelError("periods must be positive")
    hc = reduce(math.lcm, periods, 1)
    if hc > cap:
        raise ModelError(
            f"hypercycle {hc} exceeds cap {cap}; harmonize the stream periods"
        )
    return CycleStructure(hc, {s.id: hc // s.period for s in streams})


class TimingTable:
    """Per-(stream, port) timing, windows and offsets for one instance."""

    def __init__(self, instance, gamma=None):
        self.instance = instance
        self.gamma = instance.gamma if gamma is None else as_fraction(gamma)
        self.graph = instance.graph
        self._streams = instance.stream_map
        self._timing: dict[tuple[str, str], PortTiming] = {}

    def level(self, sid: str, pid: str) -> Fraction:
        return self.instance.gamma_for(sid, pid, self.gamma)

    def timing(self, sid: str, pid: str) -> PortTiming:
        key = (sid, pid)
        if key not in self._timing:
            self._timing[key] = port_timing(self.graph, self._streams[sid], pid)
        return self._timing[key]

    def window(self, sid: str, pid: str, gamma=None) -> int:
        g = self.level(sid, pid) if gamma is None else gamma
        return window_length(self.timing(sid, pid), g)

    def offset(self, sid: str, pid: str, next_pid: str) -> int:
        return inter_port_offset(
            self.timing(sid, pid), self.timing(sid, next_pid), self.level(sid, pid), self.level(sid, next_pid)
        )

    def path_offsets(self, sid: str, path: Sequence[str]) -> list[int]:
        """Start of each port's window relative to the first port."""
        offs = [0]
        for p, q in zip(path, path[1:]):
            offs.append(offs[-1] + self.offset(sid, p, q))
        return offs
