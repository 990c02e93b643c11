"""Topology, delay profiles and stream requests.

All durations are integer clock ticks. Conversions from physical units
round up, so derived deadlines are never optimistic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

NODE_KINDS = (
    "wired-end-station",
    "wireless-end-station",
    "wired-bridge",
    "wireless-bridge",
)

DEFAULT_TICK = Fraction(1, 1_000_000)


class ModelError(ValueError):
    """Invalid topology, stream or instance data."""


class ProfileError(ValueError):
    """Invalid delay histogram or a lookup outside its support."""


def as_fraction(value) -> Fraction:
    """Exact rational from int/str/float/Fraction; floats go through repr."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def ceil_frac(value: Fraction) -> int:
    return math.ceil(value)


def us_to_ticks(us, tick: Fraction = DEFAULT_TICK) -> int:
    return ceil_frac(as_fraction(us) / 1_000_000 / tick)


@dataclass(frozen=True)
class Node:
    id: str
    kind: str

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise ModelError(f"node {self.id!r}: unknown kind {self.kind!r}")

    @property
    def is_bridge(self) -> bool:
        return self.kind.endswith("bridge")


@dataclass(frozen=True)
class Port:
    """Egress port of one directed link.

    Wired ports carry a line rate; wireless ports name a DelayProfile.
    """

    id: str
    src: str
    dst: str
    rate_bps: int = 0
    prop_delay: int = 0
    proc_delay: int = 0
    profile: str | None = None

    @property
    def wireless(self) -> bool:
        return self.profile is not None


@dataclass(frozen=True)
class Histogram:
    """Delay distribution for one packet size; delays strictly increasing."""

    delays: tuple[int, ...]
    masses: tuple[Fraction, ...]

    def __post_init__(self):
        if not self.delays:
            raise ProfileError("empty histogram")
        if len(self.delays) != len(self.masses):
            raise ProfileError("delays and masses differ in length")
        if any(b <= a for a, b in zip(self.delays, self.delays[1:])):
            raise ProfileError("delays must be strictly increasing")
        if self.delays[0] < 0:
            raise ProfileError("negative delay")
        if any(m < 0 for m in self.masses):
            raise ProfileError("negative probability mass")
        if abs(float(sum(self.masses)) - 1.0) > 1e-9:
            raise ProfileError(f"masses sum to {float(sum(self.masses))}, expected 1")

    @classmethod
    def from_counts(cls, pairs: Iterable[tuple[int, int]]) -> "Histogram":
        acc: dict[int, int] = {}
        for delay, count in pairs:
            if delay < 0:
                raise ProfileError(f"negative delay {delay}")
            if count < 0:
                raise ProfileError(f"negative count {count}")
            acc[delay] = acc.get(delay, 0) + count
        total = sum(acc.values())
        if total <= 0:
            raise ProfileError("histogram has no mass")
        items = sorted((d, c) for d, c in acc.items() if c > 0)
        return cls(tuple(d for d, _ in items), tuple(Fraction(c, total) for _, c in items))

    @property
    def min_delay(self) -> int:
        return self.delays[0]

    @property
    def max_delay(self) -> int:
        return self.delays[-1]

    def cdf(self, delay: int) -> Fraction:
        """P(D <= delay)."""
        total = Fraction(0)
        for d, m in zip(self.delays, self.masses):
            if d > delay:
                break
            total += m
        return total

    def percentile(self, pct) -> int:
        """Nearest-rank upper bound: smallest delay whose CDF reaches pct/100."""
        pct = as_fraction(pct)
        if not 0 < pct <= 100:
            raise ProfileError(f"percentile must lie in (0, 100], got {pct}")
        target = pct / 100
        acc = Fraction(0)
        for d, m in zip(self.delays, self.masses):
            acc += m
            if acc >= target:
                return d
        return self.delays[-1]


@dataclass(frozen=True)
class DelayProfile:
    """Per-packet-size delay histograms of one wireless link."""

    id: str
    histograms: Mapping[int, Histogram]
    percentile: Fraction = Fraction(100)

    def __post_init__(self):
        if not self.histograms:
            raise ProfileError(f"profile {self.id!r} has no histograms")
        object.__setattr__(self, "percentile", as_fraction(self.percentile))
        if not 0 < self.percentile <= 100:
            raise ProfileError("percentile must lie in (0, 100]")

    @property
    def sizes(self) -> list[int]:
        return sorted(self.histograms)

    def _anchors(self, size: int) -> tuple[int, int]:
        sizes = self.sizes
        if size < sizes[0] or size > sizes[-1]:
            raise ProfileError(
                f"profile {self.id!r}: packet size {size} outside measured range "
                f"[{sizes[0]}, {sizes[-1]}]"
            )
        lo = max(s for s in sizes if s <= size)
        hi = min(s for s in sizes if s >= size)
        return lo, hi

    def bounds(self, size: int, percentile=None) -> tuple[int, int]:
        """(min delay, upper bound) for ``size``, interpolating between anchors."""
        pct = self.percentile if percentile is None else percentile
        lo, hi = self._anchors(size)
        h_lo = self.histograms[lo]
        if lo == hi:
            return h_lo.min_delay, h_lo.percentile(pct)
        h_hi = self.histograms[hi]
        return interpolate_bounds(
            (lo, h_lo.min_delay, h_lo.percentile(pct)),
            (hi, h_hi.min_delay, h_hi.percentile(pct)),
            size,
        )

    def min_delay(self, size: int) -> int:
        return self.bounds(size)[0]

    def deviation(self, size: int) -> int:
        lo, ub = self.bounds(size)
        return ub - lo

    def histogram(self, size: int) -> Histogram:
        """Histogram for ``size``.

        Off-anchor sizes reuse the lower anchor's shape, mapped affinely so
        that its minimum and percentile bound land on the interpolated ones.
        """
        lo, hi = self._anchors(size)
        base = self.histograms[lo]
        if lo == hi:
            return base
        new_min, new_ub = self.bounds(size)
        old_min, old_ub = base.min_delay, base.percentile(self.percentile)
        pairs: dict[int, Fraction] = {}
        for d, m in zip(base.delays, base.masses):
            if old_ub == old_min:
                mapped = new_min + (d - old_min)
            else:
                mapped = ceil_frac(new_min + Fraction((d - old_min) * (new_ub - new_min), old_ub - old_min))
            pairs[mapped] = pairs.get(mapped, Fraction(0)) + m
        keys = sorted(pairs)
        return Histogram(tuple(keys), tuple(pairs[k] for k in keys))


def interpolate_bounds(small: tuple[int, int, int], large: tuple[int, int, int], size: int) -> tuple[int, int]:
    """Linear interpolation of (min, ub) between two (size, min, ub) anchors.

    Sizes outside the anchor range are rejected, not clamped.
    """
    s0, min0, ub0 = small
    s1, min1, ub1 = large
    if s0 > s1:
        (s0, min0, ub0), (s1, min1, ub1) = (s1, min1, ub1), (s0, min0, ub0)
    if not s0 <= size <= s1:
        raise ProfileError(f"packet size {size} outside anchor range [{s0}, {s1}]")
    if s0 == s1:
        return min0, ub0
    w = Fraction(size - s0, s1 - s0)
    return ceil_frac(min0 + w * (min1 - min0)), ceil_frac(ub0 + w * (ub1 - ub0))


def load_delay_profile(
    profile_id: str,
    records: Iterable[tuple[int, float, int]],
    tick: Fraction = DEFAULT_TICK,
    percentile=100,
) -> DelayProfile:
    """Build a profile from ``(packet_size_bytes, delay_us, count)`` records."""
    by_size: dict[int, list[tuple[int, int]]] = {}
    for size, delay_us, count in records:
        if as_fraction(delay_us) < 0:
            raise ProfileError(f"negative delay {delay_us} us")
        by_size.setdefault(int(size), []).append((us_to_ticks(delay_us, tick), int(count)))
    if not by_size:
        raise ProfileError(f"profile {profile_id!r}: no records")
    hists = {size: Histogram.from_counts(pairs) for size, pairs in by_size.items()}
    return DelayProfile(profile_id, hists, as_fraction(percentile))


def percentile_upper_bound(profile: DelayProfile, packet_size: int, percentile) -> int:
    if packet_size not in profile.histograms:
        raise ProfileError(f"profile {profile.id!r} has no histogram for {packet_size} B")
    return profile.histograms[packet_size].percentile(percentile)


@dataclass(frozen=True)
class Stream:
    id: str
    talker: str
    listener: str
    period: int
    max_latency: int
    max_jitter: int
    packet_size: int
    frames: int = 1
    priority: int = 1

    def __post_init__(self):
        if self.period <= 0:
            raise ModelError(f"stream {self.id}: period must be positive")
        if not 0 < self.max_latency <= self.period:
            raise ModelError(f"stream {self.id}: need 0 < latency <= period")
        if not 0 <= self.max_jitter < self.period:
            raise ModelError(f"stream {self.id}: need 0 <= jitter < period")
        if self.frames < 1:
            raise ModelError(f"stream {self.id}: frames per cycle must be >= 1")
        if self.priority not in (1, 2, 3):
            raise ModelError(f"stream {self.id}: priority must be 1, 2 or 3")
        if self.packet_size < 0:
            raise ModelError(f"stream {self.id}: negative packet size")
        if self.talker == self.listener:
            raise ModelError(f"stream {self.id}: talker equals listener")

    @property
    def frame_sizes(self) -> tuple[int, ...]:
        return (self.packet_size,) * self.frames


def frames_for_payload(payload: int, mtu: int = 1500) -> tuple[int, ...]:
    """Split a payload into MTU-sized frames (last one carries the rest)."""
    if mtu <= 0:
        raise ModelError("mtu must be positive")
    if payload <= 0:
        return (0,)
    full, rest = divmod(payload, mtu)
    return (mtu,) * full + ((rest,) if rest else ())


@dataclass(frozen=True)
class NetworkGraph:
    nodes: Mapping[str, Node]
    ports: Mapping[str, Port]
    profiles: Mapping[str, DelayProfile] = field(default_factory=dict)
    tick: Fraction = DEFAULT_TICK
    out_ports: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    link: Mapping[tuple[str, str], str] = field(default_factory=dict)

    def port(self, port_id: str) -> Port:
        return self.ports[port_id]

    def port_between(self, src: str, dst: str) -> str | None:
        return self.link.get((src, dst))

    @property
    def wireless_ports(self) -> list[str]:
        return [p for p, port in self.ports.items() if port.wireless]


def build_graph(
    nodes: Sequence[Node],
    ports: Sequence[Port],
    profiles: Iterable[DelayProfile] = (),
    tick=DEFAULT_TICK,
) -> NetworkGraph:
    node_map: dict[str, Node] = {}
    for n in nodes:
        if n.id in node_map:
            raise ModelError(f"duplicate node id {n.id!r}")
        node_map[n.id] = n
    prof_map: dict[str, DelayProfile] = {}
    for p in profiles:
        if p.id in prof_map:
            raise ModelError(f"duplicate profile id {p.id!r}")
        prof_map[p.id] = p
    port_map: dict[str, Port] = {}
    link: dict[tuple[str, str], str] = {}
    out: dict[str, list[str]] = {n: [] for n in node_map}
    for p in ports:
        if p.id in port_map:
            raise ModelError(f"duplicate port id {p.id!r}")
        for end in (p.src, p.dst):
            if end not in node_map:
                raise ModelError(f"port {p.id!r} references unknown node {end!r}")
        if (p.src, p.dst) in link:
            raise ModelError(f"second port for link {p.src}->{p.dst}")
        if p.wireless:
            if p.profile not in prof_map:
                raise ModelError(f"port {p.id!r} references unknown profile {p.profile!r}")
        elif p.rate_bps <= 0:
            raise ModelError(f"wired port {p.id!r} needs a positive rate")
        port_map[p.id] = p
        link[(p.src, p.dst)] = p.id
        out[p.src].append(p.id)
    return NetworkGraph(
        node_map,
        port_map,
        prof_map,
        as_fraction(tick),
        {n: tuple(sorted(ps)) for n, ps in out.items()},
        link,
    )


def transmission_time(packet_size: int, port: Port, graph: NetworkGraph) -> int:
    """Serialization time in ticks; wireless ports report their minimum delay."""
    if port.wireless:
        return graph.profiles[port.profile].min_delay(packet_size)
    if port.rate_bps <= 0:
        raise ModelError(f"wired port {port.id!r} has no rate")
    return ceil_frac(Fraction(packet_size * 8, port.rate_bps) / graph.tick)


@dataclass(frozen=True)
class ProblemInstance:
    graph: NetworkGraph
    streams: tuple[Stream, ...]
    paths: Mapping[str, tuple[tuple[str, ...], ...]]
    gamma: Fraction = Fraction(1)
    gamma_overrides: Mapping[tuple[str, str], Fraction] = field(default_factory=dict)
    id: str = "instance"

    def __post_init__(self):
        object.__setattr__(self, "gamma", as_fraction(self.gamma))
        if not 0 <= self.gamma <= 1:
            raise ModelError("robustness level must lie in [0, 1]")
        for key, g in self.gamma_overrides.items():
            if not 0 <= as_fraction(g) <= 1:
                raise ModelError(f"robustness override {key} outside [0, 1]")
        ids = [s.id for s in self.streams]
        if len(set(ids)) != len(ids):
            raise ModelError("duplicate stream ids")
        for s in self.streams:
            for end in (s.talker, s.listener):
                if end not in self.graph.nodes:
                    raise ModelError(f"stream {s.id}: unknown node {end!r}")
            for path in self.paths.get(s.id, ()):
                check_path(self.graph, path, s.talker, s.listener)

    @cached_property
    def stream_map(self) -> dict[str, Stream]:
        return {s.id: s for s in self.streams}

    def candidate_paths(self, stream_id: str) -> tuple[tuple[str, ...], ...]:
        return tuple(self.paths.get(stream_id, ()))

    def gamma_for(self, stream_id: str, port_id: str, gamma=None) -> Fraction:
        if (stream_id, port_id) in self.gamma_overrides:
            return as_fraction(self.gamma_overrides[(stream_id, port_id)])
        return self.gamma if gamma is None else as_fraction(gamma)

    def with_gamma(self, gamma) -> "ProblemInstance":
        return ProblemInstance(self.graph, self.streams, self.paths, as_fraction(gamma), self.gamma_overrides, self.id)

    def with_streams(self, streams: Sequence[Stream]) -> "ProblemInstance":
        keep = {s.id for s in streams}
        paths = {k: v for k, v in self.paths.items() if k in keep}
        return ProblemInstance(self.graph, tuple(streams), paths, self.gamma, self.gamma_overrides, self.id)


def check_path(graph: NetworkGraph, path: Sequence[str], talker: str, listener: str) -> None:
    if not path:
        raise ModelError("empty path")
    ports = [graph.ports[p] for p in path]
    if ports[0].src != talker or ports[-1].dst != listener:
        raise ModelError(f"path {list(path)} does not join {talker} to {listener}")
    seen = {ports[0].src}
    for a, b in zip(ports, ports[1:]):
        if a.dst != b.src:
            raise ModelError(f"path {list(path)} is not contiguous at {a.id}")
    for p in ports:
        if p.dst in seen:
            raise ModelError(f"path {list(path)} revisits node {p.dst}")
        seen.add(p.dst)
