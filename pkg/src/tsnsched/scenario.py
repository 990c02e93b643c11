"""Seeded scenario generation: topology classes, stream pools, feasible bias."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .io import load_topology, read_histogram_csv
from .model import (
    ModelError,
    NetworkGraph,
    Node,
    Port,
    ProblemInstance,
    Stream,
    as_fraction,
    build_graph,
    load_delay_profile,
    us_to_ticks,
)
from .pathing import candidate_paths
from .scheduler import run_batch_heuristic, sort_streams

log = logging.getLogger(__name__)

DATASETS = {
    "urllc": {
        "periods_us": [500, 1000, 2000, 4000, 8000],
        "packet_sizes": [32, 64, 128, 256, 512, 1024, 1420],
        "profiles": {"downlink": "urllc.csv", "uplink": "urllc.csv"},
    },
    "det6g": {
        "periods_us": [20000, 40000],
        "packet_sizes": [100],
        "profiles": {"downlink": "det6g_downlink.csv", "uplink": "det6g_uplink.csv"},
    },
}

CLASSES = {"small": (5, 5), "medium": (50, 50), "large": (220, 220)}
MAX_TOPOLOGY_RETRIES = 10


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    topology: str = "small"
    wired_bridges: int | None = None
    wireless_bridges: int | None = None
    streams: int = 20
    dataset: str = "urllc"
    periods_us: tuple[int, ...] | None = None
    packet_sizes: tuple[int, ...] | None = None
    latency_multiples: tuple[str, ...] = ("0.5", "0.6", "0.7", "0.8", "1.0")
    jitter_multiples: tuple[str, ...] = ("0.1", "0.2", "0.3", "0.4", "0.5")
    priorities: tuple[int, ...] = (1, 2, 3)
    profiles: dict[str, str] = field(default_factory=dict)
    percentile: str = "100"
    wireless_fraction: str = "0.5"
    mean_degree: int = 3
    rate_bps: int = 100_000_000
    prop_delay_us: int = 10
    proc_delay_us: int = 10
    tick_us: str = "1"
    gamma: str = "1"
    k: int = 3
    batches: int = 1
    time_limit: float = 600.0
    seed: int | None = None
    feasible_bias: bool = False
    bootstrap_batch: int = 1
    topology_file: str | None = None
    id: str | None = None

    def __post_init__(self):
        if self.topology not in (*CLASSES, "file"):
            raise ScenarioError(f"unknown topology class {self.topology!r}")
        if self.topology == "file" and not self.topology_file:
            raise ScenarioError("topology 'file' needs topology_file")
        if self.dataset not in DATASETS:
            raise ScenarioError(f"unknown dataset {self.dataset!r}")
        for name in ("latency_multiples", "jitter_multiples", "priorities"):
            if not getattr(self, name):
                raise ScenarioError(f"pool {name} is empty")
        for name in ("periods_us", "packet_sizes"):
            v = getattr(self, name)
            if v is not None and not v:
                raise ScenarioError(f"pool {name} is empty")
        if self.streams < 0:
            raise ScenarioError("stream count must be >= 0")
        if not 0 <= as_fraction(self.wireless_fraction) <= 1:
            raise ScenarioError("wireless_fraction must lie in [0, 1]")
        if self.bootstrap_batch != 1:
            raise ScenarioError("only bootstrap batch size 1 is supported")

    @property
    def period_pool(self) -> tuple[int, ...]:
        return tuple(self.periods_us or DATASETS[self.dataset]["periods_us"])

    @property
    def size_pool(self) -> tuple[int, ...]:
        return tuple(self.packet_sizes or DATASETS[self.dataset]["packet_sizes"])

    @property
    def bridge_counts(self) -> tuple[int, int]:
        wired, wireless = CLASSES.get(self.topology, (0, 0))
        return (self.wired_bridges or wired, self.wireless_bridges or wireless)

    @property
    def instance_id(self) -> str:
        return self.id or f"{self.topology}-{self.dataset}-n{self.streams}-seed{self.seed}"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ScenarioError(f"unknown config keys: {sorted(unknown)}")
        clean = {}
        for k, v in data.items():
            if isinstance(v, list):
                v = tuple(str(x) if k in ("latency_multiples", "jitter_multiples") else x for x in v)
            elif k in ("percentile", "wireless_fraction", "tick_us", "gamma") and v is not None:
                v = str(v)
            clean[k] = v
        return cls(**clean)


PRESETS = {
    "small-urllc": ScenarioConfig(topology="small", dataset="urllc"),
    "small-det6g": ScenarioConfig(topology="small", dataset="det6g"),
    "medium-urllc": ScenarioConfig(topology="medium", dataset="urllc", streams=100, batches=10),
    "large-urllc": ScenarioConfig(topology="large", dataset="urllc", streams=1000, batches=50),
}


def load_config(source: str) -> ScenarioConfig:
    """Preset name or path to a JSON config."""
    if source in PRESETS:
        return PRESETS[source]
    with open(source, encoding="utf-8") as f:
        data = json.load(f)
    data.pop("schema_version", None)
    return ScenarioConfig.from_dict(data)


def _profile_records(path_or_name: str):
    p = Path(path_or_name)
    if p.exists():
        return read_histogram_csv(p)
    with resources.as_file(resources.files("tsnsched") / "data" / path_or_name) as bundled:
        if not bundled.exists():
            raise ScenarioError(f"delay histogram {path_or_name!r} not found")
        return read_histogram_csv(bundled)


def _wired_edges(n: int, mean_degree: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Random spanning tree plus extra edges towards the target mean degree."""
    edges = {(int(rng.integers(0, i)), i) for i in range(1, n)}
    target = min(max(n - 1, math.ceil(mean_degree * n / 2)), n * (n - 1) // 2)
    while len(edges) < target:
        a, b = sorted(int(v) for v in rng.choice(n, size=2, replace=False))
        edges.add((a, b))
    return sorted(edges)


def _connected(graph: NetworkGraph) -> bool:
    adj: dict[str, set[str]] = {n: set() for n in graph.nodes}
    for p in graph.ports.values():
        adj[p.src].add(p.dst)
        adj[p.dst].add(p.src)
    if not adj:
        return True
    start = next(iter(adj))
    seen, todo = {start}, [start]
    while todo:
        for m in adj[todo.pop()] - seen:
            seen.add(m)
            todo.append(m)
    return len(seen) == len(adj)


def build_topology(cfg: ScenarioConfig, rng: np.random.Generator) -> NetworkGraph:
    if cfg.topology == "file":
        return load_topology(cfg.topology_file)
    tick = as_fraction(cfg.tick_us) / 1_000_000
    n_wired, n_wireless = cfg.bridge_counts
    if n_wired < 1:
        raise ScenarioError("need at least one wired bridge")
    prop = us_to_ticks(cfg.prop_delay_us, tick)
    proc = us_to_ticks(cfg.proc_delay_us, tick)
    names = DATASETS[cfg.dataset]["profiles"] | cfg.profiles
    profiles = [
        load_delay_profile(pid, _profile_records(names[pid]), tick, cfg.percentile)
        for pid in ("downlink", "uplink")
    ]
    nodes: list[Node] = []
    ports: list[Port] = []

    def wired(a: str, b: str):
        ports.append(Port(f"{a}>{b}", a, b, cfg.rate_bps, prop, proc))
        ports.append(Port(f"{b}>{a}", b, a, cfg.rate_bps, prop, proc))

    bridges = [f"B{i}" for i in range(n_wired)]
    nodes += [Node(b, "wired-bridge") for b in bridges]
    if cfg.topology == "small":
        edges = [(i, (i + 1) % n_wired) for i in range(n_wired)] if n_wired > 2 else [(0, 1)] if n_wired == 2 else []
    else:
        edges = _wired_edges(n_wired, cfg.mean_degree, rng)
    for a, b in edges:
        wired(bridges[a], bridges[b])
    for i, b in enumerate(bridges):
        es = f"E{i}"
        nodes.append(Node(es, "wired-end-station"))
        wired(es, b)
    for j in range(n_wireless):
        wb, ms = f"W{j}", f"M{j}"
        host = bridges[j % n_wired] if cfg.topology == "small" else bridges[int(rng.integers(0, n_wired))]
        nodes += [Node(wb, "wireless-bridge"), Node(ms, "wireless-end-station")]
        wired(wb, host)
        ports.append(Port(f"{wb}>{ms}", wb, ms, profile="downlink"))
        ports.append(Port(f"{ms}>{wb}", ms, wb, profile="uplink"))
    return build_graph(nodes, ports, profiles, tick)


def _draw_stream(cfg: ScenarioConfig, graph: NetworkGraph, rng: np.random.Generator, sid: str, wireless: bool) -> Stream:
    wired_es = sorted(n for n, node in graph.nodes.items() if node.kind == "wired-end-station")
    wireless_es = sorted(n for n, node in graph.nodes.items() if node.kind == "wireless-end-station")
    all_es = wired_es + wireless_es
    if wireless and wireless_es:
        mobile = wireless_es[int(rng.integers(len(wireless_es)))]
        other = [n for n in all_es if n != mobile]
        peer = other[int(rng.integers(len(other)))]
        talker, listener = (mobile, peer) if rng.random() < 0.5 else (peer, mobile)
    else:
        pool = wired_es if len(wired_es) >= 2 else all_es
        a, b = rng.choice(len(pool), size=2, replace=False)
        talker, listener = pool[int(a)], pool[int(b)]
    tick = graph.tick
    period_us = cfg.period_pool[int(rng.integers(len(cfg.period_pool)))]
    size = cfg.size_pool[int(rng.integers(len(cfg.size_pool)))]
    lat = as_fraction(cfg.latency_multiples[int(rng.integers(len(cfg.latency_multiples)))])
    jit = as_fraction(cfg.jitter_multiples[int(rng.integers(len(cfg.jitter_multiples)))])
    prio = cfg.priorities[int(rng.integers(len(cfg.priorities)))]
    period = us_to_ticks(period_us, tick)
    return Stream(
        sid, talker, listener, period,
        max_latency=min(period, math.ceil(lat * period)),
        max_jitter=min(period - 1, math.floor(jit * period)),
        packet_size=int(size), priority=int(prio),
    )


def _draw_streams(cfg, graph, rng, count: int, offset: int = 0) -> list[Stream]:
    n_wireless = math.ceil(as_fraction(cfg.wireless_fraction) * count)
    flags = [True] * n_wireless + [False] * (count - n_wireless)
    rng.shuffle(flags)
    return [_draw_stream(cfg, graph, rng, f"c{offset + i:05d}", w) for i, w in enumerate(flags)]


def _bootstrap(cfg: ScenarioConfig, graph: NetworkGraph, rng: np.random.Generator, solver: dict) -> list[Stream]:
    """Streams a one-stream-per-batch heuristic run accepts, in its own order.

    A candidate pool is drawn and scheduled; the first ``cfg.streams``
    accepted streams (in the heuristic's priority order) are kept and renamed
    ``s000``.. in that order, so the id tie-break of the sort is unchanged.
    The heuristic is rerun on the final set and must accept all of it; the
    pool grows until it does.
    """
    gamma = as_fraction(cfg.gamma)
    pool: list[Stream] = []
    for attempt in range(6):
        extra = max(10, 2 * cfg.streams) * (2 ** attempt)
        pool += _draw_streams(cfg, graph, rng, extra, len(pool))
        inst = ProblemInstance(graph, tuple(pool), candidate_paths(graph, pool, cfg.k), gamma)
        sched = run_batch_heuristic(inst, len(pool), gamma, **solver)
        kept = [s for s in sort_streams(pool) if sched.streams[s.id].accepted][: cfg.streams]
        if len(kept) < cfg.streams:
            log.info("feasible bias: %d of %d accepted from %d candidates", len(kept), cfg.streams, len(pool))
            continue
        kept = [replace(s, id=f"s{i:03d}") for i, s in enumerate(kept)]
        sub = ProblemInstance(graph, tuple(kept), candidate_paths(graph, kept, cfg.k), gamma)
        check = run_batch_heuristic(sub, len(kept), gamma, **solver)
        if check.objective == len(kept):
            return kept
        log.info("feasible bias: replay accepted %d of %d, drawing more", check.objective, len(kept))
    raise ScenarioError(f"feasible-bias generation could not reach {cfg.streams} schedulable streams")


def generate_scenario(cfg: ScenarioConfig, solver: dict | None = None) -> ProblemInstance:
    """Deterministic for a given config; ``solver`` feeds the feasible-bias bootstrap."""
    if cfg.seed is None:
        raise ScenarioError("a seed is mandatory for generated scenarios")
    graph = None
    for attempt in range(MAX_TOPOLOGY_RETRIES):
        topo_rng = np.random.default_rng([cfg.seed, 0, attempt])
        graph = build_topology(cfg, topo_rng)
        if _connected(graph):
            break
        log.warning("generated topology disconnected, retrying with sub-seed %d", attempt + 1)
    else:
        raise ScenarioError(f"no connected topology after {MAX_TOPOLOGY_RETRIES} attempts")

    rng = np.random.default_rng([cfg.seed, 1])
    if cfg.feasible_bias:
        kept = _bootstrap(cfg, graph, rng, solver or {"backend": "external", "total_time_limit": 600.0})
        streams = tuple(kept[i] for i in rng.permutation(len(kept)))
    else:
        drawn = _draw_streams(cfg, graph, rng, cfg.streams)
        streams = tuple(replace(s, id=f"s{i:03d}") for i, s in enumerate(drawn))
    paths = candidate_paths(graph, streams, cfg.k)
    try:
        return ProblemInstance(graph, streams, paths, Fraction(cfg.gamma), {}, cfg.instance_id)
    except ModelError as exc:
        raise ScenarioError(str(exc)) from exc
