"""Loop-free k-shortest candidate paths as port sequences (Yen)."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

from .model import NetworkGraph, ProblemInstance, Stream

WeightFn = Callable[[str], int]

DEFAULT_K = 3


@dataclass(frozen=True)
class CandidatePath:
    stream_id: str
    index: int
    ports: tuple[str, ...]
    length: int


def hop_weight(_port_id: str) -> int:
    return 1


def _dijkstra(
    graph: NetworkGraph,
    source: str,
    target: str,
    weight: WeightFn,
    banned_nodes: frozenset[str] = frozenset(),
    banned_ports: frozenset[str] = frozenset(),
) -> tuple[int, tuple[str, ...]] | None:
    # Labels are (distance, port sequence); with positive weights the
    # lexicographically smallest shortest path keeps optimal substructure.
    best: dict[str, tuple[int, tuple[str, ...]]] = {source: (0, ())}
    heap = [(0, (), source)]
    done: set[str] = set()
    while heap:
        dist, seq, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if node == target:
            return dist, seq
        for pid in graph.out_ports.get(node, ()):
            if pid in banned_ports:
                continue
            nxt = graph.ports[pid].dst
            if nxt in banned_nodes or nxt in done:
                continue
            w = weight(pid)
            if w <= 0:
                raise ValueError(f"non-positive weight on port {pid}")
            label = (dist + w, seq + (pid,))
            if nxt not in best or label < best[nxt]:
                best[nxt] = label
                heapq.heappush(heap, (label[0], label[1], nxt))
    return None


def shortest_path(graph: NetworkGraph, source: str, target: str, weight: WeightFn = hop_weight):
    return _dijkstra(graph, source, target, weight)


def k_shortest_paths(
    graph: NetworkGraph,
    talker: str,
    listener: str,
    k: int = DEFAULT_K,
    weight: WeightFn = hop_weight,
    stream_id: str = "",
) -> list[CandidatePath]:
    """Up to ``k`` loop-free paths ordered by (weight, port-id sequence)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if talker == listener:
        raise ValueError("talker and listener must differ")
    first = _dijkstra(graph, talker, listener, weight)
    if first is None:
        return []
    found = [first]
    candidates: list[tuple[int, tuple[str, ...]]] = []
    seen = {first[1]}
    while len(found) < k:
        _, prev = found[-1]
        nodes = [talker] + [graph.ports[p].dst for p in prev]
        for i in range(len(prev)):
            spur = nodes[i]
            root = prev[:i]
            banned_ports = frozenset(
                seq[i] for _, seq in found if len(seq) > i and seq[:i] == root
            )
            banned_nodes = frozenset(nodes[:i])
            tail = _dijkstra(graph, spur, listener, weight, banned_nodes, banned_ports)
            if tail is None:
                continue
            seq = root + tail[1]
            if seq in seen:
                continue
            seen.add(seq)
            heapq.heappush(candidates, (sum(weight(p) for p in seq), seq))
        if not candidates:
            break
        found.append(heapq.heappop(candidates))
    return [CandidatePath(stream_id, i, seq, w) for i, (w, seq) in enumerate(found)]


def stream_weight(graph: NetworkGraph, stream: Stream) -> WeightFn:
    """Nominal traversal time of the stream's frames at each port."""
    from .timing import port_timing

    cache: dict[str, int] = {}

    def weight(pid: str) -> int:
        if pid not in cache:
            cache[pid] = port_timing(graph, stream, pid).t
        return cache[pid]

    return weight


def candidate_paths(graph: NetworkGraph, streams, k: int = DEFAULT_K, weight: str = "time") -> dict[str, tuple[tuple[str, ...], ...]]:
    out = {}
    for s in streams:
        fn = stream_weight(graph, s) if weight == "time" else hop_weight
        out[s.id] = tuple(p.ports for p in k_shortest_paths(graph, s.talker, s.listener, k, fn, s.id))
    return out


def with_candidate_paths(instance: ProblemInstance, k: int = DEFAULT_K) -> ProblemInstance:
    paths = candidate_paths(instance.graph, instance.streams, k)
    return ProblemInstance(instance.graph, instance.streams, paths, instance.gamma, instance.gamma_overrides, instance.id)
