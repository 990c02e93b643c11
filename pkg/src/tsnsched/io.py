"""Instance, schedule, GCL and KPI files.

Instance and schedule files store integer ticks and exact fractions as
strings, so a save/load round trip is lossless. Topology files use
physical units (microseconds, bits per second) and reference one delay
histogram CSV per wireless profile.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .analysis import KPI_COLUMNS
from .model import (
    DelayProfile,
    Histogram,
    Node,
    Port,
    ProblemInstance,
    Stream,
    as_fraction,
    build_graph,
    load_delay_profile,
    us_to_ticks,
)
from .scheduler import BatchReport, Schedule, StreamSchedule

SCHEMA_VERSION = 1
HISTOGRAM_HEADER = ("packet_size_bytes", "delay_us", "count")


class FormatError(ValueError):
    """Malformed or incompatible input file."""


def _frac(x: Fraction) -> str:
    return str(Fraction(x))


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _read_json(path, kind: str | None = None) -> dict:
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    check_header(data, kind)
    return data


def check_header(data: dict, kind: str | None) -> None:
    if not isinstance(data, dict):
        raise FormatError("top-level JSON value must be an object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise FormatError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    if kind is not None and data.get("kind") != kind:
        raise FormatError(f"expected a {kind} file, got {data.get('kind')!r}")


# -- instance ---------------------------------------------------------------

def instance_to_dict(inst: ProblemInstance) -> dict:
    g = inst.graph
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "instance",
        "id": inst.id,
        "tick_s": _frac(g.tick),
        "gamma": _frac(inst.gamma),
        "nodes": [{"id": n.id, "kind": n.kind} for n in g.nodes.values()],
        "ports": [
            {
                "id": p.id, "src": p.src, "dst": p.dst, "rate_bps": p.rate_bps,
                "prop_delay": p.prop_delay, "proc_delay": p.proc_delay, "profile": p.profile,
            }
            for p in g.ports.values()
        ],
        "profiles": [
            {
                "id": prof.id,
                "percentile": _frac(prof.percentile),
                "histograms": [
                    {
                        "packet_size": size,
                        "delays": list(h.delays),
                        "masses": [_frac(m) for m in h.masses],
                    }
                    for size, h in sorted(prof.histograms.items())
                ],
            }
            for prof in g.profiles.values()
        ],
        "streams": [
            {
                "id": s.id, "talker": s.talker, "listener": s.listener, "period": s.period,
                "max_latency": s.max_latency, "max_jitter": s.max_jitter,
                "packet_size": s.packet_size, "frames": s.frames, "priority": s.priority,
            }
            for s in inst.streams
        ],
        "paths": {sid: [list(p) for p in paths] for sid, paths in inst.paths.items()},
        "gamma_overrides": [
            {"stream": sid, "port": pid, "gamma": _frac(v)}
            for (sid, pid), v in sorted(inst.gamma_overrides.items())
        ],
    }


def instance_from_dict(data: dict) -> ProblemInstance:
    check_header(data, "instance")
    try:
        profiles = [
            DelayProfile(
                p["id"],
                {
                    h["packet_size"]: Histogram(tuple(h["delays"]), tuple(Fraction(m) for m in h["masses"]))
                    for h in p["histograms"]
                },
                Fraction(p["percentile"]),
            )
            for p in data.get("profiles", [])
        ]
        graph = build_graph(
            [Node(n["id"], n["kind"]) for n in data["nodes"]],
            [Port(**p) for p in data["ports"]],
            profiles,
            Fraction(data["tick_s"]),
        )
        streams = tuple(Stream(**s) for s in data["streams"])
        paths = {sid: tuple(tuple(p) for p in ps) for sid, ps in data.get("paths", {}).items()}
        overrides = {(o["stream"], o["port"]): Fraction(o["gamma"]) for o in data.get("gamma_overrides", [])}
        return ProblemInstance(graph, streams, paths, Fraction(data["gamma"]), overrides, data.get("id", "instance"))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed instance file: {exc!r}") from exc


def save_instance(inst: ProblemInstance, path) -> None:
    _write(path, dumps(instance_to_dict(inst)))


def load_instance(path) -> ProblemInstance:
    return instance_from_dict(_read_json(path, "instance"))


# -- topology ---------------------------------------------------------------

def read_histogram_csv(path) -> list[tuple[int, Fraction, int]]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != HISTOGRAM_HEADER:
            raise FormatError(f"{path}: expected header {','.join(HISTOGRAM_HEADER)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                size, delay, count = row
                rows.append((int(size), as_fraction(delay.strip()), int(count)))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return rows


def load_topology(path):
    """Graph from a topology JSON file; profile CSV paths resolve relative to it."""
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    tick = as_fraction(data.get("tick_us", 1)) / 1_000_000
    profiles = []
    for p in data.get("profiles", []):
        csv_path = Path(p["csv"])
        if not csv_path.is_absolute():
            csv_path = path.parent / csv_path
        profiles.append(load_delay_profile(p["id"], read_histogram_csv(csv_path), tick, p.get("percentile", 100)))
    ports = []
    for p in data["ports"]:
        ports.append(Port(
            p["id"], p["src"], p["dst"],
            rate_bps=int(p.get("rate_bps", 0)),
            prop_delay=us_to_ticks(p.get("prop_delay_us", 0), tick),
            proc_delay=us_to_ticks(p.get("proc_delay_us", 0), tick),
            profile=p.get("profile"),
        ))
    try:
        return build_graph([Node(n["id"], n["kind"]) for n in data["nodes"]], ports, profiles, tick)
    except KeyError as exc:
        raise FormatError(f"{path}: missing field {exc}") from exc


# -- schedule ---------------------------------------------------------------

def schedule_to_dict(sched: Schedule, reproducible: bool = False) -> dict:
    """``reproducible`` zeroes wall-clock fields so reruns compare byte-equal."""
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "schedule",
        "instance_id": sched.instance_id,
        "gamma": _frac(sched.gamma),
        "hypercycle": sched.hypercycle,
        "method": sched.method,
        "batch_count": sched.batch_count,
        "streams": [
            {
                "id": ss.stream_id,
                "accepted": ss.accepted,
                "path_index": ss.path_index,
                "path": list(ss.path),
                "batch": ss.batch,
                "windows": [
                    {"instance": u, "port": p, "start": start, "length": length}
                    for (u, p), (start, length) in sorted(
                        ss.windows.items(), key=lambda kv: (kv[0][0], ss.path.index(kv[0][1]))
                    )
                ],
            }
            for ss in sched.streams.values()
        ],
        "batches": [
            {
                "index": b.index, "streams": b.streams, "status": b.status, "objective": b.objective,
                "wall_time_s": 0.0 if reproducible else round(b.wall_time, 6),
                "time_budget_s": 0.0 if reproducible and b.time_budget is not None else b.time_budget,
                "constraints": dict(sorted(b.constraints.items())),
                "variables": b.variables, "accepted": b.accepted,
                "message": "" if reproducible else b.message,
            }
            for b in sched.batches
        ],
    }


def schedule_from_dict(data: dict) -> Schedule:
    check_header(data, "schedule")
    streams = {}
    for s in data["streams"]:
        ss = StreamSchedule(s["id"], s["accepted"], s["path_index"], tuple(s["path"]), batch=s.get("batch"))
        for w in s["windows"]:
            ss.windows[(w["instance"], w["port"])] = (w["start"], w["length"])
        streams[ss.stream_id] = ss
    batches = [
        BatchReport(
            b["index"], b["streams"], b["status"], b["objective"], b["wall_time_s"],
            b["time_budget_s"], b["constraints"], b["variables"], b["accepted"], b.get("message", ""),
        )
        for b in data.get("batches", [])
    ]
    return Schedule(
        data["instance_id"], Fraction(data["gamma"]), data["hypercycle"], streams,
        data["method"], data["batch_count"], batches,
    )


def save_schedule(sched: Schedule, path, reproducible: bool = False) -> None:
    _write(path, dumps(schedule_to_dict(sched, reproducible)))


def load_schedule(path) -> Schedule:
    return schedule_from_dict(_read_json(path, "schedule"))


# -- GCL --------------------------------------------------------------------

class GclError(ValueError):
    """Overlapping windows on one port; the schedule is not valid."""


def export_gcl(sched: Schedule, ports: Iterable[str] = ()) -> dict:
    """Per port: cycle length and sorted gate (open, close) pairs.

    Windows that touch exactly are merged into one entry. Overlaps are a hard
    error. ``ports`` lists ports to include even when they carry no window.
    """
    entries: dict[str, list[list[int]]] = {p: [] for p in ports}
    for p, wins in sched.port_timeline().items():
        merged: list[list[int]] = []
        for start, end, sid, u in wins:
            if merged and start < merged[-1][1]:
                raise GclError(f"port {p}: window of {sid}#{u} at [{start},{end}) overlaps previous entry")
            if merged and start == merged[-1][1]:
                merged[-1][1] = end
            else:
                merged.append([start, end])
        entries[p] = merged
    offsets = {
        ss.stream_id: [{"instance": u, "offset": off} for u, off in sorted(ss.talker_offsets().items())]
        for ss in sched.streams.values()
        if ss.accepted
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "gcl",
        "instance_id": sched.instance_id,
        "cycle": sched.hypercycle,
        "ports": {p: [{"open": a, "close": b} for a, b in v] for p, v in sorted(entries.items())},
        "talker_offsets": offsets,
    }


def save_gcl(sched: Schedule, path, ports: Iterable[str] = ()) -> None:
    _write(path, dumps(export_gcl(sched, ports)))


# -- KPI CSV ----------------------------------------------------------------

def kpi_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION}\n")
    writer = csv.DictWriter(buf, fieldnames=KPI_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def save_kpi_csv(rows: Sequence[dict], path) -> None:
    _write(path, kpi_csv(rows))


def load_kpi_csv(path) -> list[dict]:
    with open(path, encoding="utf-8") as f:
        first = f.readline().strip()
        if first != f"# schema_version={SCHEMA_VERSION}":
            raise FormatError(f"{path}: missing schema_version header")
        return list(csv.DictReader(f))
