"""Solver-agnostic integer model for robust time-aware scheduling.

Variables
    x(s,r,u,p)  window start of instance u of stream s on path r at port p
    z(s,r)      path r of stream s is active
    a(s)        stream s is scheduled
    y(...)      ordering of two windows sharing a port
    yf(...)     side of a fixed block a variable window falls on

Indices in names are positions (stream order in the instance, sorted port
order), so names stay valid LP identifiers whatever the ids look like.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .model import ProblemInstance
from .timing import TimingTable, cycle_structure

FAMILIES = ("path", "next_port", "isolation", "cyclic", "latency", "jitter", "fixed_block")


@dataclass(frozen=True)
class FixedBlock:
    port: str
    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"invalid fixed block [{self.start}, {self.end})")


@dataclass
class Variable:
    name: str
    kind: str  # "integer" | "binary"
    lb: int
    ub: int | None


@dataclass
class Constraint:
    name: str
    family: str
    terms: tuple[tuple[int, int], ...]
    sense: str  # "<=", "=", ">="
    rhs: int

    def satisfied(self, values: Sequence[int]) -> bool:
        lhs = sum(c * values[i] for i, c in self.terms)
        if self.sense == "<=":
            return lhs <= self.rhs
        if self.sense == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass
class MilpModel:
    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[int, int] = field(default_factory=dict)
    big_m: int = 0
    hypercycle: int = 0
    index: dict[str, int] = field(default_factory=dict)
    x_index: dict[tuple[str, int, int, str], int] = field(default_factory=dict)
    z_index: dict[tuple[str, int], int] = field(default_factory=dict)
    a_index: dict[str, int] = field(default_factory=dict)
    y_keys: dict[tuple, int] = field(default_factory=dict)
    yf_keys: dict[tuple, int] = field(default_factory=dict)
    unroutable: list[str] = field(default_factory=list)
    spans: dict | None = None

    def add_var(self, name: str, kind: str, lb: int = 0, ub: int | None = None) -> int:
        if name in self.index:
            raise ValueError(f"duplicate variable {name}")
        if kind == "binary":
            lb, ub = 0, 1
        self.variables.append(Variable(name, kind, lb, ub))
        self.index[name] = len(self.variables) - 1
        return self.index[name]

    def add_constraint(self, name: str, family: str, terms: Mapping[int, int] | Iterable[tuple[int, int]], sense: str, rhs: int) -> None:
        items = terms.items() if isinstance(terms, Mapping) else terms
        merged: dict[int, int] = {}
        for i, c in items:
            if not 0 <= i < len(self.variables):
                raise ValueError(f"constraint {name} references undeclared variable {i}")
            if c != int(c):
                raise ValueError(f"constraint {name} has non-integral coefficient {c}")
            merged[i] = merged.get(i, 0) + int(c)
        self.constraints.append(
            Constraint(name, family, tuple((i, c) for i, c in merged.items() if c != 0), sense, int(rhs))
        )

    def counts(self) -> Counter:
        return Counter(c.family for c in self.constraints)

    def objective_value(self, values: Sequence[int]) -> int:
        return sum(c * values[i] for i, c in self.objective.items())

    def violations(self, values: Sequence[int]) -> list[str]:
        """Exact integer replay of bounds, integrality and every constraint."""
        bad = []
        for i, v in enumerate(self.variables):
            val = values[i]
            if val != int(val):
                bad.append(f"{v.name} not integral: {val}")
            if val < v.lb or (v.ub is not None and val > v.ub):
                bad.append(f"{v.name}={val} outside [{v.lb}, {v.ub}]")
        for c in self.constraints:
            if not c.satisfied(values):
                bad.append(c.name)
        return bad

    @property
    def num_binaries(self) -> int:
        return sum(v.kind == "binary" for v in self.variables)


def choose_big_m(instance: ProblemInstance, hypercycle: int | None = None) -> int:
    """Hypercycle plus the widest fully robust window any stream could need."""
    hc = cycle_structure(instance.streams).hypercycle if hypercycle is None else hypercycle
    table = TimingTable(instance)
    widest = 0
    for s in instance.streams:
        for path in instance.candidate_paths(s.id):
            for p in path:
                widest = max(widest, table.window(s.id, p, gamma=1))
    return hc + widest


def build_model(
    instance: ProblemInstance,
    variable_streams: Sequence[str] | None = None,
    fixed_blocks: Mapping[tuple[str, str], Sequence[FixedBlock]] | None = None,
    gamma=None,
    big_m: int | None = None,
    hypercycle: int | None = None,
    prune_disjoint: bool = False,
) -> MilpModel:
    """Full model over ``variable_streams`` (all streams by default).

    ``fixed_blocks`` maps (stream id, port id) to the merged blocks that
    stream must avoid on that port. ``hypercycle`` overrides the horizon; it
    must be a common multiple of every period in the instance.

    With ``prune_disjoint`` no ordering binary is created for two windows
    (or a window and a fixed block) whose feasible time ranges cannot
    intersect; the optimum is unchanged.
    """
    table = TimingTable(instance, gamma)
    order = {s.id: i for i, s in enumerate(instance.streams)}
    smap = instance.stream_map
    if variable_streams is None:
        variable_streams = [s.id for s in instance.streams]
    for sid in variable_streams:
        if sid not in smap:
            raise ValueError(f"unknown stream {sid!r}")
    sids = sorted(set(variable_streams), key=order.__getitem__)
    fixed_blocks = fixed_blocks or {}
    port_pos = {p: j for j, p in enumerate(sorted(instance.graph.ports))}

    model = MilpModel()
    if not sids:
        return model
    cyc = cycle_structure(instance.streams)
    hc = cyc.hypercycle if hypercycle is None else hypercycle
    if hc % cyc.hypercycle:
        raise ValueError(f"horizon {hc} is not a multiple of the hypercycle {cyc.hypercycle}")
    model.hypercycle = hc
    M = choose_big_m(instance, hc) if big_m is None else big_m
    model.big_m = M
    model.spans = _spans(instance, table, sids, hc) if prune_disjoint else None

    def sname(sid):
        return f"s{order[sid]}"

    # Declaration order: a, z, x per stream, then y / yf as pairs appear.
    for sid in sids:
        s = smap[sid]
        a = model.add_var(f"a({sname(sid)})", "binary")
        model.a_index[sid] = a
        model.objective[a] = 1
        paths = instance.candidate_paths(sid)
        if not paths:
            model.unroutable.append(sid)
        for r, path in enumerate(paths):
            model.z_index[(sid, r)] = model.add_var(f"z({sname(sid)},r{r})", "binary")
            for u in range(1, hc // s.period + 1):
                ub = (u - 1) * s.period + s.max_latency
                for p in path:
                    model.x_index[(sid, r, u, p)] = model.add_var(
                        f"x({sname(sid)},r{r},u{u},p{port_pos[p]})", "integer", 0, ub
                    )

    for sid in sids:
        _add_path_selection(model, instance, sid, sname(sid))
    for sid in sids:
        add_next_port_constraints(model, instance, table, sid, sname(sid))
    add_isolation_constraints(model, instance, table, sids, order, port_pos)
    for sid in sids:
        add_cyclic_constraints(model, instance, sid, sname(sid))
        add_latency_constraints(model, instance, table, sid, sname(sid))
        add_jitter_constraints(model, instance, sid, sname(sid))
    add_fixed_block_constraints(model, instance, table, sids, fixed_blocks, order, port_pos)
    return model


def _spans(instance, table: TimingTable, sids, hc) -> dict[tuple[str, int, int, str], tuple[int, int]]:
    """Interval each window must lie in when its path is active."""
    out = {}
    for sid in sids:
        s = instance.stream_map[sid]
        for r, path in enumerate(instance.candidate_paths(sid)):
            offs = table.path_offsets(sid, path)
            slack = s.max_latency - offs[-1] - table.window(sid, path[-1])
            for u in range(1, hc // s.period + 1):
                base = (u - 1) * s.period
                for p, off in zip(path, offs):
                    out[(sid, r, u, p)] = (base + off, base + off + slack + table.window(sid, p))
    return out


def _disjoint(model: MilpModel, key1, iv2) -> bool:
    if model.spans is None:
        return False
    lo1, hi1 = model.spans[key1]
    return hi1 <= iv2[0] or iv2[1] <= lo1


def _add_path_selection(model: MilpModel, instance, sid, sn):
    terms = {model.z_index[(sid, r)]: 1 for r in range(len(instance.candidate_paths(sid)))}
    terms[model.a_index[sid]] = -1
    model.add_constraint(f"path({sn})", "path", terms, "=", 0)


def _reps(model, sid, instance):
    return range(1, model.hypercycle // instance.stream_map[sid].period + 1)


def add_next_port_constraints(model: MilpModel, instance, table: TimingTable, sid, sn) -> None:
    for r, path in enumerate(instance.candidate_paths(sid)):
        z = model.z_index[(sid, r)]
        for u in _reps(model, sid, instance):
            for k, (p, q) in enumerate(zip(path, path[1:])):
                ns = table.offset(sid, p, q)
                terms = {model.x_index[(sid, r, u, p)]: 1, z: ns, model.x_index[(sid, r, u, q)]: -1}
                model.add_constraint(f"next({sn},r{r},u{u},k{k})", "next_port", terms, "=", 0)


def add_isolation_constraints(model: MilpModel, instance, table: TimingTable, sids, order, port_pos) -> None:
    users: dict[str, list[tuple[str, int]]] = defaultdict(list)
    for sid in sids:
        for r, path in enumerate(instance.candidate_paths(sid)):
            for p in path:
                users[p].append((sid, r))
    M = model.big_m
    for p in sorted(users, key=port_pos.__getitem__):
        pairs = users[p]
        for i, (s1, r1) in enumerate(pairs):
            for s2, r2 in pairs[i + 1:]:
                if order[s1] >= order[s2]:
                    if order[s1] == order[s2]:
                        continue
                    s1, r1, s2, r2 = s2, r2, s1, r1
                w1 = table.window(s1, p)
                w2 = table.window(s2, p)
                z1 = model.z_index[(s1, r1)]
                z2 = model.z_index[(s2, r2)]
                for u1 in _reps(model, s1, instance):
                    x1 = model.x_index[(s1, r1, u1, p)]
                    for u2 in _reps(model, s2, instance):
                        x2 = model.x_index[(s2, r2, u2, p)]
                        if model.spans is not None and _disjoint(model, (s1, r1, u1, p), model.spans[(s2, r2, u2, p)]):
                            continue
                        key = (p, s1, r1, u1, s2, r2, u2)
                        tag = f"p{port_pos[p]}|s{order[s1]},r{r1},u{u1}|s{order[s2]},r{r2},u{u2}"
                        y = model.add_var(f"y({tag})", "binary")
                        model.y_keys[key] = y
                        # (a) s1 ends before s2 starts unless y = 1
                        model.add_constraint(f"iso_a({tag})", "isolation", {x1: 1, z1: w1, x2: -1, y: -M}, "<=", 0)
                        # (b) s2 ends before s1 starts unless y = 0
                        model.add_constraint(f"iso_b({tag})", "isolation", {x2: 1, z2: w2, x1: -1, y: M}, "<=", M)


def add_cyclic_constraints(model: MilpModel, instance, sid, sn) -> None:
    s = instance.stream_map[sid]
    for r, path in enumerate(instance.candidate_paths(sid)):
        z = model.z_index[(sid, r)]
        for u in _reps(model, sid, instance):
            x = model.x_index[(sid, r, u, path[0])]
            model.add_constraint(f"cyc({sn},r{r},u{u})", "cyclic", {x: 1, z: -(u - 1) * s.period}, ">=", 0)


def add_latency_constraints(model: MilpModel, instance, table: TimingTable, sid, sn) -> None:
    s = instance.stream_map[sid]
    for r, path in enumerate(instance.candidate_paths(sid)):
        z = model.z_index[(sid, r)]
        last = path[-1]
        w = table.window(sid, last)
        for u in _reps(model, sid, instance):
            x = model.x_index[(sid, r, u, last)]
            model.add_constraint(
                f"lat({sn},r{r},u{u})", "latency", {x: 1, z: w}, "<=", s.max_latency + (u - 1) * s.period
            )


def add_jitter_constraints(model: MilpModel, instance, sid, sn) -> None:
    s = instance.stream_map[sid]
    M = model.big_m
    T = s.period
    reps = list(_reps(model, sid, instance))
    for r, path in enumerate(instance.candidate_paths(sid)):
        z = model.z_index[(sid, r)]
        first = path[0]
        for i, u in enumerate(reps):
            for u2 in reps[i + 1:]:
                x1 = model.x_index[(sid, r, u, first)]
                x2 = model.x_index[(sid, r, u2, first)]
                shift = (u - 1) * T - (u2 - 1) * T
                # phase(u) - phase(u2) = x1 - x2 - shift
                model.add_constraint(
                    f"jit_a({sn},r{r},u{u},u{u2})", "jitter", {x1: 1, x2: -1, z: -M}, ">=", -s.max_jitter + shift - M
                )
                model.add_constraint(
                    f"jit_b({sn},r{r},u{u},u{u2})", "jitter", {x1: 1, x2: -1, z: M}, "<=", s.max_jitter + shift + M
                )


def add_fixed_block_constraints(model: MilpModel, instance, table: TimingTable, sids, fixed_blocks, order, port_pos) -> None:
    M = model.big_m
    for sid in sids:
        for r, path in enumerate(instance.candidate_paths(sid)):
            z = model.z_index[(sid, r)]
            for p in path:
                blocks = fixed_blocks.get((sid, p), ())
                if not blocks:
                    continue
                w = table.window(sid, p)
                for u in _reps(model, sid, instance):
                    x = model.x_index[(sid, r, u, p)]
                    for f, blk in enumerate(blocks):
                        if _disjoint(model, (sid, r, u, p), (blk.start, blk.end)):
                            continue
                        tag = f"s{order[sid]},r{r},u{u},p{port_pos[p]},b{f}"
                        yf = model.add_var(f"yf({tag})", "binary")
                        model.yf_keys[(sid, r, u, p, f)] = yf
                        model.add_constraint(f"fix_a({tag})", "fixed_block", {x: 1, z: w, yf: -M}, "<=", blk.start)
                        model.add_constraint(f"fix_b({tag})", "fixed_block", {x: -1, yf: M}, "<=", M - blk.end)
