from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from builders import (
    BYTE_TICK_RATE,
    closed_form_counts,
    hist,
    instance,
    line_graph,
    profile,
    shared_port_graph,
    stream,
    tiny_instance,
)
from tsnsched.milp import FixedBlock, build_model, choose_big_m
from tsnsched.model import Node, Port, ProblemInstance, build_graph
from tsnsched.solver import export_lp, solve_oracle


def test_empty_variable_set():
    inst = instance(line_graph(1), [stream("s")])
    m = build_model(inst, [])
    assert not m.variables and not m.constraints and not m.objective


def test_single_stream_three_port_path():
    inst = instance(line_graph(2), [stream("s", period=200)])
    m = build_model(inst)
    assert m.counts() == Counter(path=1, next_port=2, cyclic=1, latency=1)
    assert m.counts()["isolation"] == 0 and m.counts()["jitter"] == 0
    assert m.objective == {m.a_index["s"]: 1}


def test_two_streams_sharing_a_port_two_reps_each():
    g = shared_port_graph()
    inst = instance(g, [stream("a", "T0", period=100), stream("b", "T1", period=100), stream("c", "T1", period=200)])
    m = build_model(inst, ["a", "b"])
    # each sharing pair: 1 (s < s2) x 2 x 2 instances on port B>L
    assert m.counts()["isolation"] == 8
    assert len(m.y_keys) == 4
    assert m.num_binaries == 2 * 2 + 4


def test_one_rep_each_gives_two_rows_one_y():
    g = shared_port_graph()
    inst = instance(g, [stream("a", "T0"), stream("b", "T1")])
    m = build_model(inst)
    assert m.counts()["isolation"] == 2 and len(m.y_keys) == 1


def test_disjoint_ports_no_isolation():
    nodes = [Node(n, "wired-bridge") for n in ("a", "b", "c", "d")]
    g = build_graph(nodes, [Port("ab", "a", "b", BYTE_TICK_RATE), Port("cd", "c", "d", BYTE_TICK_RATE)])
    inst = instance(g, [stream("x", "a", "b"), stream("y", "c", "d")])
    assert build_model(inst).counts()["isolation"] == 0


def test_single_port_path_has_no_next_port_rows():
    inst = instance(line_graph(0), [stream("s")])
    assert build_model(inst).counts()["next_port"] == 0


def test_jitter_counts():
    inst = instance(line_graph(1), [stream("s", period=100), stream("t", period=200)])
    m = build_model(inst, ["t"])
    assert m.counts()["jitter"] == 0
    m = build_model(inst, ["s"])
    assert m.counts()["jitter"] == 2


def test_fixed_block_counts():
    inst = instance(line_graph(0), [stream("s", period=100, size=10)])
    blocks = {("s", "T>L"): [FixedBlock("T>L", 20, 30), FixedBlock("T>L", 60, 70)]}
    m = build_model(inst, fixed_blocks=blocks)
    assert m.counts()["fixed_block"] == 4
    assert len(m.yf_keys) == 2
    assert build_model(inst, fixed_blocks={}).counts()["fixed_block"] == 0


def test_block_covering_the_cycle_blocks_the_port():
    inst = instance(line_graph(0), [stream("s", period=100, size=10)])
    blocks = {("s", "T>L"): [FixedBlock("T>L", 0, 100)]}
    assert solve_oracle(build_model(inst, fixed_blocks=blocks)).objective == 0
    assert solve_oracle(build_model(inst)).objective == 1


def test_cyclic_row_substitution():
    inst = instance(line_graph(0), [stream("s", period=500, size=10), stream("t", period=1500)])
    m = build_model(inst, ["s"])
    row = next(c for c in m.constraints if c.name == "cyc(s0,r0,u3)")
    z = m.z_index[("s", 0)]
    x = m.x_index[("s", 0, 3, "T>L")]
    assert dict(row.terms) == {x: 1, z: -1000} and row.sense == ">=" and row.rhs == 0
    u1 = next(c for c in m.constraints if c.name == "cyc(s0,r0,u1)")
    assert dict(u1.terms) == {m.x_index[("s", 0, 1, "T>L")]: 1}


def test_latency_row_substitution():
    g = build_graph(
        [Node("a", "wired-bridge"), Node("b", "wired-bridge")],
        [Port("ab", "a", "b", 100_000_000, 10, 10)],
    )
    inst = instance(g, [stream("s", "a", "b", period=1000, latency=400, size=1420)])
    m = build_model(inst)
    row = next(c for c in m.constraints if c.family == "latency")
    assert dict(row.terms) == {m.x_index[("s", 0, 1, "ab")]: 1, m.z_index[("s", 0)]: 134}
    assert row.rhs == 400 and row.sense == "<="


def test_window_longer_than_latency_rejects_the_stream():
    inst = instance(line_graph(0), [stream("s", period=100, latency=5, size=10)])
    assert solve_oracle(build_model(inst)).objective == 0


def test_x_upper_bounds_from_latency():
    inst = instance(line_graph(1), [stream("s", period=100, latency=60), stream("t", period=300)])
    m = build_model(inst, ["s"])
    for (sid, r, u, p), i in m.x_index.items():
        v = m.variables[i]
        assert v.lb == 0 and v.ub == (u - 1) * 100 + 60


def test_unroutable_stream_forced_out():
    nodes = [Node(n, "wired-bridge") for n in ("a", "b", "c")]
    g = build_graph(nodes, [Port("ab", "a", "b", BYTE_TICK_RATE)])
    inst = instance(g, [stream("s", "a", "c")])
    m = build_model(inst)
    assert m.unroutable == ["s"]
    row = next(c for c in m.constraints if c.family == "path")
    assert row.terms == ((m.a_index["s"], -1),) and row.rhs == 0
    assert solve_oracle(m).objective == 0


def test_big_m_rule():
    wl = profile(by_size={100: hist((100, 1), (150, 1))})
    g = line_graph(0, wireless_last=True, prof=wl)
    inst = instance(g, [stream("s", period=8000, size=100)])
    assert choose_big_m(inst) == 8150
    wired = build_graph(
        [Node("a", "wired-bridge"), Node("b", "wired-bridge")],
        [Port("ab", "a", "b", 100_000_000, 10, 10)],
    )
    inst = instance(wired, [stream("s", "a", "b", period=8000, size=1420), stream("t", "a", "b", period=4000, size=32)])
    assert choose_big_m(inst) == 8134
    # Γ of the instance does not shrink M
    assert choose_big_m(inst.with_gamma(0)) == 8134


def test_zero_jitter_forces_equal_phases():
    inst = instance(line_graph(0), [stream("s", period=50, jitter=0, size=10), stream("t", period=150, size=10)])
    m = build_model(inst, ["s"])
    sol = solve_oracle(m)
    assert sol.objective == 1
    starts = [sol.values[m.x_index[("s", 0, u, "T>L")]] - (u - 1) * 50 for u in (1, 2, 3)]
    assert len(set(starts)) == 1


def test_inactive_path_x_equal_along_path():
    inst = instance(line_graph(2), [stream("s", period=100, latency=5)])
    m = build_model(inst)
    sol = solve_oracle(m)
    xs = [sol.values[m.x_index[("s", 0, 1, p)]] for p in inst.candidate_paths("s")[0]]
    assert sol.objective == 0 and len(set(xs)) == 1


def test_model_is_deterministic():
    rng1, rng2 = np.random.default_rng(3), np.random.default_rng(3)
    assert export_lp(build_model(tiny_instance(rng1))) == export_lp(build_model(tiny_instance(rng2)))


def test_hypercycle_override_must_be_multiple():
    inst = instance(line_graph(0), [stream("s", period=100)])
    assert build_model(inst, hypercycle=300).hypercycle == 300
    with pytest.raises(ValueError):
        build_model(inst, hypercycle=150)


@pytest.mark.parametrize("seed", range(40))
def test_counts_match_closed_form(seed):
    inst = tiny_instance(np.random.default_rng(seed))
    assert build_model(inst).counts() == closed_form_counts(inst)
    sub = [s.id for s in inst.streams][:1]
    blocks = {(sid, p): [FixedBlock(p, 0, 3), FixedBlock(p, 10, 12)] for sid in sub for path in inst.candidate_paths(sid) for p in path}
    assert build_model(inst, sub, blocks).counts() == closed_form_counts(inst, blocks, sub)


@pytest.mark.parametrize("seed", range(30))
def test_big_m_dominance_and_pruning_keep_optimum(seed):
    inst = tiny_instance(np.random.default_rng(100 + seed))
    base = build_model(inst)
    ref = solve_oracle(base).objective
    assert solve_oracle(build_model(inst, big_m=2 * base.big_m)).objective == ref
    pruned = build_model(inst, prune_disjoint=True)
    assert len(pruned.y_keys) <= len(base.y_keys)
    assert solve_oracle(pruned).objective == ref


def test_gamma_never_grows_window_coefficients():
    g = line_graph(1, wireless_last=True)
    inst = ProblemInstance(g, (stream("s", size=10),), {"s": (("T>B0", "B0>L"),)})
    prev = None
    for k in range(11):
        m = build_model(inst, gamma=Fraction(k, 10))
        lat = next(c for c in m.constraints if c.family == "latency")
        w = dict(lat.terms)[m.z_index[("s", 0)]]
        if prev is not None:
            assert w >= prev
        prev = w
