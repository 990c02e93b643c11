from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from builders import line_graph
from tsnsched.model import (
    DelayProfile,
    Histogram,
    ModelError,
    Node,
    Port,
    ProblemInstance,
    ProfileError,
    Stream,
    build_graph,
    frames_for_payload,
    interpolate_bounds,
    load_delay_profile,
    percentile_upper_bound,
    transmission_time,
    us_to_ticks,
)

MBPS100 = 100_000_000


def test_minimal_graph_has_one_directed_edge():
    g = build_graph([Node("a", "wired-bridge"), Node("b", "wired-bridge")], [Port("ab", "a", "b", MBPS100)])
    assert list(g.ports) == ["ab"]
    assert g.port_between("a", "b") == "ab"
    assert g.port_between("b", "a") is None
    assert g.out_ports["a"] == ("ab",) and g.out_ports["b"] == ()


def test_dangling_endpoint_and_duplicates_rejected():
    nodes = [Node("a", "wired-bridge")]
    with pytest.raises(ModelError):
        build_graph(nodes, [Port("ab", "a", "b", MBPS100)])
    with pytest.raises(ModelError):
        build_graph(nodes + [Node("a", "wired-bridge")], [])
    two = nodes + [Node("b", "wired-bridge")]
    with pytest.raises(ModelError):
        build_graph(two, [Port("ab", "a", "b", MBPS100), Port("ab", "b", "a", MBPS100)])
    with pytest.raises(ModelError):  # second port on the same directed link
        build_graph(two, [Port("p1", "a", "b", MBPS100), Port("p2", "a", "b", MBPS100)])


def test_wired_port_needs_rate_and_wireless_needs_profile():
    two = [Node("a", "wired-bridge"), Node("b", "wired-bridge")]
    with pytest.raises(ModelError):
        build_graph(two, [Port("ab", "a", "b", 0)])
    with pytest.raises(ModelError):
        build_graph(two, [Port("ab", "a", "b", profile="nope")])


def test_unknown_node_kind():
    with pytest.raises(ModelError):
        Node("x", "router")


def test_build_graph_port_order_deterministic():
    nodes = [Node(n, "wired-bridge") for n in "abc"]
    ports = [Port("c>a", "c", "a", MBPS100), Port("a>b", "a", "b", MBPS100), Port("a>c", "a", "c", MBPS100)]
    g1 = build_graph(nodes, ports)
    g2 = build_graph(nodes, ports)
    assert list(g1.ports) == list(g2.ports)
    assert g1.out_ports == g2.out_ports
    assert g1.out_ports["a"] == ("a>b", "a>c")


def test_ring_of_five_with_wireless_attachments():
    # five wired bridges in a bidirectional ring, each with one wireless bridge attached
    nodes = [Node(f"B{i}", "wired-bridge") for i in range(5)] + [Node(f"W{i}", "wireless-bridge") for i in range(5)]
    ports = []
    for i in range(5):
        a, b = f"B{i}", f"B{(i + 1) % 5}"
        ports += [Port(f"{a}>{b}", a, b, MBPS100), Port(f"{b}>{a}", b, a, MBPS100)]
        w = f"W{i}"
        ports += [Port(f"{w}>{a}", w, a, MBPS100), Port(f"{a}>{w}", a, w, MBPS100)]
    g = build_graph(nodes, ports)
    ring = [p for p in g.ports.values() if p.src.startswith("B") and p.dst.startswith("B")]
    assert len(ring) == 10
    assert len(g.ports) == 20


@pytest.mark.parametrize("size,expected", [(1420, 114), (32, 3), (0, 0)])
def test_transmission_time(size, expected):
    g = build_graph([Node("a", "wired-bridge"), Node("b", "wired-bridge")], [Port("ab", "a", "b", MBPS100)])
    assert transmission_time(size, g.ports["ab"], g) == expected


def test_transmission_time_oracle_arithmetic():
    g = build_graph([Node("a", "wired-bridge"), Node("b", "wired-bridge")], [Port("ab", "a", "b", MBPS100)])
    for size in range(0, 1600, 7):
        # independent integer ceil: bits / (bits per tick) with 100 bits per tick
        assert transmission_time(size, g.ports["ab"], g) == -(-size * 8 // 100)


def test_transmission_time_wireless_uses_min_delay():
    g = line_graph(0, wireless_last=True)
    assert transmission_time(10, g.ports["T>L"], g) == 4


def test_transmission_time_zero_rate():
    g = line_graph(1)
    bad = Port("x", "T", "B0", 0)
    with pytest.raises(ModelError):
        transmission_time(10, bad, g)


def test_load_profile_normalizes_counts():
    prof = load_delay_profile("p", [(64, 100, 5), (64, 120, 3), (64, 150, 2)])
    h = prof.histograms[64]
    assert h.delays == (100, 120, 150)
    assert h.masses == (Fraction(1, 2), Fraction(3, 10), Fraction(1, 5))
    assert h.min_delay == 100 == prof.min_delay(64)


def test_degenerate_profile_has_zero_deviation():
    prof = load_delay_profile("p", [(64, 100, 1)])
    assert prof.deviation(64) == 0


def test_profile_errors():
    with pytest.raises(ProfileError):
        load_delay_profile("p", [])
    with pytest.raises(ProfileError):
        load_delay_profile("p", [(64, -1, 3)])
    with pytest.raises(ProfileError):
        load_delay_profile("p", [(64, 10, 0)])
    prof = load_delay_profile("p", [(64, 100, 1)])
    with pytest.raises(ProfileError):
        prof.bounds(65)
    with pytest.raises(ProfileError):
        percentile_upper_bound(prof, 32, 100)


def test_histogram_invariants():
    with pytest.raises(ProfileError):
        Histogram((2, 1), (Fraction(1, 2), Fraction(1, 2)))
    with pytest.raises(ProfileError):
        Histogram((1, 2), (Fraction(1, 2), Fraction(1, 3)))
    with pytest.raises(ProfileError):
        Histogram((), ())


def test_delay_rounds_up_to_ticks():
    prof = load_delay_profile("p", [(64, "100.2", 1)])
    assert prof.min_delay(64) == 101
    assert us_to_ticks("0.5") == 1 and us_to_ticks(10) == 10


def test_percentile_examples():
    prof = load_delay_profile("p", [(64, 100, 5), (64, 120, 3), (64, 150, 2)])
    assert percentile_upper_bound(prof, 64, 100) == 150
    assert percentile_upper_bound(prof, 64, 79) == 120
    assert percentile_upper_bound(prof, 64, 80) == 120
    assert percentile_upper_bound(prof, 64, 50) == 100
    assert percentile_upper_bound(prof, 64, Fraction(8001, 100)) == 150
    with pytest.raises(ProfileError):
        percentile_upper_bound(prof, 64, 0)
    with pytest.raises(ProfileError):
        percentile_upper_bound(prof, 64, 101)


@given(st.lists(st.tuples(st.integers(0, 500), st.integers(1, 50)), min_size=1, max_size=12))
def test_cdf_and_percentile_monotone(pairs):
    h = Histogram.from_counts(pairs)
    cdfs = [h.cdf(d) for d in range(h.max_delay + 2)]
    assert all(a <= b for a, b in zip(cdfs, cdfs[1:]))
    assert h.cdf(h.max_delay) == 1
    pcts = [h.percentile(p) for p in range(1, 101)]
    assert all(a <= b for a, b in zip(pcts, pcts[1:]))
    assert pcts[-1] == h.max_delay
    # nearest-rank definition checked by enumeration
    for p in (1, 37, 50, 99, 100):
        d = h.percentile(p)
        assert h.cdf(d) >= Fraction(p, 100)
        assert all(h.cdf(x) < Fraction(p, 100) for x in h.delays if x < d)


def test_interpolation_examples():
    small, large = (32, 100, 150), (1420, 200, 400)
    assert interpolate_bounds(small, large, 32) == (100, 150)
    assert interpolate_bounds(small, large, 1420) == (200, 400)
    assert interpolate_bounds(small, large, 726) == (150, 275)
    with pytest.raises(ProfileError):
        interpolate_bounds(small, large, 2000)
    with pytest.raises(ProfileError):
        interpolate_bounds(small, large, 31)


def test_profile_interpolates_between_anchors():
    prof = DelayProfile("p", {
        32: Histogram.from_counts([(100, 1), (150, 1)]),
        1420: Histogram.from_counts([(200, 1), (400, 1)]),
    })
    assert prof.bounds(726) == (150, 275)
    h = prof.histogram(726)
    assert h.min_delay == 150 and h.percentile(100) == 275


def test_stream_invariants():
    ok = dict(id="s", talker="a", listener="b", period=100, max_latency=100, max_jitter=0, packet_size=10)
    Stream(**ok)
    for bad in (
        dict(period=0),
        dict(max_latency=0),
        dict(max_latency=101),
        dict(max_jitter=100),
        dict(max_jitter=-1),
        dict(frames=0),
        dict(priority=4),
        dict(listener="a"),
    ):
        with pytest.raises(ModelError):
            Stream(**{**ok, **bad})


def test_frames_for_payload():
    assert frames_for_payload(3000) == (1500, 1500)
    assert frames_for_payload(3100) == (1500, 1500, 100)
    assert frames_for_payload(0) == (0,)


def test_instance_checks_paths_and_gamma():
    g = line_graph(1)
    s = Stream("s", "T", "L", 100, 100, 0, 10)
    ProblemInstance(g, (s,), {"s": (("T>B0", "B0>L"),)})
    with pytest.raises(ModelError):
        ProblemInstance(g, (s,), {"s": (("B0>L",),)})
    with pytest.raises(ModelError):
        ProblemInstance(g, (s,), {}, Fraction(3, 2))
    with pytest.raises(ModelError):
        ProblemInstance(g, (s, s), {})
    inst = ProblemInstance(g, (s,), {}, 1, {("s", "T>B0"): Fraction(1, 2)})
    assert inst.gamma_for("s", "T>B0") == Fraction(1, 2)
    assert inst.gamma_for("s", "B0>L", Fraction(1, 4)) == Fraction(1, 4)
