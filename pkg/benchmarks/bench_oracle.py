"""Compiled vs pure-Python branch-and-bound kernel on the same models.

    python benchmarks/bench_oracle.py [--models 40] [--repeat 3]

Models are tiny random instances plus a few crowded single-port ones that
make the search visit many nodes. Both kernels must return the same
optimum and node count; the table reports the best of ``--repeat`` runs.
"""

import argparse
import sys
import timeit
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from builders import instance, shared_port_graph, stream, tiny_instance  # noqa: E402
from tsnsched import _bnb_py, kernels  # noqa: E402
from tsnsched.milp import build_model  # noqa: E402
from tsnsched.solver import solve_oracle  # noqa: E402


def crowded(n):
    g = shared_port_graph()
    return instance(g, [stream(f"s{i}", f"T{i % 2}", period=200, size=30, priority=1 + i % 3) for i in range(n)])


def models(count):
    rng = np.random.default_rng(2024)
    out = [("tiny", build_model(tiny_instance(rng))) for _ in range(count)]
    out += [(f"crowded{n}", build_model(crowded(n))) for n in (4, 5, 6, 7)]
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--models", type=int, default=40)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.BACKEND != "cython":
        sys.exit("compiled kernel not built; run `pip install -e . --no-build-isolation` first")

    groups = {}
    for name, m in models(args.models):
        fast = solve_oracle(m)
        slow = solve_oracle(m, search=_bnb_py.search)
        assert (fast.objective, fast.nodes) == (slow.objective, slow.nodes), name
        t_fast = min(timeit.repeat(lambda: solve_oracle(m), number=1, repeat=args.repeat))
        t_slow = min(timeit.repeat(lambda: solve_oracle(m, search=_bnb_py.search), number=1, repeat=args.repeat))
        g = groups.setdefault(name, [0, 0, 0.0, 0.0])
        g[0] += 1
        g[1] += fast.nodes
        g[2] += t_fast
        g[3] += t_slow

    print(f"{'models':<10} {'count':>5} {'nodes':>9} {'cython s':>9} {'python s':>9} {'speedup':>8}")
    for name, (count, nodes, tf, ts) in groups.items():
        print(f"{name:<10} {count:>5} {nodes:>9} {tf:>9.4f} {ts:>9.4f} {ts / tf:>7.1f}x")


if __name__ == "__main__":
    main()
