"""Exact optimizer for tiny models: depth-first search over the binaries.

Once the binaries of a row are fixed, what remains of any scheduling row is
a bound on one integer variable or on the difference of two. Those rows are
kept as a difference graph with an incrementally maintained all-pairs
closure, which both prunes the search (negative cycle = conflict) and
yields an integral assignment at every leaf. The next-port equalities
collapse each path's starts onto its first port through the closure.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .. import kernels
from ..milp import MilpModel
from .result import MilpSolution, OracleLimitError


@dataclass(frozen=True)
class OracleLimits:
    max_nodes: int = 1_000_000
    max_integer_vars: int = 256


def _encode(model: MilpModel):
    is_bin = [v.kind == "binary" for v in model.variables]
    bin_pos, int_pos = {}, {}
    for i, b in enumerate(is_bin):
        (bin_pos if b else int_pos)[i] = len(bin_pos if b else int_pos)
    row_ptr, row_bvar, row_bcoef = [0], [], []
    row_a, row_b, row_k, row_rhs = [], [], [], []

    def emit(terms, rhs, name):
        ints = []
        for i, c in terms:
            if is_bin[i]:
                row_bvar.append(bin_pos[i])
                row_bcoef.append(c)
            else:
                ints.append((int_pos[i] + 1, c))
        if not ints:
            a, b, k = -1, -1, 1
        elif len(ints) == 1:
            node, c = ints[0]
            a, b, k = (node, 0, c) if c > 0 else (0, node, -c)
        elif len(ints) == 2 and ints[0][1] == -ints[1][1]:
            (n1, c1), (n2, _) = ints
            a, b, k = (n1, n2, c1) if c1 > 0 else (n2, n1, -c1)
        else:
            raise OracleLimitError(f"row {name} is not a difference constraint once binaries are fixed")
        row_a.append(a)
        row_b.append(b)
        row_k.append(k)
        row_rhs.append(rhs)
        row_ptr.append(len(row_bvar))

    for con in model.constraints:
        if con.sense in ("<=", "="):
            emit(con.terms, con.rhs, con.name)
        if con.sense in (">=", "="):
            emit([(i, -c) for i, c in con.terms], -con.rhs, con.name)

    obj = [0] * len(bin_pos)
    for i, c in model.objective.items():
        if not is_bin[i]:
            raise OracleLimitError("objective terms must be binary")
        obj[bin_pos[i]] = c
    lb = [model.variables[i].lb for i in int_pos]
    ub = [kernels.INF if model.variables[i].ub is None else model.variables[i].ub for i in int_pos]
    bins = list(bin_pos)
    order = sorted(range(len(bins)), key=lambda j: (-obj[j], j))
    first = [1] * len(bins)
    arrays = (len(bins), len(int_pos), lb, ub, row_ptr, row_bvar, row_bcoef, row_a, row_b, row_k, row_rhs, obj, order, first)
    return arrays, bins, list(int_pos)


def solve_oracle(model: MilpModel, limits: OracleLimits = OracleLimits(), search=None) -> MilpSolution:
    """Provably optimal solution or OracleLimitError; ``search`` picks a kernel."""
    n_int = sum(v.kind != "binary" for v in model.variables)
    if n_int > limits.max_integer_vars:
        raise OracleLimitError(f"{n_int} integer variables exceed oracle cap {limits.max_integer_vars}")
    start = time.perf_counter()
    if not model.variables:
        return MilpSolution("optimal", 0, [], 0.0, 0.0, nodes=0)
    arrays, bins, ints = _encode(model)
    search = search or kernels.bnb_search
    status, best, best_bin, best_x, nodes = search(*arrays, limits.max_nodes)
    wall = time.perf_counter() - start
    if status == 2:
        raise OracleLimitError(f"oracle node cap {limits.max_nodes} exceeded")
    if status == 1:
        return MilpSolution("infeasible", wall_time=wall, nodes=nodes)
    values = [0] * len(model.variables)
    for j, i in enumerate(bins):
        values[i] = int(best_bin[j])
    for j, i in enumerate(ints):
        values[i] = int(best_x[j])
    return MilpSolution("optimal", model.objective_value(values), values, wall, 0.0, nodes=nodes)
