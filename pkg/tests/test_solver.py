import itertools
import os
import shlex
import sys

import numpy as np
import pytest

from builders import instance, line_graph, shared_port_graph, stream, tiny_instance
from tsnsched import _bnb_py, kernels
from tsnsched.milp import MilpModel, build_model
from tsnsched.solver import (
    OracleLimitError,
    OracleLimits,
    SolverConfigError,
    SolverError,
    export_lp,
    parse_lp,
    resolve_command,
    solve_external,
    solve_oracle,
)

PY = shlex.quote(sys.executable)


def one_var_model(ub_row=1):
    m = MilpModel()
    a = m.add_var("a", "binary")
    m.objective[a] = 1
    m.add_constraint("c1", "path", {a: 1}, "<=", ub_row)
    return m


def fake_solver(tmp_path, body):
    script = tmp_path / "fake.py"
    script.write_text("import sys\ninp, out, lim = sys.argv[1:4]\n" + body)
    return f"{PY} {shlex.quote(str(script))} {{input}} {{output}} {{time_limit_s}}"


def test_export_empty_model_is_header_only():
    text = export_lp(MilpModel())
    assert text.splitlines() == ["\\ tsnsched model", "Maximize", " obj:", "Subject To", "End"]


def test_export_one_var_model_sections():
    text = export_lp(one_var_model())
    lines = text.splitlines()
    for section in ("Maximize", "Subject To", "Binaries", "End"):
        assert section in lines
    assert " obj: a" in lines and " c1: a <= 1" in lines


@pytest.mark.parametrize("seed", range(20))
def test_lp_round_trip_identical_matrix(seed):
    m = build_model(tiny_instance(np.random.default_rng(seed)))
    back = parse_lp(export_lp(m))

    def by_name(model):
        name = [v.name for v in model.variables]
        cols = {v.name: (v.kind, v.lb, v.ub) for v in model.variables}
        rows = [(c.name, {name[i]: k for i, k in c.terms}, c.sense, c.rhs) for c in model.constraints]
        return cols, rows, {name[i]: k for i, k in model.objective.items()}

    assert by_name(back) == by_name(m)
    assert solve_oracle(back).objective == solve_oracle(m).objective


def test_external_trivial_optimal():
    sol = solve_external(one_var_model(), "highs", 10)
    assert (sol.status, sol.objective, sol.values) == ("optimal", 1, [1])


def test_external_infeasible():
    m = one_var_model()
    m.add_constraint("c2", "path", {0: 1}, ">=", 2)
    assert solve_external(m, "highs", 10).status == "infeasible"


def test_external_repeat_runs_agree():
    m = build_model(tiny_instance(np.random.default_rng(5)))
    a = solve_external(m, "highs", 30)
    b = solve_external(m, "highs", 30)
    assert a.objective == b.objective and a.values == b.values


def test_missing_command(monkeypatch):
    monkeypatch.delenv("TSNSCHED_SOLVER_CMD", raising=False)
    with pytest.raises(SolverConfigError):
        resolve_command(None)
    with pytest.raises(SolverConfigError):
        solve_external(one_var_model(), "/nonexistent/solver {input} {output}", 5)


def test_env_var_and_alias(monkeypatch):
    monkeypatch.setenv("TSNSCHED_SOLVER_CMD", "highs")
    assert "highs_adapter" in resolve_command(None)
    assert solve_external(one_var_model()).objective == 1


def test_time_limit_must_be_positive():
    with pytest.raises(ValueError):
        solve_external(one_var_model(), "highs", 0)


def test_unparseable_solution(tmp_path):
    cmd = fake_solver(tmp_path, "open(out, 'w').write('a 1 extra\\n')\n")
    with pytest.raises(SolverError, match="unparseable"):
        solve_external(one_var_model(), cmd, 5)
    cmd = fake_solver(tmp_path, "open(out, 'w').write('zz 1\\n')\n")
    with pytest.raises(SolverError, match="unknown variable"):
        solve_external(one_var_model(), cmd, 5)


def test_timeout_without_incumbent_is_unknown_not_infeasible(tmp_path):
    cmd = fake_solver(tmp_path, "sys.exit(40)\n")
    assert solve_external(one_var_model(), cmd, 5).status == "unknown"
    cmd = fake_solver(tmp_path, "sys.exit(20)\n")
    assert solve_external(one_var_model(), cmd, 5).status == "infeasible"


def test_time_limit_with_incumbent(tmp_path):
    cmd = fake_solver(tmp_path, "open(out, 'w').write('# gap 0.5\\na 1\\n')\nsys.exit(10)\n")
    sol = solve_external(one_var_model(), cmd, 5)
    assert sol.status == "feasible-time-limit" and sol.objective == 1 and sol.gap == 0.5


def test_solver_crash_is_error(tmp_path):
    cmd = fake_solver(tmp_path, "sys.exit(3)\n")
    assert solve_external(one_var_model(), cmd, 5).status == "error"


def test_start_file_passed_through_template(tmp_path):
    seen = tmp_path / "seen.txt"
    body = (
        "start = sys.argv[4]\n"
        f"open({str(seen)!r}, 'w').write(open(start).read() if start else '')\n"
        "open(out, 'w').write('a 1\\n')\n"
    )
    cmd = fake_solver(tmp_path, body) + " {start}"
    solve_external(one_var_model(), cmd, 5, initial=[1])
    assert seen.read_text() == "a 1\n"
    solve_external(one_var_model(), cmd, 5)
    assert seen.read_text() == ""


def test_oracle_examples():
    inst = instance(line_graph(1), [stream("s", period=40, size=10)])
    m = build_model(inst)
    assert m.hypercycle == 40
    sol = solve_oracle(m)
    assert sol.status == "optimal" and sol.objective == 1 and not m.violations(sol.values)
    # two identical streams, one port with room for only one window
    g = shared_port_graph()
    inst = instance(g, [stream("a", "T0", period=50, size=20), stream("b", "T1", period=50, size=20)])
    assert solve_oracle(build_model(inst)).objective == 1
    assert solve_oracle(MilpModel()).objective == 0


def test_oracle_caps():
    inst = instance(line_graph(1), [stream("s", period=10, size=1), stream("t", period=1000, size=1)])
    m = build_model(inst)
    with pytest.raises(OracleLimitError):
        solve_oracle(m, OracleLimits(max_integer_vars=10))
    g = shared_port_graph()
    crowded = instance(g, [stream(f"s{i}", f"T{i % 2}", period=200, size=5) for i in range(8)])
    with pytest.raises(OracleLimitError):
        solve_oracle(build_model(crowded), OracleLimits(max_nodes=50))


def brute_force(model):
    """Best objective by enumerating every assignment within bounds."""
    domains = [range(v.lb, v.ub + 1) for v in model.variables]
    best = None
    for vals in itertools.product(*domains):
        if not model.violations(vals):
            obj = model.objective_value(vals)
            best = obj if best is None else max(best, obj)
    return best


@pytest.mark.parametrize("seed", range(12))
def test_oracle_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    g = shared_port_graph()
    period = int(rng.integers(6, 10))
    streams = [
        stream("a", "T0", period=period, latency=int(rng.integers(3, period + 1)), size=int(rng.integers(1, 4))),
        stream("b", "T1", period=period, latency=int(rng.integers(3, period + 1)), size=int(rng.integers(1, 4))),
    ]
    inst = instance(g, streams)
    m = build_model(inst)
    # 4 x, 2 z, 2 a, 1 y; ranges are at most period wide
    assert brute_force(m) == solve_oracle(m).objective


@pytest.mark.parametrize("seed", range(40))
def test_compiled_and_python_kernels_agree(seed):
    m = build_model(tiny_instance(np.random.default_rng(1000 + seed)))
    fast = solve_oracle(m)
    slow = solve_oracle(m, search=_bnb_py.search)
    assert (fast.objective, fast.values, fast.nodes) == (slow.objective, slow.values, slow.nodes)
    assert not m.violations(fast.values)


def test_kernel_backend_selection():
    assert kernels.BACKEND in ("cython", "python")
    if os.environ.get("TSNSCHED_PURE_PYTHON"):
        assert kernels.BACKEND == "python"
