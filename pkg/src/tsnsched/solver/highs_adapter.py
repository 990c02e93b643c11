"""Solve an LP file with HiGHS and write a ``name value`` solution file.

Usage: python -m tsnsched.solver.highs_adapter MODEL.lp OUT.sol TIME_LIMIT_S [START.sol]

START, when given and non-empty, is a solution file in the same format; it
is handed to HiGHS as the first incumbent.
"""

import sys

import highspy


def configure(h: "highspy.Highs", time_limit: float) -> None:
    h.setOptionValue("output_flag", False)
    h.setOptionValue("time_limit", float(time_limit))
    h.setOptionValue("mip_rel_gap", 0.0)
    h.setOptionValue("mip_abs_gap", 0.0)
    h.setOptionValue("mip_feasibility_tolerance", 1e-9)
    h.setOptionValue("primal_feasibility_tolerance", 1e-9)
    h.setOptionValue("threads", 1)
    h.setOptionValue("random_seed", 0)


def read_start(path: str, names: list[str]) -> list[float]:
    col = {n: i for i, n in enumerate(names)}
    values = [0.0] * len(names)
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            name, val = line.split()
            if name in col:
                values[col[name]] = float(val)
    return values


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) not in (3, 4):
        print(__doc__, file=sys.stderr)
        return 2
    lp_path, out_path, limit = argv[:3]
    start_path = argv[3] if len(argv) == 4 else ""
    h = highspy.Highs()
    configure(h, float(limit))
    if h.readModel(lp_path) == highspy.HighsStatus.kError:
        print(f"cannot read {lp_path}", file=sys.stderr)
        return 1
    if h.getNumCol() == 0:
        with open(out_path, "w") as fh:
            fh.write("# status optimal\n# objective 0\n")
        return 0
    names = list(h.getLp().col_names_)
    if start_path:
        guess = highspy.HighsSolution()
        guess.col_value = read_start(start_path, names)
        guess.value_valid = True
        h.setSolution(guess)
    h.run()
    ms = h.getModelStatus()
    S = highspy.HighsModelStatus
    info = h.getInfo()
    has_sol = info.primal_solution_status == 2  # kSolutionStatusFeasible
    if ms == S.kOptimal:
        code = 0
    elif ms == S.kInfeasible:
        return 20
    elif ms in (S.kUnbounded, S.kUnboundedOrInfeasible):
        return 30
    elif ms in (S.kTimeLimit, S.kIterationLimit, S.kSolutionLimit, S.kInterrupt):
        code = 10 if has_sol else 40
    else:
        print(f"unexpected model status {h.modelStatusToString(ms)}", file=sys.stderr)
        return 1
    if not has_sol:
        return 40
    values = h.getSolution().col_value
    with open(out_path, "w") as fh:
        fh.write(f"# status {h.modelStatusToString(ms)}\n")
        fh.write(f"# objective {info.objective_function_value!r}\n")
        fh.write(f"# gap {info.mip_gap!r}\n")
        for n, v in zip(names, values):
            fh.write(f"{n} {v!r}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
