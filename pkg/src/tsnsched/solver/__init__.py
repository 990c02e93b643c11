from .external import ENV_VAR, resolve_command, solve_external
from .lpfile import export_lp, parse_lp
from .oracle import OracleLimits, solve_oracle
from .result import MilpSolution, OracleLimitError, SolverConfigError, SolverError

__all__ = [
    "ENV_VAR",
    "MilpSolution",
    "OracleLimitError",
    "OracleLimits",
    "SolverConfigError",
    "SolverError",
    "export_lp",
    "parse_lp",
    "resolve_command",
    "solve_external",
    "solve_oracle",
]
