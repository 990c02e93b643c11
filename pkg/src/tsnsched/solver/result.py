from __future__ import annotations

from dataclasses import dataclass

STATUSES = ("optimal", "feasible-time-limit", "infeasible", "unbounded", "unknown", "error")


class SolverError(RuntimeError):
    """Solver run failed or produced unusable output."""


class SolverConfigError(SolverError):
    """No usable solver command."""


class OracleLimitError(SolverError):
    """Model exceeds what the exhaustive oracle is allowed to search."""


@dataclass
class MilpSolution:
    status: str
    objective: int | None = None
    values: list[int] | None = None
    wall_time: float = 0.0
    gap: float | None = None
    message: str = ""
    nodes: int | None = None

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        has = self.values is not None
        if has != (self.status in ("optimal", "feasible-time-limit")):
            raise ValueError(f"status {self.status} inconsistent with assignment presence")

    @property
    def has_assignment(self) -> bool:
        return self.values is not None
