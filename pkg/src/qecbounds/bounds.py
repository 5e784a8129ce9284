"""One-call helpers that build and solve the standard programs."""

from __future__ import annotations

from .backend import SolverConfig, SolverResult, solve
from .builders import HierarchySpec, build_dep_lp, build_hierarchy


def sdp_bound(
    J,
    M: int,
    level: int = 1,
    ppt: bool = False,
    assisted: str = "plain",
    config: SolverConfig | None = None,
) -> SolverResult:
    """Solve the level-``level`` hierarchy program for ``J`` and ``M``."""
    program = build_hierarchy(J, M, HierarchySpec(level=level, ppt=ppt, assisted=assisted))
    return solve(program, config or SolverConfig.from_env())


def dep_lp_bound(N: int, p: float, M: int = 2, config: SolverConfig | None = None) -> SolverResult:
    """Solve the linear program for ``N`` uses of the qubit depolarizing channel."""
    return solve(build_dep_lp(N, p, M), config or SolverConfig.from_env())
