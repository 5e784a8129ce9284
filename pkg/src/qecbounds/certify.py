"""Exactness certificates: low-rank solutions via the log-det heuristic, the
rank-loop test on hierarchy solutions, and extraction of the code from a
rank-one certificate."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from . import linmaps as lm
from .backend import SolverConfig, compile_program, solve
from .codes import CodePair
from .errors import CertificationError, ExtractionError, ShapeError
from .program import ConicProgram, ConstraintBlock, LinearForm, Variable
from .tensor import HermitianOperator, SystemLayout, ptrace_array, ptranspose_array, permute_array

log = logging.getLogger(__name__)

RANK_TOL = 1e-6
FLOOR_GAP = 1e-7
SUB_MAX_ITERS = 40
STALL_TOL = 1e-7
PURE_TOL = 1e-9


def numeric_rank(op: HermitianOperator | np.ndarray, tol: float = RANK_TOL) -> int:
    """Number of eigenvalues above ``tol`` times the largest magnitude."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    mat = op.entries if isinstance(op, HermitianOperator) else np.asarray(op)
    vals = np.abs(np.linalg.eigvalsh(mat))
    top = vals.max(initial=0.0)
    if top == 0.0:
        return 0
    return int(np.sum(vals > tol * top))


# ---------------------------------------------------------------------------
# log-det heuristic


@dataclass
class LogDetTrace:
    """Per-iteration record of the heuristic."""

    ranks: list[int] = field(default_factory=list)
    values: list[float] = field(default_factory=list)


def logdet_rank_min(
    program: ConicProgram,
    value_floor: float | None = None,
    delta: float = 1e-4,
    iters: int = 10,
    *,
    variable: str = "W",
    config: SolverConfig | None = None,
    trace: LogDetTrace | None = None,
    jitter: float = 1e-3,
    seed: int = 0,
) -> HermitianOperator:
    """Iterate ``W_{l+1} = argmin Tr[(W_l + δ)^{-1} W]`` over the optimal face
    ``{feasible W : objective ≥ value_floor}``, starting from ``W_0 = 1``.

    Without ``value_floor`` the program is solved first and the floor is set
    slightly (``FLOOR_GAP``, relative) below its value.  The loop stops early
    once the iterate is rank one or stops changing, since further reweighting
    only worsens the conditioning of the subproblems.  The iterates are
    solved without the twirl reduction, since twirl-invariant points are
    never low rank.  Real programs are tried over real matrices first and
    repeated over complex ones if that run stops above rank one.

    When the optimal face contains several rank-one points, the linearized
    objective is often flat along the segment between them and the solver
    returns their mixture.  ``jitter`` adds a small fixed random symmetric
    perturbation (relative size) to each weight matrix to break such ties.
    """
    if delta <= 0 or iters < 1:
        raise ValueError("delta must be positive and iters at least 1")
    base = config or SolverConfig()
    if value_floor is None:
        first = solve(program, base)
        if first.status not in ("optimal", "near-optimal"):
            raise CertificationError(f"initial solve ended with status {first.status}")
        value_floor = first.primal_value - FLOOR_GAP * max(1.0, abs(first.primal_value))
    var = program.variable(variable)
    if var.kind == "nonneg":
        raise ShapeError("the log-det heuristic needs a matrix variable")

    # objective >= floor (or <= for minimization) through a nonnegative slack
    sign = -1.0 if program.sense == "max" else 1.0
    slack = Variable("_floor_slack", 1, "nonneg")
    rhs = np.array([value_floor - program.objective.constant])
    coeffs = dict(program.objective.coeffs)
    coeffs[slack.name] = sp.csr_matrix(np.array([[sign]], dtype=complex))
    floor = ConstraintBlock("objective-floor", coeffs, rhs)
    face = program.with_constraints([floor], [slack])
    noise = np.random.default_rng(seed).standard_normal((var.side, var.side))
    noise = (noise + noise.T) / 2
    noise /= np.linalg.norm(noise, 2)
    sub = SolverConfig(**{**asdict(base), "symmetry": False, "max_iter": min(base.max_iter, SUB_MAX_ITERS)})
    best = _reweight(program, face, variable, sub, delta, iters, jitter * noise, trace)
    if sub.real and face.is_real() and numeric_rank(best) > 1:
        # the real part of a complex rank-one optimum is an extreme point of
        # the real face, so a real run can stall above rank one
        log.info("real log-det run ended at rank %d; repeating over complex matrices", numeric_rank(best))
        if trace is not None:
            trace.ranks.clear()
            trace.values.clear()
        complex_sub = SolverConfig(**{**asdict(sub), "real": False})
        best = _reweight(program, face, variable, complex_sub, delta, iters, jitter * noise, trace)
    return best


def _reweight(program, face, variable, sub, delta, iters, perturbation, trace) -> HermitianOperator:
    compiled = compile_program(face, sub)
    if compiled.infeasible:
        raise CertificationError("the value floor is not attainable")
    side = perturbation.shape[0]
    current, best = np.eye(side), None
    for step in range(iters):
        weight = np.linalg.inv(current + delta * np.eye(side))
        weight = 0.5 * (weight + weight.conj().T)
        weight = weight / np.linalg.norm(weight, 2) + perturbation
        result = compiled.run(LinearForm({variable: lm.operator_row(weight)}), sense="min")
        if result.status == "infeasible":
            raise CertificationError("the value floor is not attainable")
        if result.status not in ("optimal", "near-optimal"):
            if best is None:
                raise CertificationError(f"log-det subproblem ended with status {result.status}")
            # every earlier iterate lies on the face; keep the last one
            log.info("log-det step %d ended with status %s; keeping the previous iterate", step, result.status)
            break
        previous, current = current, result.matrix(variable)
        best = result.solution[variable]
        if trace is not None:
            trace.ranks.append(numeric_rank(current))
            trace.values.append(program.evaluate({v.name: result.matrix(v.name) for v in program.variables}))
        if numeric_rank(current, PURE_TOL) <= 1 or np.linalg.norm(current - previous) <= STALL_TOL * np.linalg.norm(current):
            break
    return best


# ---------------------------------------------------------------------------
# rank loop


@dataclass
class RankReport:
    ranks: dict[str, int]
    loop_found: bool
    k_used: int | None
    tol: float
    per_k: list[dict] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _blocks(W: HermitianOperator, n: int | None) -> tuple[list[int], int]:
    dims = list(W.layout.dims)
    if n is None:
        if len(dims) < 4 or len(dims) % 2:
            raise ShapeError("expected layout A Ā (B B̄)_1^n")
        n = (len(dims) - 2) // 2
    if len(dims) != 2 + 2 * n:
        raise ShapeError(f"layout has {len(dims)} subsystems, expected {2 + 2 * n}")
    return dims, n


def rank_loop(
    W: HermitianOperator,
    n: int | None = None,
    tol: float = RANK_TOL,
    *,
    ppt_tol: float = 1e-8,
    perm_tol: float = 1e-6,
    include_trivial: bool = False,
) -> RankReport:
    """Rank-loop test on ``W`` over ``A Ā (B B̄)_1^n``.

    Ranks are reported for every ``k`` in ``0..n``.  At ``k = n`` the
    inequality and the (empty) transpose condition hold for every ``W``, so
    that split certifies nothing; it only counts when ``include_trivial``.
    """
    dims, n = _blocks(W, n)
    mat = np.asarray(W.entries)
    violations = []
    groups = [[2 + 2 * i, 3 + 2 * i] for i in range(n)]
    for i in range(n - 1):
        order = list(range(len(dims)))
        (a, b), (c, d) = groups[i], groups[i + 1]
        order[a], order[b], order[c], order[d] = c, d, a, b
        err = np.max(np.abs(permute_array(mat, dims, order) - mat))
        if err > perm_tol:
            violations.append(f"not permutation invariant between blocks {i + 1} and {i + 2} ({err:.1e})")
    full = numeric_rank(mat, tol)
    ranks = {"full": full}
    per_k = []
    found, k_used = False, None
    for k in range(n + 1):
        head = list(range(2 + 2 * k, len(dims)))
        tail = list(range(0, 2 + 2 * k))
        r_head = numeric_rank(ptrace_array(mat, dims, head), tol)
        r_tail = numeric_rank(ptrace_array(mat, dims, tail), tol) if k < n else 1
        transposed = list(range(2 + 2 * k, len(dims)))
        min_eig = float(np.linalg.eigvalsh(ptranspose_array(mat, dims, transposed))[0]) if transposed else 0.0
        ppt_ok = min_eig >= -ppt_tol
        holds = full <= max(r_head, r_tail)
        name_head = "AĀ" + (f"(BB̄)[1..{k}]" if k else "")
        ranks[name_head] = r_head
        if k < n:
            ranks[f"(BB̄)[{k + 1}..{n}]"] = r_tail
        per_k.append({"k": k, "rank_head": r_head, "rank_tail": r_tail, "ppt_min_eig": min_eig, "ppt_ok": ppt_ok, "holds": holds})
        if k < n and not ppt_ok:
            violations.append(f"partial transpose for k={k} has eigenvalue {min_eig:.1e}")
        usable = k < n or include_trivial
        if usable and holds and ppt_ok and not found:
            found, k_used = True, k
    if any(v.startswith("not permutation") for v in violations):
        found, k_used = False, None
    return RankReport(ranks, found, k_used, tol, per_k, violations)


# ---------------------------------------------------------------------------
# code extraction


def extract_code(W: HermitianOperator, M: int, rank_tol: float = 1e-5, product_tol: float = 1e-4) -> CodePair:
    """Factor a rank-one certificate into an encoder/decoder pair.

    The reduced state on ``A Ā B_1 B̄_1`` must be pure and product across
    ``AĀ | BB̄``; the factors are then rescaled so that the marginal
    conditions hold exactly.  The returned pair records the size of the
    discarded second singular value (relative) plus the rescaling in
    ``residual``.
    """
    dims, n = _blocks(W, None)
    mat = np.asarray(W.entries)
    if numeric_rank(mat, rank_tol) != 1:
        raise ExtractionError(f"certificate has numeric rank {numeric_rank(mat, rank_tol)}, expected 1")
    red = ptrace_array(mat, dims, list(range(4, len(dims)))) if n > 1 else mat
    d_a, d_abar, d_b, d_bbar = dims[:4]
    if d_a != M or d_bbar != M:
        raise ShapeError(f"layout dims {dims[:4]} do not match M={M}")
    vals, vecs = np.linalg.eigh(red)
    v = vecs[:, -1] * np.sqrt(max(vals[-1], 0.0))
    u, s, vh = np.linalg.svd(v.reshape(d_a * d_abar, d_b * d_bbar))
    if s.size > 1 and s[1] > product_tol * s[0]:
        raise ExtractionError(f"state is not product across AĀ|BB̄ (singular values {s[0]:.3e}, {s[1]:.3e})")
    e = np.outer(u[:, 0], u[:, 0].conj())
    d = np.outer(vh[0], vh[0].conj())
    e, err_e = _fix_marginal(e, d_a, d_abar)
    d, err_d = _fix_marginal(d, d_b, d_bbar)
    resid = (s[1] / s[0] if s.size > 1 else 0.0) + err_e + err_d
    E = HermitianOperator(SystemLayout([("A", d_a), ("Abar", d_abar)]), e)
    D = HermitianOperator(SystemLayout([("B", d_b), ("Bbar", d_bbar)]), d)
    return CodePair(E, D, float(resid))


def _fix_marginal(x: np.ndarray, d0: int, d1: int) -> tuple[np.ndarray, float]:
    """Congruence by ``(d0 X_0)^{-1/2} ⊗ 1`` so the first marginal is ``1/d0``."""
    x = x / np.trace(x).real
    marg = ptrace_array(x, [d0, d1], [1])
    err = float(np.max(np.abs(marg - np.eye(d0) / d0)))
    w, v = np.linalg.eigh(d0 * marg)
    if w[0] <= 1e-12:
        raise ExtractionError("factor has a singular marginal and cannot be normalized")
    fix = np.kron(v @ np.diag(w**-0.5) @ v.conj().T, np.eye(d1))
    out = fix @ x @ fix.conj().T
    return 0.5 * (out + out.conj().T), err
