"""Seesaw (alternating) lower bounds on the coding fidelity.

With the decoder fixed the objective is linear in the encoder and the
maximization is a small SDP, and vice versa.  Alternating the two gives a
nondecreasing sequence of achievable fidelities.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import linmaps as lm
from .backend import SolverConfig, compile_program
from .builders import choi_array, objective_operator
from .codes import CodePair, InstrumentCode, evaluate_code, evaluate_instrument_code, trivial_code
from .errors import DomainError, SolverError
from .program import ConicProgram, ConstraintBlock, LinearForm, Variable
from .tensor import HermitianOperator, SystemLayout, ptrace_array

MONOTONE_TOL = 1e-7


@dataclass(frozen=True)
class SeesawConfig:
    restarts: int = 20
    iters_per_restart: int = 50
    convergence_tol: float = 1e-7
    seed: int = 0
    arity: int | None = None  # instrument outcomes for the assisted setting; default d_A²
    trivial_start: bool = True
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.restarts < 1 or self.iters_per_restart < 1:
            raise ValueError("restarts and iters_per_restart must be positive")
        if self.convergence_tol <= 0:
            raise ValueError("convergence_tol must be positive")
        if self.arity is not None and self.arity < 1:
            raise ValueError("arity must be positive")


def _marginal_program(names: list[str], d0: int, d1: int, joint: bool) -> ConicProgram:
    """Variables ``X_i`` on ``d0 ⊗ d1`` with ``Tr_1 X_i = 1/d0`` each, or with
    ``Σ_i Tr_1 X_i = 1/d0`` when ``joint``."""
    side = d0 * d1
    tr = lm.ptrace_map([d0, d1], [1])
    variables = tuple(Variable(n, side, "hermitian-psd", (d0, d1)) for n in names)
    target = np.eye(d0) / d0
    if joint:
        coeffs, rhs = {}, None
        for n in names:
            coeffs[n], rhs = lm.hermitian_rows(tr, d0, target)
        blocks = (ConstraintBlock("instrument-marginal", coeffs, rhs),)
    else:
        blocks = tuple(ConstraintBlock(f"marginal-{n}", {n: lm.hermitian_rows(tr, d0, target)[0]}, lm.hermitian_rows(tr, d0, target)[1]) for n in names)
    zero = sp.csr_matrix((1, side * side), dtype=complex)
    return ConicProgram(variables, LinearForm({names[0]: zero}), blocks, "max")


def _effective(g: np.ndarray, fixed: np.ndarray, sides: tuple[int, int], on_first: bool) -> np.ndarray:
    """``Tr_other[G (X ⊗ fixed)] = Tr[G_eff X]``: returns ``G_eff``."""
    s_e, s_d = sides
    g4 = g.reshape(s_e, s_d, s_e, s_d)
    if on_first:  # X on the first factor, fixed on the second
        return np.einsum("iajb,ba->ij", g4, fixed)
    return np.einsum("aibj,ba->ij", g4, fixed)


def _random_marginal_state(rng, d0: int, d1: int) -> np.ndarray:
    """Wishart-style PSD matrix congruence-rescaled so that ``Tr_1 = 1/d0``."""
    side = d0 * d1
    z = rng.standard_normal((side, side)) + 1j * rng.standard_normal((side, side))
    x = z @ z.conj().T
    marg = ptrace_array(x, [d0, d1], [1])
    w, v = np.linalg.eigh(d0 * marg)
    fix = np.kron(v @ np.diag(w**-0.5) @ v.conj().T, np.eye(d1))
    x = fix @ x @ fix.conj().T
    return 0.5 * (x + x.conj().T)


def seesaw_lower_bound(
    J,
    M: int,
    config: SeesawConfig = SeesawConfig(),
    assisted: str = "plain",
    init: CodePair | InstrumentCode | None = None,
):
    """Best seesaw value over the restarts, with the code achieving it.

    Returns ``(value, code)`` with a :class:`CodePair` in the plain setting
    and an :class:`InstrumentCode` for ``assisted="locc1"``.  ``init`` adds a
    start from the given code before the random restarts.
    """
    if assisted not in ("plain", "locc1"):
        raise DomainError(f"assisted must be 'plain' or 'locc1', got {assisted!r}")
    _, d_b, d_abar = choi_array(J)
    g = objective_operator(J, M)
    s_e, s_d = M * d_abar, d_b * M
    arity = 1 if assisted == "plain" else (config.arity or M * M)
    enc_names = [f"E{i}" for i in range(arity)]
    dec_names = [f"D{i}" for i in range(arity)]
    # the effective objectives are complex in general, so no real restriction
    solver = replace(config.solver, real=False)
    enc = compile_program(_marginal_program(enc_names, M, d_abar, joint=True), solver)
    dec = compile_program(_marginal_program(dec_names, d_b, M, joint=False), solver)
    rng = np.random.default_rng(config.seed)

    starts: list[list[np.ndarray]] = []
    if init is not None:
        if isinstance(init, CodePair):
            init = InstrumentCode.from_pair(init, arity)
        if len(init.D) != arity:
            raise DomainError(f"initial code has {len(init.D)} outcomes, expected {arity}")
        starts.append([np.asarray(d.entries) for d in init.D])
    if config.trivial_start and d_abar == d_b == M:
        t = trivial_code(d_abar, d_b, M)
        starts.append([np.asarray(t.D.entries)] * arity)
    for _ in range(config.restarts):
        starts.append([_random_marginal_state(rng, d_b, M) for _ in range(arity)])

    best_val, best = -np.inf, None
    for idx, decoders in enumerate(starts):
        try:
            val, encs, decs = _alternate(g, enc, dec, enc_names, dec_names, decoders, (s_e, s_d), config)
        except SolverError as exc:
            raise SolverError(f"seesaw restart {idx}: {exc}") from exc
        if val > best_val + 1e-12:
            best_val, best = val, (encs, decs)

    lay_e = SystemLayout([("A", M), ("Abar", d_abar)])
    lay_d = SystemLayout([("B", d_b), ("Bbar", M)])
    encs, decs = best
    if assisted == "plain":
        code = CodePair(HermitianOperator(lay_e, encs[0]), HermitianOperator(lay_d, decs[0]))
        return evaluate_code(code, J, M), code
    code = InstrumentCode(
        tuple(HermitianOperator(lay_e, e) for e in encs), tuple(HermitianOperator(lay_d, d) for d in decs)
    )
    return evaluate_instrument_code(code, J, M), code


def _alternate(g, enc, dec, enc_names, dec_names, decoders, sides, config):
    def value(encs, decs):
        return float(sum(np.real(np.sum(g * np.kron(e, d).T)) for e, d in zip(encs, decs)))

    def half(compiled, names, fixed, on_first):
        coeffs = {n: lm.operator_row(_effective(g, f, sides, on_first)) for n, f in zip(names, fixed)}
        res = compiled.run(LinearForm(coeffs), sense="max")
        if res.status not in ("optimal", "near-optimal"):
            raise SolverError(f"half-step ended with status {res.status}")
        return [res.matrix(n) for n in names]

    encs = half(enc, enc_names, decoders, on_first=True)
    decs = decoders
    prev = value(encs, decs)
    for _ in range(config.iters_per_restart):
        decs = half(dec, dec_names, encs, on_first=False)
        mid = value(encs, decs)
        encs = half(enc, enc_names, decs, on_first=True)
        cur = value(encs, decs)
        if mid < prev - MONOTONE_TOL or cur < mid - MONOTONE_TOL:
            raise SolverError(f"seesaw objective decreased ({prev:.10f} -> {mid:.10f} -> {cur:.10f})")
        if cur - prev <= config.convergence_tol * max(1.0, abs(cur)):
            prev = cur
            break
        prev = cur
    return prev, encs, decs
