"""Builders for the outer-bound programs.

Layout conventions: the encoder lives on ``A Ā`` (``d_A = M``), the decoder
on ``B B̄`` (``d_B̄ = M``), and the channel Choi state ``J`` on ``[B, Ā]``.
The level-``n`` variable ``W`` lives on ``A Ā (B B̄)_1 ... (B B̄)_n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np
import scipy.sparse as sp

from . import linmaps as lm
from .channels import QuantumChannel
from .errors import DomainError, ResourceError, ShapeError
from .program import ConicProgram, ConstraintBlock, LinearForm, Twirl, Variable
from .tensor import HermitianOperator, max_entangled, permute_array

DEFAULT_SIDE_CAP = 1024
CHOI_TOL = 1e-8


@dataclass(frozen=True)
class HierarchySpec:
    level: int = 1
    ppt: bool = False
    assisted: str = "plain"
    extend_side: str = "B"

    def __post_init__(self):
        if self.level < 1:
            raise DomainError("hierarchy level must be >= 1")
        if self.assisted not in ("plain", "locc1"):
            raise DomainError(f"assisted must be 'plain' or 'locc1', got {self.assisted!r}")
        if self.extend_side not in ("A", "B"):
            raise DomainError(f"extend_side must be 'A' or 'B', got {self.extend_side!r}")


def choi_array(J) -> tuple[np.ndarray, int, int]:
    """Validated Choi matrix on ``[out, in]`` with ``(d_out, d_in)``."""
    if isinstance(J, QuantumChannel):
        return np.asarray(J.choi.entries), J.dim_out, J.dim_in
    if isinstance(J, HermitianOperator):
        if len(J.layout) != 2:
            raise DomainError("a Choi state needs a two-factor layout [out, in]")
        d_out, d_in = J.layout.dims
        mat = np.asarray(J.entries)
    else:
        raise DomainError("expected a QuantumChannel or a HermitianOperator Choi state")
    if abs(np.trace(mat).real - 1) > CHOI_TOL:
        raise DomainError("Choi state must have unit trace")
    if np.linalg.eigvalsh(mat)[0] < -CHOI_TOL:
        raise DomainError("Choi state must be positive semidefinite")
    marg = np.einsum("ijik->jk", mat.reshape(d_out, d_in, d_out, d_in))
    if np.max(np.abs(marg - np.eye(d_in) / d_in)) > CHOI_TOL:
        raise DomainError("Choi state is not trace preserving (input marginal is not maximally mixed)")
    return mat, d_out, d_in


def objective_operator(J, M: int) -> np.ndarray:
    """``d_Ā d_B (J_{ĀB} ⊗ Φ_{AB̄})`` arranged on ``A Ā B B̄``."""
    mat, d_b, d_abar = choi_array(J)
    phi = max_entangled(M).entries
    big = np.kron(mat, phi)  # layout B, Ā, A, B̄
    return d_abar * d_b * permute_array(big, [d_b, d_abar, M, M], [2, 1, 0, 3])


def _herm_block(tag, parts, side, rhs=None, defines=None) -> ConstraintBlock:
    coeffs = {}
    b = None
    for name, lmap in parts.items():
        coeffs[name], b_part = lm.hermitian_rows(lmap, side, rhs)
        b = b_part if b is None else b
    return ConstraintBlock(tag, coeffs, b, defines)


def _ppt_aux(name, dims, labels, twirl, transposed, tag):
    side = int(np.prod(dims))
    conj = None
    if twirl is not None:
        conj = tuple(c != (p in transposed) for p, c in zip(twirl.positions, twirl.conj))
    var = Variable(name, side, "hermitian-psd", tuple(dims), labels, None if twirl is None else Twirl(twirl.positions, conj))
    block = _herm_block(
        tag,
        {name: lm.identity_map(dims), "W": -lm.transpose_map(dims, transposed)},
        side,
        defines=name,
    )
    return var, block


def build_hierarchy(J, M: int, spec: HierarchySpec = HierarchySpec(), side_cap: int = DEFAULT_SIDE_CAP) -> ConicProgram:
    """Level-``n`` outer bound on the channel fidelity with ``M``-dimensional messages."""
    if M < 1:
        raise DomainError("M must be >= 1")
    mat, d_b, d_abar = choi_array(J)
    n = spec.level
    d_a = d_bbar = M
    if spec.extend_side == "A" and spec.assisted == "locc1":
        raise DomainError("the LOCC(1) hierarchy is only defined with extended B systems")

    g = objective_operator(J, M)  # on A Ā B B̄
    if spec.extend_side == "B":
        fixed, ext = [("A", d_a), ("Abar", d_abar)], [("B", d_b), ("Bbar", d_bbar)]
        g_first = g
    else:
        fixed, ext = [("B", d_b), ("Bbar", d_bbar)], [("A", d_a), ("Abar", d_abar)]
        g_first = permute_array(g, [d_a, d_abar, d_b, d_bbar], [2, 3, 0, 1])
    subs = list(fixed)
    for i in range(1, n + 1):
        subs += [(f"{label}{i}", d) for label, d in ext]
    labels = tuple(s[0] for s in subs)
    dims = [s[1] for s in subs]
    side = int(np.prod(dims))
    if side > side_cap:
        raise ResourceError(f"variable side {side} exceeds the cap {side_cap}")

    def blk(i):  # subsystem indices of extended block i (1-based)
        return [2 * i, 2 * i + 1]

    if spec.extend_side == "B":
        twirl = Twirl(tuple([0] + [blk(i)[1] for i in range(1, n + 1)]), tuple([True] + [False] * n))
    else:
        twirl = Twirl(tuple([1] + [blk(i)[0] for i in range(1, n + 1)]), tuple([False] + [True] * n))

    W = Variable("W", side, "hermitian-psd", tuple(dims), labels, twirl)
    rest = list(range(4, len(dims)))
    objective = LinearForm({"W": lm.operator_row(g_first) @ lm.ptrace_map(dims, rest)})

    blocks = [ConstraintBlock("unit-trace", {"W": lm.trace_row(side)}, np.array([1.0]))]
    groups = [blk(i) for i in range(1, n + 1)]
    for i in range(n - 1):
        perm = list(range(n))
        perm[i], perm[i + 1] = i + 1, i
        lmap = lm.identity_map(dims) - lm.block_permute_map(dims, groups, perm)
        blocks.append(_herm_block("perm-invariance", {"W": lmap}, side))

    ext_side = int(np.prod(dims[2:]))
    last_in, last_bar = blk(n)
    head = int(np.prod(dims[:last_in]))
    if spec.extend_side == "B":
        if spec.assisted == "plain":
            lmap = lm.ptrace_map(dims, [1]) - lm.kron_const_map(np.eye(d_a) / d_a, ext_side) @ lm.ptrace_map(dims, [0, 1])
            blocks.append(_herm_block("A-marginal", {"W": lmap}, d_a * ext_side))
        else:
            traced = [1] + [blk(i)[1] for i in range(1, n + 1)]
            s_out = d_a * d_b**n
            blocks.append(
                _herm_block("locc1-AB-marginal", {"W": lm.ptrace_map(dims, traced)}, s_out, rhs=np.eye(s_out) / s_out)
            )
        lmap = lm.ptrace_map(dims, [last_bar]) - lm.kron_const_map(np.eye(d_b) / d_b, head, left=False) @ lm.ptrace_map(
            dims, [last_in, last_bar]
        )
        blocks.append(_herm_block("B-marginal", {"W": lmap}, head * d_b))
        cut_name = "ppt-BB̄"
    else:
        lmap = lm.ptrace_map(dims, [1]) - lm.kron_const_map(np.eye(d_b) / d_b, ext_side) @ lm.ptrace_map(dims, [0, 1])
        blocks.append(_herm_block("B-marginal", {"W": lmap}, d_b * ext_side))
        lmap = lm.ptrace_map(dims, [last_bar]) - lm.kron_const_map(np.eye(d_a) / d_a, head, left=False) @ lm.ptrace_map(
            dims, [last_in, last_bar]
        )
        blocks.append(_herm_block("A-marginal", {"W": lmap}, head * d_a))
        cut_name = "ppt-AĀ"

    variables = [W]
    if spec.ppt:
        for j in range(1, n + 1):
            transposed = [p for i in range(1, j + 1) for p in blk(i)]
            tag = cut_name if j == n else f"{cut_name}[1..{j}]"
            var, block = _ppt_aux(f"T{j}", dims, labels, twirl, transposed, tag)
            variables.append(var)
            blocks.append(block)

    meta = {
        "program": "hierarchy",
        "level": n,
        "ppt": spec.ppt,
        "assisted": spec.assisted,
        "extend_side": spec.extend_side,
        "M": M,
        "d_in": d_abar,
        "d_out": d_b,
    }
    return ConicProgram(tuple(variables), objective, tuple(blocks), "max", meta)


def build_first_level_symmetrized(J, M: int, assisted: str = "plain") -> ConicProgram:
    """Level-one PPT program after twirling away the ``A B̄`` systems."""
    if assisted not in ("plain", "locc1"):
        raise DomainError(f"assisted must be 'plain' or 'locc1', got {assisted!r}")
    mat, d_b, d_abar = choi_array(J)
    dims = [d_abar, d_b]
    side = d_abar * d_b
    j_ab = permute_array(mat, [d_b, d_abar], [1, 0])
    objective = LinearForm({"Y": lm.operator_row(d_abar * d_b * j_ab)})
    rho_up = lm.kron_const_map(np.eye(d_b) / d_b, d_abar, left=False)
    ident = lm.identity_map(dims)
    tb = lm.transpose_map(dims, [1])
    variables = [
        Variable("Y", side, "hermitian-psd", tuple(dims), ("Abar", "B")),
        Variable("rho", d_abar, "hermitian-psd", (d_abar,), ("Abar",)),
        Variable("S_upper", side, "hermitian-psd", tuple(dims), ("Abar", "B")),
        Variable("S_ppt_upper", side, "hermitian-psd", tuple(dims), ("Abar", "B")),
        Variable("S_ppt_lower", side, "hermitian-psd", tuple(dims), ("Abar", "B")),
    ]
    blocks = [ConstraintBlock("unit-trace", {"rho": lm.trace_row(d_abar)}, np.array([1.0]))]
    if assisted == "plain":
        blocks.append(
            _herm_block("B-marginal", {"Y": (M * M) * lm.ptrace_map(dims, [0])}, d_b, rhs=np.eye(d_b) / d_b)
        )
    blocks.append(_herm_block("Y-upper", {"S_upper": ident, "rho": -rho_up, "Y": ident}, side, defines="S_upper"))
    blocks.append(
        _herm_block("ppt-upper", {"S_ppt_upper": ident, "rho": -rho_up, "Y": M * tb}, side, defines="S_ppt_upper")
    )
    blocks.append(
        _herm_block("ppt-lower", {"S_ppt_lower": ident, "rho": -rho_up, "Y": -M * tb}, side, defines="S_ppt_lower")
    )
    meta = {"program": "first-level-symmetrized", "assisted": assisted, "M": M, "d_in": d_abar, "d_out": d_b}
    return ConicProgram(tuple(variables), objective, tuple(blocks), "max", meta)


# ---------------------------------------------------------------------------
# depolarizing linear program


def x_coeff(i: int, k: int, N: int, d: int = 2) -> int:
    """Exact integer value of the coefficient sum ``x_{i,k}``."""
    if N < 0 or not (0 <= i <= N and 0 <= k <= N):
        raise DomainError(f"indices out of range: i={i}, k={k}, N={N}")
    if d < 2:
        raise DomainError("d must be >= 2")
    total = 0
    for r in range(max(0, i + k - N), min(i, k) + 1):
        total += comb(k, r) * comb(N - k, i - r) * (-1) ** (i - r) * (d - 1) ** (k - r) * (d + 1) ** (N - k + r - i)
    return total


def _dep_lp(N: int, p: float, bound_scale: Fraction) -> ConicProgram:
    n = N + 1
    q = 3.0 * p / 4.0
    weights = np.array([comb(N, i) * (1 - q) ** i * q ** (N - i) for i in range(n)])
    a = np.array([[float(Fraction(x_coeff(i, k, N)) * bound_scale) for i in range(n)] for k in range(n)])
    norm = np.array([float(Fraction(comb(N, i) * 3 ** (N - i), 4**N)) for i in range(n)])
    eye = sp.identity(n, format="csr", dtype=complex)
    variables = tuple(Variable(name, n, "nonneg") for name in ("m", "u", "s_hi", "s_lo"))
    blocks = (
        ConstraintBlock("m-upper", {"m": eye, "u": eye}, np.ones(n)),
        ConstraintBlock("ppt-upper", {"m": sp.csr_matrix(a, dtype=complex), "s_hi": eye}, np.full(n, 0.5)),
        ConstraintBlock("ppt-lower", {"m": sp.csr_matrix(a, dtype=complex), "s_lo": -eye}, np.full(n, -0.5)),
        ConstraintBlock("normalization", {"m": sp.csr_matrix(norm[None, :], dtype=complex)}, np.array([0.25])),
    )
    objective = LinearForm({"m": sp.csr_matrix(weights[None, :], dtype=complex)})
    meta = {"program": "dep-lp", "N": N, "p": p}
    return ConicProgram(variables, objective, blocks, "max", meta)


def build_dep_lp(N: int, p: float, M: int = 2) -> ConicProgram:
    """Linear program for the first PPT level on ``N`` copies of the qubit
    depolarizing channel.  The two-sided bounds act on ``x_{i,k} / 2^N``,
    the eigenvalues of the partially transposed symmetric projectors."""
    if N < 1:
        raise DomainError("N must be >= 1")
    if M != 2:
        raise DomainError("the depolarizing LP is only available for M = 2")
    if not 0.0 <= p <= 4.0 / 3.0 + 1e-12:
        raise DomainError(f"p={p} outside [0, 4/3]")
    return _dep_lp(N, min(p, 4.0 / 3.0), Fraction(1, 2**N))


# ---------------------------------------------------------------------------
# generic jointly constrained bilinear hierarchy


def build_generic_bilinear(
    G: np.ndarray,
    lam: np.ndarray,
    X: np.ndarray,
    gam: np.ndarray,
    Y: np.ndarray,
    n: int,
    dims: tuple[int, int],
    *,
    strengthened: bool = False,
    side_cap: int = DEFAULT_SIDE_CAP,
) -> ConicProgram:
    """Level-``n`` relaxation of ``max Tr[G (W_A ⊗ W_B)]`` with
    ``Λ(W_A) = X`` and ``Γ(W_B) = Y``.

    ``lam`` and ``gam`` are matrices of the maps acting on row-major
    vectorized operators.  With ``strengthened`` the ``Γ`` condition keeps the
    ``A`` system: ``Γ_{B_n}(W_{A B_1^n}) = W_{A B_1^{n-1}} ⊗ Y``.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    d_a, d_b = dims
    G = np.asarray(G, dtype=complex)
    X = np.atleast_2d(np.asarray(X, dtype=complex))
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    c_a, c_b = X.shape[0], Y.shape[0]
    if G.shape != (d_a * d_b, d_a * d_b):
        raise ShapeError(f"G has shape {G.shape}, expected {(d_a * d_b,) * 2}")
    if np.shape(lam) != (c_a * c_a, d_a * d_a) or np.shape(gam) != (c_b * c_b, d_b * d_b):
        raise ShapeError("map matrices do not match the operator dimensions")
    wdims = [d_a] + [d_b] * n
    side = int(np.prod(wdims))
    if side > side_cap:
        raise ResourceError(f"variable side {side} exceeds the cap {side_cap}")
    labels = ("A",) + tuple(f"B{i}" for i in range(1, n + 1))
    W = Variable("W", side, "hermitian-psd", tuple(wdims), labels)
    objective = LinearForm({"W": lm.operator_row(G) @ lm.ptrace_map(wdims, list(range(2, n + 1)))})

    blocks = [ConstraintBlock("unit-trace", {"W": lm.trace_row(side)}, np.array([1.0]))]
    groups = [[i] for i in range(1, n + 1)]
    for i in range(n - 1):
        perm = list(range(n))
        perm[i], perm[i + 1] = i + 1, i
        lmap = lm.identity_map(wdims) - lm.block_permute_map(wdims, groups, perm)
        blocks.append(_herm_block("perm-invariance", {"W": lmap}, side))

    bside = d_b**n
    lmap = lm.local_map(wdims, [0], lam, c_a) - lm.kron_const_map(X, bside) @ lm.ptrace_map(wdims, [0])
    blocks.append(_herm_block("A-marginal", {"W": lmap}, c_a * bside))

    if strengthened:
        head = side // d_b
        lmap = lm.local_map(wdims, [n], gam, c_b) - lm.kron_const_map(Y, head, left=False) @ lm.ptrace_map(wdims, [n])
        blocks.append(_herm_block("B-marginal", {"W": lmap}, head * c_b))
    else:
        bdims = [d_b] * n
        head = d_b ** (n - 1)
        inner = lm.local_map(bdims, [n - 1], gam, c_b) - lm.kron_const_map(Y, head, left=False) @ lm.ptrace_map(
            bdims, [n - 1]
        )
        lmap = inner @ lm.ptrace_map(wdims, [0])
        blocks.append(_herm_block("B-marginal", {"W": lmap}, head * c_b))
    meta = {"program": "generic-bilinear", "level": n, "strengthened": strengthened}
    return ConicProgram((W,), objective, tuple(blocks), "max", meta)


def qec_bilinear_instance(J, M: int) -> dict:
    """Arguments of :func:`build_generic_bilinear` that encode the coding
    problem: ``Λ = Tr_Ā``, ``X = 1/d_A``, ``Γ = Tr_B̄``, ``Y = 1/d_B``."""
    _, d_b, d_abar = choi_array(J)
    d_a = M
    lam = lm.map_matrix(lambda e: np.einsum("ijkj->ik", e.reshape(d_a, d_abar, d_a, d_abar)), d_a * d_abar)
    gam = lm.map_matrix(lambda e: np.einsum("ijkj->ik", e.reshape(d_b, M, d_b, M)), d_b * M)
    return {
        "G": objective_operator(J, M),
        "lam": lam,
        "X": np.eye(d_a) / d_a,
        "gam": gam,
        "Y": np.eye(d_b) / d_b,
        "dims": (d_a * d_abar, d_b * M),
    }
