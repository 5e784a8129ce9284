"""Block diagonalization of operators invariant under a unitary twirl.

A variable invariant under ``⊗_t U^{(c_t)}`` on some of its factors lies in
the commutant of that representation tensored with the full matrix algebra
of the remaining factors.  The commutant is a direct sum of full matrix
algebras ``Mat(m_λ) ⊗ 1_{n_λ}``, so the variable is PSD iff each of the
smaller blocks ``Z_λ`` (side ``m_λ · r``) is PSD.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.stats import unitary_group

from . import linmaps as lm

_SEED = 20240611


@dataclass(frozen=True)
class Isotypic:
    """One isotypic component: ``m`` copies of an irrep of dimension ``n``.
    ``bases[j]`` is the ``D × n`` isometry onto copy ``j``; the copies are
    intertwined so that all of them carry the same irrep matrices."""

    n: int
    bases: tuple[np.ndarray, ...]

    @property
    def m(self) -> int:
        return len(self.bases)


@dataclass(frozen=True)
class Decomposition:
    dim: int
    real: bool
    components: tuple[Isotypic, ...]


def _rep(d: int, conj: tuple[bool, ...], u: np.ndarray) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for c in conj:
        out = np.kron(out, u.conj() if c else u)
    return out


def commutant_basis(d: int, conj: tuple[bool, ...], samples: int = 3) -> np.ndarray:
    """Orthonormal basis (rows are row-major vecs) of the commutant."""
    rng = np.random.default_rng(_SEED)
    D = d ** len(conj)
    eye = np.eye(D * D)
    rows = []
    for _ in range(samples):
        v = _rep(d, conj, unitary_group.rvs(d, random_state=rng))
        rows.append(np.kron(v, v.conj()) - eye)
    null = sla.null_space(np.vstack(rows), rcond=1e-10)
    return null.T


def _clusters(vals: np.ndarray, tol: float) -> list[list[int]]:
    groups = [[0]]
    for i in range(1, len(vals)):
        if vals[i] - vals[groups[-1][-1]] > tol:
            groups.append([i])
        else:
            groups[-1].append(i)
    return groups


@lru_cache(maxsize=64)
def decompose(d: int, conj: tuple[bool, ...], real: bool) -> Decomposition | None:
    """Isotypic decomposition of the commutant of ``⊗ U^{(c)}``.

    With ``real`` every basis is real, which requires all irreps to be of
    real type; ``None`` is returned when that fails.
    """
    rng = np.random.default_rng(_SEED + 1)
    D = d ** len(conj)
    basis = commutant_basis(d, conj)
    if real:
        stacked = np.vstack([basis.real, basis.imag])
        u, s, vt = np.linalg.svd(stacked, full_matrices=False)
        basis = vt[s > 1e-9 * s[0]]
        h = (rng.standard_normal(len(basis)) @ basis).reshape(D, D)
        h = (h + h.T) / 2
        r = (rng.standard_normal(len(basis)) @ basis).reshape(D, D)
    else:
        coef = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
        h = (coef @ basis).reshape(D, D)
        h = (h + h.conj().T) / 2
        coef = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
        r = (coef @ basis).reshape(D, D)
    vals, vecs = np.linalg.eigh(h)
    scale = max(1.0, np.max(np.abs(vals)))
    spaces = [vecs[:, g] for g in _clusters(vals, 1e-7 * scale)]

    # group equivalent copies by the random element connecting them
    k = len(spaces)
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(k):
        for j in range(i + 1, k):
            if np.linalg.norm(spaces[j].conj().T @ r @ spaces[i]) > 1e-8 * np.linalg.norm(r):
                parent[find(j)] = find(i)
    classes: dict[int, list[int]] = {}
    for i in range(k):
        classes.setdefault(find(i), []).append(i)

    comps = []
    for members in classes.values():
        u1 = spaces[members[0]]
        n = u1.shape[1]
        bases = [u1]
        for j in members[1:]:
            uj = spaces[j]
            if uj.shape[1] != n:
                return None
            t = uj.conj().T @ r @ u1
            c = np.sqrt(np.trace(t.conj().T @ t).real / n)
            bases.append(uj @ t / c)
        comps.append(Isotypic(n, tuple(bases)))
    dec = Decomposition(D, real, tuple(comps))
    return dec if _validate(dec, basis) else None


def _validate(dec: Decomposition, basis: np.ndarray, tol: float = 1e-8) -> bool:
    q = np.hstack([b for c in dec.components for b in c.bases])
    if sum(c.m * c.m for c in dec.components) != len(basis):
        return False
    if q.shape[1] != dec.dim or np.max(np.abs(q.conj().T @ q - np.eye(dec.dim))) > tol:
        return False
    for vec in basis:
        b = q.conj().T @ vec.reshape(dec.dim, dec.dim) @ q
        expected = np.zeros_like(b)
        off = 0
        for c in dec.components:
            # A ⊗ 1_n in the (copy, irrep index) ordering
            blk = b[off:off + c.m * c.n, off:off + c.m * c.n].reshape(c.m, c.n, c.m, c.n)
            a = np.einsum("iaja->ij", blk) / c.n
            expected[off:off + c.m * c.n, off:off + c.m * c.n] = np.kron(a, np.eye(c.n))
            off += c.m * c.n
        if np.max(np.abs(b - expected)) > tol * max(1.0, np.max(np.abs(b))):
            return False
    return True


@dataclass(frozen=True)
class BlockLift:
    """Sparse map from the stacked block entries ``vec(Z_λ)`` to ``vec(X)``."""

    block_sides: tuple[int, ...]
    multiplicities: tuple[int, ...]
    lift: sp.csr_matrix


def block_lift(dims: tuple[int, ...], positions: tuple[int, ...], dec: Decomposition) -> BlockLift:
    k = len(dims)
    if len({dims[i] for i in positions}) != 1 or dims[positions[0]] ** len(positions) != dec.dim:
        raise ValueError("twirled factors must share one dimension matching the decomposition")
    rest = [i for i in range(k) if i not in positions]
    order = list(positions) + rest
    r = int(np.prod([dims[i] for i in rest])) if rest else 1
    D = dec.dim
    side = D * r
    ii, jj = np.meshgrid(np.arange(r), np.arange(r), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    rows, cols, vals = [], [], []
    offset = 0
    sides, mults = [], []
    for c in dec.components:
        m = c.m
        s = m * r
        for a in range(m):
            for b in range(m):
                g = c.bases[a] @ c.bases[b].conj().T
                al, be = np.nonzero(np.abs(g) > 1e-14)
                # X'[(α,i),(β,j)] += g[α,β] Z[(a,i),(b,j)]
                xr = ((al[:, None] * r + ii[None, :]) * side + be[:, None] * r + jj[None, :]).ravel()
                zc = np.broadcast_to(((a * r + ii) * s + b * r + jj)[None, :], (al.size, ii.size)).ravel()
                rows.append(xr)
                cols.append(offset + zc)
                vals.append(np.repeat(g[al, be], ii.size))
        offset += s * s
        sides.append(s)
        mults.append(c.n)
    lift = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(side * side, offset), dtype=complex
    )
    # X' has the acted factors first; move them back into place
    pdims = [dims[i] for i in order]
    inv = [order.index(i) for i in range(k)]
    back = lm.permute_map(pdims, inv)
    return BlockLift(tuple(sides), tuple(mults), (back @ lift).tocsr())
