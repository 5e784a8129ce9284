"""Sparse matrices of linear maps on row-major vectorized operators.

An operator ``X`` of side ``s`` is identified with ``vec(X)[i*s + j] = X[i, j]``.
Every map here is returned as a ``scipy.sparse.csr_matrix`` acting on such
vectors.  The maps are built by running the corresponding tensor reshuffle on
an array of indices, which keeps them consistent with the dense kernels in
:mod:`qecbounds.tensor`.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ShapeError


def _side(dims: Sequence[int]) -> int:
    return int(np.prod(dims, dtype=np.int64)) if len(dims) else 1


def _index_tensor(dims: Sequence[int]) -> np.ndarray:
    s = _side(dims)
    return np.arange(s * s, dtype=np.int64).reshape(list(dims) * 2)


def _csr(rows, cols, vals, shape) -> sp.csr_matrix:
    m = sp.csr_matrix((np.asarray(vals, dtype=complex), (np.asarray(rows), np.asarray(cols))), shape=shape)
    m.sum_duplicates()
    m.sort_indices()
    return m


def identity_map(dims: Sequence[int]) -> sp.csr_matrix:
    n = _side(dims) ** 2
    return _csr(np.arange(n), np.arange(n), np.ones(n), (n, n))


def permute_map(dims: Sequence[int], order: Sequence[int]) -> sp.csr_matrix:
    """``vec(X) -> vec(X')`` where factor ``i`` of ``X'`` is factor ``order[i]`` of ``X``."""
    k = len(dims)
    order = list(order)
    if sorted(order) != list(range(k)):
        raise ShapeError(f"{order} is not a permutation")
    idx = _index_tensor(dims).transpose(order + [k + i for i in order]).ravel()
    n = idx.size
    return _csr(np.arange(n), idx, np.ones(n), (n, n))


def block_permute_map(dims: Sequence[int], groups: Sequence[Sequence[int]], perm: Sequence[int]) -> sp.csr_matrix:
    """Conjugation by the unitary that moves block ``perm[i]`` into block ``i``."""
    order = list(range(len(dims)))
    for i, src in enumerate(perm):
        if [dims[a] for a in groups[i]] != [dims[b] for b in groups[src]]:
            raise ShapeError("permuted blocks must have identical shapes")
        for pos, old in zip(groups[i], groups[src]):
            order[pos] = old
    return permute_map(dims, order)


def transpose_map(dims: Sequence[int], systems: Sequence[int]) -> sp.csr_matrix:
    k = len(dims)
    axes = list(range(2 * k))
    for i in set(systems):
        axes[i], axes[k + i] = axes[k + i], axes[i]
    idx = _index_tensor(dims).transpose(axes).ravel()
    n = idx.size
    return _csr(np.arange(n), idx, np.ones(n), (n, n))


def ptrace_map(dims: Sequence[int], traced: Sequence[int]) -> sp.csr_matrix:
    """Partial trace over ``traced``; the output keeps the remaining factors in order."""
    k = len(dims)
    traced = sorted(set(traced))
    keep = [i for i in range(k) if i not in traced]
    s_in = _side(dims)
    s_out = _side([dims[i] for i in keep])
    t = _side([dims[i] for i in traced])
    idx = _index_tensor(dims).transpose(keep + [k + i for i in keep] + traced + [k + i for i in traced])
    idx = idx.reshape(s_out * s_out, t, t)
    cols = np.diagonal(idx, axis1=1, axis2=2)  # (s_out², t)
    rows = np.repeat(np.arange(s_out * s_out), t)
    return _csr(rows, cols.ravel(), np.ones(rows.size), (s_out * s_out, s_in * s_in))


def kron_const_map(const: np.ndarray, side: int, left: bool = True) -> sp.csr_matrix:
    """``vec(X) -> vec(K ⊗ X)`` (``left``) or ``vec(X ⊗ K)``."""
    const = np.asarray(const, dtype=complex)
    c = const.shape[0]
    ka, kb = np.nonzero(const)
    vals = const[ka, kb]
    xi, xj = np.divmod(np.arange(side * side), side)
    if left:
        out_r = ka[:, None] * side + xi[None, :]
        out_c = kb[:, None] * side + xj[None, :]
    else:
        out_r = xi[None, :] * c + ka[:, None]
        out_c = xj[None, :] * c + kb[:, None]
    s_out = side * c
    rows = (out_r * s_out + out_c).ravel()
    cols = np.broadcast_to(np.arange(side * side)[None, :], out_r.shape).ravel()
    v = np.broadcast_to(vals[:, None], out_r.shape).ravel()
    return _csr(rows, cols, v, (s_out * s_out, side * side))


def local_map(dims: Sequence[int], group: Sequence[int], lmat: np.ndarray, out_dim: int) -> sp.csr_matrix:
    """Apply the map with matrix ``lmat`` (``out_dim² × g²``) to the factors in
    ``group`` (taken together, in the given order).  The output has the group
    replaced by one factor of dimension ``out_dim`` placed at ``group[0]``."""
    k = len(dims)
    group = list(group)
    rest = [i for i in range(k) if i not in group]
    g = _side([dims[i] for i in group])
    lmat = np.asarray(lmat, dtype=complex)
    if lmat.shape != (out_dim * out_dim, g * g):
        raise ShapeError(f"map matrix has shape {lmat.shape}, expected {(out_dim * out_dim, g * g)}")
    r = _side([dims[i] for i in rest])
    idx_in = _index_tensor(dims).transpose(group + [k + i for i in group] + rest + [k + i for i in rest])
    idx_in = idx_in.reshape(g * g, r * r)

    first = min(group)
    out_dims = []
    out_pos = {}
    for i in range(k):
        if i == first:
            out_pos["g"] = len(out_dims)
            out_dims.append(out_dim)
        elif i not in group:
            out_pos[i] = len(out_dims)
            out_dims.append(dims[i])
    ko = len(out_dims)
    rest_out = [out_pos[i] for i in rest]
    gp = out_pos["g"]
    idx_out = _index_tensor(out_dims).transpose([gp, ko + gp] + rest_out + [ko + i for i in rest_out])
    idx_out = idx_out.reshape(out_dim * out_dim, r * r)

    cc, gg = np.nonzero(lmat)
    rows = idx_out[cc, :].ravel()
    cols = idx_in[gg, :].ravel()
    vals = np.repeat(lmat[cc, gg], r * r)
    s_out = out_dim * r
    return _csr(rows, cols, vals, (s_out * s_out, _side(dims) ** 2))


def trace_row(side: int) -> sp.csr_matrix:
    """Row functional ``vec(X) -> Tr X``."""
    cols = np.arange(side) * (side + 1)
    return _csr(np.zeros(side, dtype=np.int64), cols, np.ones(side), (1, side * side))


def operator_row(op: np.ndarray) -> sp.csr_matrix:
    """Row functional ``vec(X) -> Tr[op X]``."""
    op = np.asarray(op, dtype=complex)
    return sp.csr_matrix(op.T.reshape(1, -1))


def map_matrix(fn, d_in: int) -> np.ndarray:
    """Matrix of a linear map ``fn`` on ``d_in × d_in`` matrices (row-major vec)."""
    cols = []
    for a in range(d_in):
        for b in range(d_in):
            e = np.zeros((d_in, d_in), dtype=complex)
            e[a, b] = 1.0
            cols.append(np.asarray(fn(e), dtype=complex).reshape(-1))
    return np.array(cols).T


def hermitian_rows(lmap: sp.csr_matrix, side: int, rhs: np.ndarray | None = None):
    """Real rows expressing ``L(X) = K`` for a Hermiticity-preserving map.

    Returns ``(coeff, rhs)`` where ``coeff`` is complex and each row ``a``
    encodes the functional ``Re(a · vec X)``: one row per upper-triangle real
    part and one per strict upper-triangle imaginary part.
    """
    iu, ju = np.triu_indices(side)
    re_rows = iu * side + ju
    strict = iu < ju
    im_rows = re_rows[strict]
    coeff = sp.vstack([lmap[re_rows], -1j * lmap[im_rows]], format="csr")
    if rhs is None:
        b = np.zeros(coeff.shape[0])
    else:
        rhs = np.asarray(rhs, dtype=complex)
        b = np.concatenate([rhs[iu, ju].real, rhs[iu[strict], ju[strict]].imag])
    return coeff, b
