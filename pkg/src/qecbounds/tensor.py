"""Multi-subsystem linear algebra on dense Hermitian operators.

Operators are stored as dense complex matrices over an ordered list of
labelled subsystems.  The first subsystem is the most significant tensor
factor, so ``X ⊗ Y`` on layout ``[x, y]`` is ``np.kron(X, Y)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import LabelError, ShapeError

HERMITICITY_TOL = 1e-8


@dataclass(frozen=True)
class SystemLayout:
    """Ordered labelled subsystems with their dimensions."""

    subsystems: tuple[tuple[str, int], ...]

    def __init__(self, subsystems: Iterable[tuple[str, int]]):
        subs = tuple((str(label), int(dim)) for label, dim in subsystems)
        labels = [label for label, _ in subs]
        if len(set(labels)) != len(labels):
            raise LabelError(f"duplicate labels in layout: {labels}")
        for label, dim in subs:
            if dim < 1:
                raise ShapeError(f"subsystem {label!r} has dimension {dim}")
        object.__setattr__(self, "subsystems", subs)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.subsystems)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.subsystems else 1

    def __len__(self) -> int:
        return len(self.subsystems)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LabelError(f"unknown label {label!r}; layout has {self.labels}") from None

    def indices(self, labels: Iterable[str]) -> list[int]:
        return [self.index(label) for label in labels]

    def dim(self, label: str) -> int:
        return self.dims[self.index(label)]

    def select(self, labels: Iterable[str]) -> "SystemLayout":
        """Sub-layout with the given labels, kept in layout order."""
        keep = set(self.indices(labels))
        return SystemLayout(s for i, s in enumerate(self.subsystems) if i in keep)

    def without(self, labels: Iterable[str]) -> "SystemLayout":
        drop = set(self.indices(labels))
        return SystemLayout(s for i, s in enumerate(self.subsystems) if i not in drop)

    def __add__(self, other: "SystemLayout") -> "SystemLayout":
        return SystemLayout(self.subsystems + other.subsystems)


class HermitianOperator:
    """Dense Hermitian matrix over a :class:`SystemLayout`.

    The constructor symmetrizes its input and rejects matrices whose
    anti-Hermitian part exceeds ``1e-8`` in max-entry norm.  The stored
    matrix is read-only.
    """

    __slots__ = ("layout", "_entries")

    def __init__(self, layout: SystemLayout | Sequence[tuple[str, int]], entries, *, check: bool = True):
        if not isinstance(layout, SystemLayout):
            layout = SystemLayout(layout)
        mat = np.array(entries, dtype=complex)
        side = layout.total_dim
        if mat.shape != (side, side):
            raise ShapeError(f"matrix of shape {mat.shape} does not fit layout of side {side}")
        if check:
            skew = np.max(np.abs(mat - mat.conj().T), initial=0.0)
            if skew > HERMITICITY_TOL:
                raise ValueError(f"matrix is not Hermitian (anti-Hermitian part {skew:.3e})")
        mat = 0.5 * (mat + mat.conj().T)
        mat.setflags(write=False)
        self.layout = layout
        self._entries = mat

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def side(self) -> int:
        return self._entries.shape[0]

    def trace(self) -> float:
        return float(np.trace(self._entries).real)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self._entries)

    def relabel(self, layout: SystemLayout | Sequence[tuple[str, int]]) -> "HermitianOperator":
        if not isinstance(layout, SystemLayout):
            layout = SystemLayout(layout)
        if layout.dims != self.layout.dims:
            raise ShapeError("relabel must keep the subsystem dimensions")
        return HermitianOperator(layout, self._entries, check=False)

    def kron(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(self.layout + other.layout, np.kron(self._entries, other._entries), check=False)

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        _same_layout(self, other)
        return HermitianOperator(self.layout, self._entries + other._entries, check=False)

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        _same_layout(self, other)
        return HermitianOperator(self.layout, self._entries - other._entries, check=False)

    def __mul__(self, scalar: float) -> "HermitianOperator":
        if np.iscomplexobj(scalar) and np.imag(scalar) != 0:
            raise TypeError("Hermitian operators may only be scaled by real numbers")
        return HermitianOperator(self.layout, self._entries * float(np.real(scalar)), check=False)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        subs = ", ".join(f"{label}:{dim}" for label, dim in self.layout.subsystems)
        return f"HermitianOperator([{subs}], side={self.side})"


def _same_layout(a: HermitianOperator, b: HermitianOperator) -> None:
    if a.layout.dims != b.layout.dims:
        raise ShapeError(f"layouts differ: {a.layout.subsystems} vs {b.layout.subsystems}")


# ---------------------------------------------------------------------------
# array-level kernels (shared with the program builder)


def ptrace_array(mat: np.ndarray, dims: Sequence[int], traced: Iterable[int]) -> np.ndarray:
    """Partial trace of ``mat`` over the subsystem indices in ``traced``."""
    dims = list(dims)
    k = len(dims)
    traced = sorted(set(traced))
    keep = [i for i in range(k) if i not in traced]
    t = np.asarray(mat).reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * k > len(letters):
        raise ShapeError("too many subsystems")
    rows = [letters[i] for i in range(k)]
    cols = [letters[k + i] if i in keep else letters[i] for i in range(k)]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    res = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    side = int(np.prod([dims[i] for i in keep], dtype=np.int64))
    return res.reshape(side, side)


def ptranspose_array(mat: np.ndarray, dims: Sequence[int], systems: Iterable[int]) -> np.ndarray:
    dims = list(dims)
    k = len(dims)
    axes = list(range(2 * k))
    for i in set(systems):
        axes[i], axes[k + i] = axes[k + i], axes[i]
    side = int(np.prod(dims, dtype=np.int64))
    return np.asarray(mat).reshape(dims + dims).transpose(axes).reshape(side, side)


def permute_array(mat: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: new factor ``i`` is old factor ``order[i]``."""
    dims = list(dims)
    k = len(dims)
    order = list(order)
    if sorted(order) != list(range(k)):
        raise ShapeError(f"{order} is not a permutation of {k} subsystems")
    side = int(np.prod(dims, dtype=np.int64))
    axes = order + [k + i for i in order]
    return np.asarray(mat).reshape(dims + dims).transpose(axes).reshape(side, side)


# ---------------------------------------------------------------------------
# public operations


def max_entangled(d: int, labels: tuple[str, str] = ("A", "R")) -> HermitianOperator:
    """Maximally entangled state ``Φ_d`` on ``labels`` (trace one)."""
    if d < 1:
        raise ShapeError("dimension must be positive")
    vec = np.zeros(d * d)
    vec[:: d + 1] = 1.0 / np.sqrt(d)
    return HermitianOperator([(labels[0], d), (labels[1], d)], np.outer(vec, vec), check=False)


def identity(layout: SystemLayout | Sequence[tuple[str, int]]) -> HermitianOperator:
    if not isinstance(layout, SystemLayout):
        layout = SystemLayout(layout)
    return HermitianOperator(layout, np.eye(layout.total_dim), check=False)


def partial_trace(op: HermitianOperator, subset: Iterable[str]) -> HermitianOperator:
    subset = list(subset)
    idx = op.layout.indices(subset)
    out = ptrace_array(op.entries, op.layout.dims, idx)
    return HermitianOperator(op.layout.without(subset), out, check=False)


def partial_transpose(op: HermitianOperator, subset: Iterable[str]) -> HermitianOperator:
    idx = op.layout.indices(subset)
    out = ptranspose_array(op.entries, op.layout.dims, idx)
    return HermitianOperator(op.layout, out, check=False)


def permute_subsystems(
    op: HermitianOperator,
    perm: Sequence[int],
    blocks: Sequence[Sequence[str]] | None = None,
) -> HermitianOperator:
    """Permute tensor factors.

    Without ``blocks``, ``perm`` reorders the individual subsystems and the
    layout is reordered with them (``perm[i]`` is the old index that lands at
    position ``i``).  With ``blocks`` (groups of labels of identical shape),
    ``perm`` permutes block contents: block ``i`` receives the content of
    block ``perm[i]`` and the layout stays fixed, i.e. the operator is
    conjugated by the permutation unitary.
    """
    layout = op.layout
    if blocks is None:
        order = list(perm)
        out = permute_array(op.entries, layout.dims, order)
        new_layout = SystemLayout(layout.subsystems[i] for i in order)
        return HermitianOperator(new_layout, out, check=False)

    groups = [layout.indices(b) for b in blocks]
    shapes = {tuple(layout.dims[i] for i in g) for g in groups}
    if len(shapes) != 1:
        raise ShapeError("permuted blocks must have identical shapes")
    perm = list(perm)
    if sorted(perm) != list(range(len(groups))):
        raise ShapeError(f"{perm} is not a permutation of {len(groups)} blocks")
    order = list(range(len(layout)))
    for i, src in enumerate(perm):
        for pos, old in zip(groups[i], groups[src]):
            order[pos] = old
    out = permute_array(op.entries, layout.dims, order)
    return HermitianOperator(layout, out, check=False)


def trace_norm(op: HermitianOperator | np.ndarray) -> float:
    mat = op.entries if isinstance(op, HermitianOperator) else np.asarray(op)
    return float(np.sum(np.abs(np.linalg.eigvalsh(mat))))


def overlap(a: HermitianOperator, b: HermitianOperator) -> float:
    """Hilbert-Schmidt inner product ``Tr[a b]`` (real for Hermitian inputs)."""
    _same_layout(a, b)
    return float(np.real(np.sum(a.entries * b.entries.T)))
