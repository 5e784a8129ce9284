"""Measurements with bounded distortion and the resulting de Finetti bounds.

A state two-design ``{P_z}`` on ``B`` gives the measurement
``X -> Σ_z (d/t) Tr[P_z X] |z><z|``.  Applied to ``B`` while ``A`` is left
alone it shrinks the trace norm of any Hermitian ``ξ_AB`` by at most a
factor ``d²(d+1)``, whatever the size of ``A``.  That factor feeds the
convergence bounds evaluated here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, DegenerateInput, DomainError, ShapeError
from .tensor import HermitianOperator, SystemLayout, trace_norm

DESIGN_TOL = 1e-10
EFFECT_TOL = 1e-12
DEGENERATE_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class Measurement:
    """POVM on a ``dim``-dimensional system.  ``effects[z]`` is the effect of
    outcome ``z``."""

    dim: int
    effects: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.effects:
            raise ShapeError("a measurement needs at least one effect")
        for e in self.effects:
            if e.shape != (self.dim, self.dim):
                raise ShapeError(f"effect of shape {e.shape} on a {self.dim}-dimensional system")
            if np.linalg.eigvalsh(e)[0] < -EFFECT_TOL:
                raise ConstructionError("effect is not positive semidefinite")
        err = np.max(np.abs(sum(self.effects) - np.eye(self.dim)))
        if err > DESIGN_TOL:
            raise ConstructionError(f"effects sum to identity only up to {err:.2e}")

    @property
    def outcome_count(self) -> int:
        return len(self.effects)

    def probabilities(self, rho) -> np.ndarray:
        mat = rho.entries if isinstance(rho, HermitianOperator) else np.asarray(rho)
        return np.array([np.real(np.sum(e * mat.T)) for e in self.effects])


@dataclass(frozen=True)
class DistortionBound:
    """Bounds on the distortion with side information and for product
    measurements."""

    f_side_info: float
    f_product: float

    def __post_init__(self):
        if not (self.f_side_info > 0 and self.f_product > 0):
            raise DomainError("distortion bounds must be positive")

    @classmethod
    def for_dims(cls, d_A: int, d_B: int) -> "DistortionBound":
        if d_A < 1 or d_B < 1:
            raise DomainError("dimensions must be positive")
        return cls(float(d_B * d_B * (d_B + 1)), 18.0 * math.sqrt(d_A * d_B))

    @property
    def best(self) -> float:
        return min(self.f_side_info, self.f_product)


def _design_states(d: int) -> list[np.ndarray]:
    if d == 2:
        s = 1 / math.sqrt(2)
        return [
            np.array([1, 0]),
            np.array([0, 1]),
            np.array([s, s]),
            np.array([s, -s]),
            np.array([s, 1j * s]),
            np.array([s, -1j * s]),
        ]
    # complete set of mutually unbiased bases in dimension 3
    w = np.exp(2j * np.pi / 3)
    states = [np.eye(3)[k] for k in range(3)]
    for a in range(3):
        for b in range(3):
            states.append(np.array([w ** (a * j * j + b * j) for j in range(3)]) / math.sqrt(3))
    return states


def sym_projector(d: int) -> np.ndarray:
    swap = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            swap[i * d + j, j * d + i] = 1.0
    return (np.eye(d * d) + swap) / 2


def two_design_residual(projectors, d: int) -> float:
    t = len(projectors)
    lhs = sum(np.kron(p, p) for p in projectors) / t
    return float(np.max(np.abs(lhs - 2 * sym_projector(d) / (d * (d + 1)))))


def two_design_measurement(d: int) -> Measurement:
    """Stabilizer states for ``d = 2`` (6 outcomes), the four mutually
    unbiased bases for ``d = 3`` (12 outcomes)."""
    if d not in (2, 3):
        raise DomainError(f"two-design measurement is available for d in {{2, 3}}, got {d}")
    projectors = [np.outer(v, v.conj()) for v in _design_states(d)]
    err = two_design_residual(projectors, d)
    if err > DESIGN_TOL:
        raise ConstructionError(f"two-design identity fails by {err:.2e}")
    t = len(projectors)
    return Measurement(d, tuple(d / t * p for p in projectors))


def _split(xi: HermitianOperator, d_b: int, label: str | None) -> tuple[np.ndarray, SystemLayout, int]:
    """Matrix reordered to ``A ⊗ B`` with ``B`` last, the layout of ``A`` and ``d_A``."""
    layout = xi.layout
    if label is None:
        label = "B" if "B" in layout.labels else layout.labels[-1]
    b = layout.index(label)
    if layout.dims[b] != d_b:
        raise ShapeError(f"subsystem {label!r} has dimension {layout.dims[b]}, measurement acts on {d_b}")
    rest = [i for i in range(len(layout)) if i != b]
    dims = list(layout.dims)
    mat = np.asarray(xi.entries)
    if b != len(layout) - 1:
        k = len(dims)
        t = mat.reshape(dims + dims)
        order = rest + [b]
        t = t.transpose(order + [k + i for i in order])
        mat = t.reshape(xi.side, xi.side)
    a_layout = SystemLayout([layout.subsystems[i] for i in rest]) if rest else SystemLayout([])
    d_a = xi.side // d_b
    return mat, a_layout, d_a


def measure_side_B(m: Measurement, xi: HermitianOperator, label: str | None = None) -> HermitianOperator:
    """Apply the measurement to subsystem ``label`` (default ``"B"`` if present,
    else the last one).

    The result lives on ``[Z, A...]`` with ``Z`` the outcome register, so it
    is block diagonal with blocks ``Tr_B[(1 ⊗ M_z) ξ]``.
    """
    mat, a_layout, d_a = _split(xi, m.dim, label)
    t4 = mat.reshape(d_a, m.dim, d_a, m.dim)
    t = m.outcome_count
    out = np.zeros((t * d_a, t * d_a), dtype=complex)
    for z, e in enumerate(m.effects):
        out[z * d_a:(z + 1) * d_a, z * d_a:(z + 1) * d_a] = np.einsum("iajb,ba->ij", t4, e)
    return HermitianOperator(SystemLayout([("Z", t)] + list(a_layout.subsystems)), out, check=False)


def distortion_ratio(xi: HermitianOperator, m: Measurement, label: str | None = None) -> float:
    """``‖ξ‖₁ / ‖(I ⊗ M)(ξ)‖₁``."""
    measured = measure_side_B(m, xi, label)
    t, d_a = m.outcome_count, measured.side // m.outcome_count
    mat = measured.entries
    denom = sum(trace_norm(mat[z * d_a:(z + 1) * d_a, z * d_a:(z + 1) * d_a]) for z in range(t))
    if denom < DEGENERATE_TOL:
        raise DegenerateInput(f"measured trace norm {denom:.2e} is too small for a meaningful ratio")
    return trace_norm(xi) / denom


def definetti_bound(k: int, n: int, d_A: int, d_B: int, f: float) -> float:
    """``k f sqrt(2 ln2 (log d_A + (k-1) log d_B) / (n-k+1))``, logs base 2."""
    if not 0 < k < n:
        raise DomainError(f"need 0 < k < n, got k={k}, n={n}")
    if d_A < 1 or d_B < 1:
        raise DomainError("dimensions must be positive")
    if not f > 0:
        raise DomainError("distortion constant must be positive")
    info = math.log2(d_A) + (k - 1) * math.log2(d_B)
    return k * f * math.sqrt(2 * math.log(2) * info / (n - k + 1))


def single_marginal_bound(k: int, d_A: int, f: float) -> float:
    """``f sqrt(2 ln2 log d_A / k)`` for the ``A B`` marginal of a
    ``k``-extendible state."""
    if k < 1 or d_A < 1:
        raise DomainError("need k >= 1 and d_A >= 1")
    if not f > 0:
        raise DomainError("distortion constant must be positive")
    return f * math.sqrt(2 * math.log(2) * math.log2(d_A) / k)
