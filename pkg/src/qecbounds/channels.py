"""Quantum channels given by Kraus operators, with the channel zoo used for
the numerical experiments and a small JSON interchange format.

The Choi state of ``N: X -> Y`` is ``(N ⊗ I)(Φ)`` on layout ``[out, in]``,
normalized to trace one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from .errors import DomainError, ResourceError, ShapeError
from .tensor import HermitianOperator, SystemLayout, max_entangled

TP_TOL = 1e-10
JSON_TP_TOL = 1e-8
DEFAULT_DIM_CAP = 1024

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def choi_from_kraus(kraus: Sequence[np.ndarray], dim_in: int) -> np.ndarray:
    """Normalized Choi matrix ``Σ_k (K_k ⊗ 1) Φ (K_k ⊗ 1)^†`` as a raw array."""
    phi = np.eye(dim_in, dtype=complex).reshape(-1) / np.sqrt(dim_in)
    out = 0
    for k in kraus:
        v = np.kron(k, np.eye(dim_in)) @ phi
        out = out + np.outer(v, v.conj())
    return np.asarray(out)


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """CPTP map ``dim_in -> dim_out`` with a cached normalized Choi state."""

    dim_in: int
    dim_out: int
    kraus: tuple[np.ndarray, ...]
    name: str = "channel"
    choi: HermitianOperator = field(init=False, repr=False)

    def __post_init__(self):
        ks = []
        for k in self.kraus:
            k = np.array(k, dtype=complex)
            if k.shape != (self.dim_out, self.dim_in):
                raise ShapeError(f"Kraus operator of shape {k.shape}, expected {(self.dim_out, self.dim_in)}")
            k.setflags(write=False)
            ks.append(k)
        if not ks:
            raise DomainError("a channel needs at least one Kraus operator")
        object.__setattr__(self, "kraus", tuple(ks))
        gram = sum(k.conj().T @ k for k in ks)
        err = np.max(np.abs(gram - np.eye(self.dim_in)))
        if err > TP_TOL:
            raise DomainError(f"Kraus operators are not trace preserving (error {err:.2e})")
        layout = SystemLayout([("out", self.dim_out), ("in", self.dim_in)])
        object.__setattr__(self, "choi", HermitianOperator(layout, choi_from_kraus(ks, self.dim_in)))

    def __call__(self, rho):
        return apply(self, rho)

    def adjoint_kraus(self) -> tuple[np.ndarray, ...]:
        return tuple(k.conj().T for k in self.kraus)


def _channel(kraus, name: str) -> QuantumChannel:
    k0 = np.asarray(kraus[0])
    return QuantumChannel(k0.shape[1], k0.shape[0], tuple(kraus), name)


def _kraus_from_choi(choi: np.ndarray, dim_in: int, dim_out: int, tol: float = 1e-13) -> list[np.ndarray]:
    """Kraus operators from a normalized Choi matrix on ``[out, in]``."""
    vals, vecs = np.linalg.eigh(choi)
    kraus = []
    for lam, v in zip(vals, vecs.T):
        if lam > tol:
            kraus.append(np.sqrt(lam * dim_in) * v.reshape(dim_out, dim_in))
    return kraus


# ---------------------------------------------------------------------------
# zoo


def identity_channel(d: int) -> QuantumChannel:
    return _channel([np.eye(d)], f"identity:{d}")


def depolarizing(d: int, p: float) -> QuantumChannel:
    """``ρ -> p Tr[ρ] 1/d + (1-p) ρ`` for ``p ∈ [0, d²/(d²-1)]``."""
    if d < 2:
        raise DomainError("depolarizing channel needs d >= 2")
    pmax = d * d / (d * d - 1)
    if not (0.0 <= p <= pmax + 1e-12):
        raise DomainError(f"p={p} outside the CP range [0, {pmax:.6g}]")
    p = min(float(p), pmax)
    choi = p * np.eye(d * d) / d**2 + (1 - p) * max_entangled(d).entries
    choi = 0.5 * (choi + choi.conj().T)
    kraus = _kraus_from_choi(choi, d, d)
    return _channel(kraus, f"dep:{d}:{p:g}")


def amplitude_damping(gamma: float) -> QuantumChannel:
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma={gamma} outside [0, 1]")
    e0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    e1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return _channel([e0, e1], f"ampdamp:{gamma:g}")


_FLIPS = {"bit": "X", "phase": "Z", "bit-phase": "Y"}


def pauli_flip(kind: str, p: float) -> QuantumChannel:
    """Kraus ``{√(1-p) I, √p σ}`` with σ = X, Z, Y for bit, phase, bit-phase."""
    if kind not in _FLIPS:
        raise DomainError(f"unknown flip kind {kind!r}; expected one of {sorted(_FLIPS)}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p={p} outside [0, 1]")
    sigma = PAULI[_FLIPS[kind]]
    return _channel([np.sqrt(1 - p) * PAULI["I"], np.sqrt(p) * sigma], f"{kind}flip:{p:g}")


def bit_flip(p: float) -> QuantumChannel:
    return pauli_flip("bit", p)


def werner_holevo(d: int, lam: float | None = None) -> QuantumChannel:
    """``ρ -> (Tr[ρ] 1 - ρ^T)/(d-1)``; with ``lam`` the mixture
    ``lam·id + (1-lam)·WH`` (the generalized variant)."""
    if d < 2:
        raise DomainError("Werner-Holevo channel needs d >= 2")
    # Kraus operators (|i><j| - |j><i|)/sqrt(d-1), i < j
    kraus = []
    for i in range(d):
        for j in range(i + 1, d):
            k = np.zeros((d, d), dtype=complex)
            k[i, j], k[j, i] = 1.0, -1.0
            kraus.append(k / np.sqrt(d - 1))
    if lam is None:
        return _channel(kraus, f"wh:{d}")
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda={lam} outside [0, 1]")
    kraus = [np.sqrt(lam) * np.eye(d)] + [np.sqrt(1 - lam) * k for k in kraus]
    return _channel(kraus, f"gwh:{d}:{lam:g}")


def random_channel(dim_in: int, dim_out: int, kraus_count: int, seed: int) -> QuantumChannel:
    """Haar-random isometry ``dim_in -> dim_out·kraus_count`` cut into Kraus operators."""
    if kraus_count < 1:
        raise DomainError("kraus_count must be >= 1")
    big = dim_out * kraus_count
    if big < dim_in:
        raise DomainError("dim_out * kraus_count must be at least dim_in")
    rng = np.random.default_rng(seed)
    u = unitary_group.rvs(big, random_state=rng) if big > 1 else np.ones((1, 1), dtype=complex)
    iso = u[:, :dim_in]
    kraus = [iso[k * dim_out:(k + 1) * dim_out, :] for k in range(kraus_count)]
    return _channel(kraus, f"random:{dim_in}:{dim_out}:{kraus_count}:{seed}")


def tensor_power(ch: QuantumChannel, k: int, dim_cap: int = DEFAULT_DIM_CAP) -> QuantumChannel:
    if k < 1:
        raise DomainError("k must be >= 1")
    if k == 1:
        return ch
    if max(ch.dim_in, ch.dim_out) ** k > dim_cap:
        raise ResourceError(f"tensor power dimension exceeds the cap {dim_cap}")
    kraus = list(ch.kraus)
    for _ in range(k - 1):
        kraus = [np.kron(a, b) for a in kraus for b in ch.kraus]
    return QuantumChannel(ch.dim_in**k, ch.dim_out**k, tuple(kraus), f"({ch.name})^{k}")


def apply(ch: QuantumChannel, rho: HermitianOperator | np.ndarray, spectator: int = 1):
    """``Σ_k K ρ K^†``.  ``spectator`` > 1 acts as ``N ⊗ id`` on a trailing
    system of that dimension."""
    mat = rho.entries if isinstance(rho, HermitianOperator) else np.asarray(rho)
    if mat.shape != (ch.dim_in * spectator,) * 2:
        raise ShapeError(f"state of side {mat.shape[0]} does not match channel input {ch.dim_in}x{spectator}")
    eye = np.eye(spectator)
    out = sum((kk := np.kron(k, eye)) @ mat @ kk.conj().T for k in ch.kraus)
    if isinstance(rho, HermitianOperator):
        if spectator == 1:
            layout = SystemLayout([(rho.layout.labels[0] if len(rho.layout) == 1 else "out", ch.dim_out)])
        else:
            layout = SystemLayout([("out", ch.dim_out), (rho.layout.labels[-1], spectator)])
        return HermitianOperator(layout, out, check=False)
    return out


# ---------------------------------------------------------------------------
# JSON interchange


def channel_to_dict(ch: QuantumChannel) -> dict:
    return {
        "name": ch.name,
        "dim_in": ch.dim_in,
        "dim_out": ch.dim_out,
        "kraus": [[[[float(z.real), float(z.imag)] for z in row] for row in k] for k in ch.kraus],
    }


def channel_from_dict(data: dict) -> QuantumChannel:
    try:
        din, dout = int(data["dim_in"]), int(data["dim_out"])
        kraus = [np.array([[complex(re, im) for re, im in row] for row in k]) for k in data["kraus"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed channel JSON: {exc}") from exc
    for k in kraus:
        if k.shape != (dout, din):
            raise ShapeError(f"Kraus operator of shape {k.shape}, expected {(dout, din)}")
    gram = sum(k.conj().T @ k for k in kraus)
    err = np.max(np.abs(gram - np.eye(din)))
    if err > JSON_TP_TOL:
        raise DomainError(f"channel in JSON is not trace preserving (error {err:.2e})")
    # re-orthonormalize tiny round-off so the stricter constructor check passes
    if err > TP_TOL:
        w, v = np.linalg.eigh(gram)
        fix = v @ np.diag(w**-0.5) @ v.conj().T
        kraus = [k @ fix for k in kraus]
    return QuantumChannel(din, dout, tuple(kraus), str(data.get("name", "channel")))


def save_channel(ch: QuantumChannel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(channel_to_dict(ch), indent=1))


def load_channel(path: str | Path) -> QuantumChannel:
    return channel_from_dict(json.loads(Path(path).read_text()))
