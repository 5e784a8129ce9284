"""Encoder/decoder pairs in Choi form and their conversion to channels.

A code for messages of dimension ``M`` through a channel ``N: Ā -> B`` is a
pair ``(E_{AĀ}, D_{BB̄})`` with ``d_A = d_B̄ = M``, both PSD with marginals
``E_A = 1/d_A`` and ``D_B = 1/d_B``.  In terms of channels:

* ``E`` is the transpose of the normalized Choi state of the encoder
  ``A -> Ā`` on layout ``[A, Ā]``;
* ``D`` is ``(d_A/d_B)`` times the Choi state of the adjoint decoder
  ``B̄ -> B`` on layout ``[B, B̄]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .builders import choi_array, objective_operator
from .channels import QuantumChannel, channel_from_dict, channel_to_dict, choi_from_kraus
from .errors import DomainError, ShapeError
from .tensor import HermitianOperator, SystemLayout, permute_array, ptrace_array

PSD_TOL = 1e-8
MARGINAL_TOL = 1e-6


def _check_marginal(mat: np.ndarray, dims: tuple[int, int], traced: int, what: str) -> None:
    keep = dims[1 - traced]
    marg = ptrace_array(mat, dims, [traced])
    err = np.max(np.abs(marg - np.eye(keep) / dims[0]))
    if err > MARGINAL_TOL:
        raise DomainError(f"{what} marginal is off by {err:.2e}")
    if np.linalg.eigvalsh(mat)[0] < -PSD_TOL:
        raise DomainError(f"{what} is not positive semidefinite")


@dataclass(frozen=True, eq=False)
class CodePair:
    """``E`` on ``[A, Ā]`` and ``D`` on ``[B, B̄]``; ``residual`` records how
    far the pair was from the constraints before any projection."""

    E: HermitianOperator
    D: HermitianOperator
    residual: float = 0.0

    def __post_init__(self):
        if len(self.E.layout) != 2 or len(self.D.layout) != 2:
            raise ShapeError("E and D must live on two subsystems each")
        _check_marginal(np.asarray(self.E.entries), self.E.layout.dims, 1, "encoder")
        _check_marginal(np.asarray(self.D.entries), self.D.layout.dims, 1, "decoder")

    @property
    def M(self) -> int:
        return self.E.layout.dims[0]

    def encoder(self) -> QuantumChannel:
        d_a, d_abar = self.E.layout.dims
        choi = np.asarray(self.E.entries).T  # Choi of the encoder on [A, Ā]
        kraus = _kraus(choi, d_a, d_abar, d_a)
        # [A, Ā] rows are (input, output); Kraus operators map A -> Ā
        return QuantumChannel(d_a, d_abar, tuple(k.T for k in kraus), "encoder")

    def decoder(self) -> QuantumChannel:
        d_b, d_bbar = self.D.layout.dims
        adj = np.asarray(self.D.entries) * d_b / self.M  # Choi of D^† on [B, B̄]
        kraus = _kraus(adj, d_b, d_bbar, d_bbar)
        return QuantumChannel(d_b, d_bbar, tuple(k.conj().T for k in kraus), "decoder")


def _kraus(choi: np.ndarray, d0: int, d1: int, d_ref: int, tol: float = 1e-12) -> list[np.ndarray]:
    """Operators ``K`` (``d0 × d1``) with ``choi = Σ vec(K) vec(K)^† / d_ref``."""
    vals, vecs = np.linalg.eigh(choi)
    return [np.sqrt(lam * d_ref) * v.reshape(d0, d1) for lam, v in zip(vals, vecs.T) if lam > tol]


def code_from_channels(encoder: QuantumChannel, decoder: QuantumChannel) -> CodePair:
    """Choi pair of an encoder ``M -> d_in`` and a decoder ``d_out -> M``."""
    M = encoder.dim_in
    if decoder.dim_out != M:
        raise ShapeError(f"decoder outputs dimension {decoder.dim_out}, encoder takes {M}")
    d_abar, d_b = encoder.dim_out, decoder.dim_in
    # encoder Choi on [Ā, A] -> [A, Ā], then transpose
    j_e = permute_array(np.asarray(encoder.choi.entries), [d_abar, M], [1, 0])
    E = HermitianOperator([("A", M), ("Abar", d_abar)], j_e.T)
    adj = choi_from_kraus(decoder.adjoint_kraus(), M)  # on [B, B̄]
    D = HermitianOperator([("B", d_b), ("Bbar", M)], adj * M / d_b)
    return CodePair(E, D)


def trivial_code(d_in: int, d_out: int, M: int) -> CodePair:
    """Identity encoder and decoder (requires ``d_in = d_out = M``)."""
    if not d_in == d_out == M:
        raise DomainError("the trivial code needs d_in = d_out = M")
    ident = QuantumChannel(M, M, (np.eye(M),), "identity")
    return code_from_channels(ident, ident)


def evaluate_code(pair: CodePair, J, M: int | None = None) -> float:
    """``d_Ā d_B Tr[(J ⊗ Φ)(E ⊗ D)]``."""
    M = pair.M if M is None else M
    _, d_b, d_abar = choi_array(J)
    if pair.E.layout.dims != (M, d_abar) or pair.D.layout.dims != (d_b, M):
        raise ShapeError(
            f"code dimensions {pair.E.layout.dims}, {pair.D.layout.dims} do not match channel ({d_abar} -> {d_b}) and M={M}"
        )
    g = objective_operator(J, M)
    w = np.kron(pair.E.entries, pair.D.entries)
    return float(np.real(np.sum(g * w.T)))


def direct_fidelity(encoder: QuantumChannel, channel: QuantumChannel, decoder: QuantumChannel) -> float:
    """``<Φ|((D∘N∘E) ⊗ I)(Φ)|Φ>`` from the Kraus operators."""
    M = encoder.dim_in
    total = 0.0
    for d in decoder.kraus:
        for n in channel.kraus:
            for e in encoder.kraus:
                total += abs(np.trace(d @ n @ e)) ** 2
    return float(total / M**2)


@dataclass(frozen=True, eq=False)
class InstrumentCode:
    """One-way assisted code: encoder instrument ``{E^i}`` with
    ``Σ_i E^i_A = 1/d_A`` and one decoder ``D^i`` per outcome."""

    E: tuple[HermitianOperator, ...]
    D: tuple[HermitianOperator, ...]

    def __post_init__(self):
        if len(self.E) != len(self.D) or not self.E:
            raise ShapeError("need one decoder per instrument outcome")
        dims = self.E[0].layout.dims
        total = sum(np.asarray(e.entries) for e in self.E)
        _check_marginal(total, dims, 1, "encoder instrument")
        for e in self.E:
            if np.linalg.eigvalsh(e.entries)[0] < -PSD_TOL:
                raise DomainError("instrument element is not positive semidefinite")
        for d in self.D:
            _check_marginal(np.asarray(d.entries), d.layout.dims, 1, "decoder")

    @property
    def M(self) -> int:
        return self.E[0].layout.dims[0]

    @classmethod
    def from_pair(cls, pair: CodePair, arity: int = 1) -> "InstrumentCode":
        """A plain code as an instrument (all weight on the first outcome)."""
        zero = HermitianOperator(pair.E.layout, np.zeros_like(pair.E.entries))
        return cls((pair.E,) + (zero,) * (arity - 1), (pair.D,) * arity)


def evaluate_instrument_code(code: InstrumentCode, J, M: int | None = None) -> float:
    M = code.M if M is None else M
    g = objective_operator(J, M)
    return float(sum(np.real(np.sum(g * np.kron(e.entries, d.entries).T)) for e, d in zip(code.E, code.D)))


# ---------------------------------------------------------------------------
# JSON


def code_to_dict(pair: CodePair) -> dict:
    return {"M": pair.M, "encoder": channel_to_dict(pair.encoder()), "decoder": channel_to_dict(pair.decoder())}


def code_from_dict(data: dict) -> CodePair:
    return code_from_channels(channel_from_dict(data["encoder"]), channel_from_dict(data["decoder"]))


def code_to_json(pair: CodePair) -> str:
    return json.dumps(code_to_dict(pair))


def layout_pair(M: int, d_in: int, d_out: int) -> tuple[SystemLayout, SystemLayout]:
    return SystemLayout([("A", M), ("Abar", d_in)]), SystemLayout([("B", d_out), ("Bbar", M)])
