"""Solver-independent conic IR.

A :class:`ConicProgram` optimizes a real-linear functional over matrix (or
nonnegative vector) variables subject to affine equalities.  Every functional
is stored as complex sparse coefficients ``a`` acting as ``Re(a · vec(X))``
with row-major ``vec``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .errors import ShapeError

KINDS = ("hermitian-psd", "symmetric-psd", "nonneg")


@dataclass(frozen=True)
class Twirl:
    """Invariance under ``⊗_t U^{(c_t)}`` on the factors ``positions`` of the
    variable's layout, for all unitaries ``U``; ``conj[t]`` selects ``Ū``."""

    positions: tuple[int, ...]
    conj: tuple[bool, ...]


@dataclass(frozen=True)
class Variable:
    name: str
    side: int
    kind: str = "hermitian-psd"
    dims: tuple[int, ...] | None = None
    labels: tuple[str, ...] | None = None
    twirl: Twirl | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.dims is not None and int(np.prod(self.dims)) != self.side:
            raise ShapeError(f"dims {self.dims} do not multiply to side {self.side}")

    @property
    def size(self) -> int:
        """Length of the coefficient vectors acting on this variable."""
        return self.side if self.kind == "nonneg" else self.side * self.side


@dataclass(frozen=True)
class LinearForm:
    coeffs: Mapping[str, sp.csr_matrix]
    constant: float = 0.0


@dataclass(frozen=True)
class ConstraintBlock:
    """Rows ``Σ_v Re(coeffs[v] @ vec(v)) = rhs``.

    ``defines`` names an auxiliary variable that the block pins down entry by
    entry in terms of the others (used for partial-transpose cones).
    """

    tag: str
    coeffs: Mapping[str, sp.csr_matrix]
    rhs: np.ndarray
    defines: str | None = None

    @property
    def rows(self) -> int:
        return int(self.rhs.shape[0])


@dataclass(frozen=True)
class ConicProgram:
    variables: tuple[Variable, ...]
    objective: LinearForm
    constraints: tuple[ConstraintBlock, ...]
    sense: str = "max"
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names")
        known = {v.name: v for v in self.variables}
        for part in [self.objective.coeffs, *(c.coeffs for c in self.constraints)]:
            for name, mat in part.items():
                if name not in known:
                    raise KeyError(f"functional references undeclared variable {name!r}")
                if mat.shape[1] != known[name].size:
                    raise ShapeError(f"coefficients for {name!r} have {mat.shape[1]} columns, expected {known[name].size}")
        for c in self.constraints:
            for mat in c.coeffs.values():
                if mat.shape[0] != c.rows:
                    raise ShapeError(f"block {c.tag!r}: coefficient rows do not match rhs")
        if self.sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    @property
    def tags(self) -> set[str]:
        return {c.tag for c in self.constraints}

    def with_objective(self, objective: LinearForm, sense: str | None = None) -> "ConicProgram":
        return replace(self, objective=objective, sense=sense or self.sense)

    def with_constraints(self, extra, variables=()) -> "ConicProgram":
        return replace(self, variables=self.variables + tuple(variables), constraints=self.constraints + tuple(extra))

    # -- evaluation -------------------------------------------------------

    def evaluate(self, values: Mapping[str, np.ndarray]) -> float:
        total = self.objective.constant
        for name, a in self.objective.coeffs.items():
            total += float(np.real(a @ _flat(values[name])).sum())
        return total

    def residuals(self, values: Mapping[str, np.ndarray]) -> dict[str, float]:
        """Largest equality violation per constraint tag."""
        out: dict[str, float] = {}
        for c in self.constraints:
            lhs = np.zeros(c.rows)
            for name, a in c.coeffs.items():
                lhs += np.real(a @ _flat(values[name]))
            err = float(np.max(np.abs(lhs - c.rhs), initial=0.0))
            out[c.tag] = max(out.get(c.tag, 0.0), err)
        return out

    def is_real(self) -> bool:
        """True if conjugating every variable maps feasible points to feasible
        points with the same objective value."""
        for a in self.objective.coeffs.values():
            if a.nnz and np.max(np.abs(a.data.imag)) > 0:
                return False
        for c in self.constraints:
            stacked = sp.hstack(list(c.coeffs.values()), format="csr")
            re_part = abs(stacked.real).sum(axis=1).A1
            im_part = abs(stacked.imag).sum(axis=1).A1
            mixed = (re_part > 0) & (im_part > 0)
            if mixed.any():
                return False
            if np.any(np.abs(c.rhs[im_part > 0]) > 0):
                return False
        return True

    # -- JSON IR ----------------------------------------------------------

    def to_json(self) -> str:
        def triplets(m: sp.csr_matrix):
            coo = m.tocoo()
            return [[int(r), int(c), float(v.real), float(v.imag)] for r, c, v in zip(coo.row, coo.col, coo.data)]

        data = {
            "sense": self.sense,
            "metadata": _jsonable(dict(self.metadata)),
            "variables": [
                {
                    "name": v.name,
                    "side": v.side,
                    "kind": v.kind,
                    "dims": list(v.dims) if v.dims else None,
                    "labels": list(v.labels) if v.labels else None,
                    "twirl": None if v.twirl is None else {"positions": list(v.twirl.positions), "conj": list(v.twirl.conj)},
                }
                for v in self.variables
            ],
            "objective": {
                "constant": self.objective.constant,
                "coeffs": {k: triplets(m) for k, m in self.objective.coeffs.items()},
            },
            "constraints": [
                {
                    "tag": c.tag,
                    "defines": c.defines,
                    "rhs": [float(x) for x in c.rhs],
                    "coeffs": {k: triplets(m) for k, m in c.coeffs.items()},
                }
                for c in self.constraints
            ],
        }
        return json.dumps(data)

    @classmethod
    def from_json(cls, text: str) -> "ConicProgram":
        data = json.loads(text)
        variables = []
        for v in data["variables"]:
            tw = v.get("twirl")
            variables.append(
                Variable(
                    v["name"],
                    int(v["side"]),
                    v["kind"],
                    tuple(v["dims"]) if v.get("dims") else None,
                    tuple(v["labels"]) if v.get("labels") else None,
                    Twirl(tuple(tw["positions"]), tuple(tw["conj"])) if tw else None,
                )
            )
        size = {v.name: v.size for v in variables}

        def mat(trip, rows, name):
            t = np.array(trip, dtype=float).reshape(-1, 4)
            return sp.csr_matrix(
                (t[:, 2] + 1j * t[:, 3], (t[:, 0].astype(int), t[:, 1].astype(int))), shape=(rows, size[name])
            )

        obj = data["objective"]
        objective = LinearForm({k: mat(t, 1, k) for k, t in obj["coeffs"].items()}, float(obj["constant"]))
        blocks = []
        for c in data["constraints"]:
            rhs = np.array(c["rhs"], dtype=float)
            blocks.append(
                ConstraintBlock(c["tag"], {k: mat(t, rhs.size, k) for k, t in c["coeffs"].items()}, rhs, c.get("defines"))
            )
        return cls(tuple(variables), objective, tuple(blocks), data.get("sense", "max"), data.get("metadata", {}))


def _flat(x) -> np.ndarray:
    x = getattr(x, "entries", x)
    return np.asarray(x).reshape(-1)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    return str(obj)


def structurally_equal(p: ConicProgram, q: ConicProgram, tol: float = 1e-12) -> bool:
    """Same variables (name, side, kind), objective and constraint rows, block by block."""
    if [(v.name, v.side, v.kind) for v in p.variables] != [(v.name, v.side, v.kind) for v in q.variables]:
        return False
    if p.sense != q.sense or abs(p.objective.constant - q.objective.constant) > tol:
        return False

    def close(a: Mapping[str, sp.csr_matrix], b: Mapping[str, sp.csr_matrix]) -> bool:
        if set(a) != set(b):
            return False
        for k in a:
            if a[k].shape != b[k].shape:
                return False
            diff = a[k] - b[k]
            if diff.nnz and np.max(np.abs(diff.data)) > tol:
                return False
        return True

    if not close(p.objective.coeffs, q.objective.coeffs):
        return False
    if len(p.constraints) != len(q.constraints):
        return False
    for a, b in zip(p.constraints, q.constraints):
        if a.tag != b.tag or a.defines != b.defines or a.rhs.shape != b.rhs.shape:
            return False
        if np.max(np.abs(a.rhs - b.rhs), initial=0.0) > tol or not close(a.coeffs, b.coeffs):
            return False
    return True
