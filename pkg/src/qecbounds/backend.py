"""Solve :class:`ConicProgram` instances with cvxopt.

The presolve works entirely in a real parameter space:

* every variable is parametrized by real numbers (its real and imaginary
  parts, only the real ones for real programs, or the entries of the smaller
  blocks when the variable carries a twirl symmetry);
* constraint blocks that define an auxiliary variable are substituted away;
* the remaining equalities are eliminated through their null space, so the
  conic program handed to cvxopt has no equality constraints at all.

The Newton systems are then dense and small, and are solved by a numpy
routine plugged into cvxopt as its KKT solver.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import SolverError
from .program import ConicProgram, ConstraintBlock, LinearForm, Variable
from .symmetry import block_lift, decompose
from .tensor import HermitianOperator, SystemLayout

log = logging.getLogger(__name__)

TOL_ENV = "QECBOUNDS_TOL"
STATUSES = ("optimal", "near-optimal", "infeasible", "unbounded", "iteration-limit")
# interior-point methods converge in tens of iterations; a stalled run is
# not rescued by thousands more
IPM_MAX_ITERS = 300


@dataclass(frozen=True)
class SolverConfig:
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iter: int = 200_000
    verbose: bool = False
    symmetry: bool = True  # use twirl metadata to block-diagonalize
    real: bool = True  # restrict real programs to real symmetric variables
    lp_solver: str = "highs"  # "highs" or "conic" for programs without matrix cones

    def __post_init__(self):
        if min(self.abs_tol, self.rel_tol, self.feas_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.lp_solver not in ("highs", "conic"):
            raise ValueError(f"unknown lp_solver {self.lp_solver!r}")

    @classmethod
    def from_env(cls, **overrides) -> "SolverConfig":
        """Default config, with all tolerances taken from ``$QECBOUNDS_TOL`` if set."""
        tol = os.environ.get(TOL_ENV)
        if tol:
            t = float(tol)
            overrides = {"abs_tol": t, "rel_tol": t, "feas_tol": t, **overrides}
        return cls(**overrides)


@dataclass(frozen=True)
class SolverResult:
    status: str
    primal_value: float
    dual_value: float
    solution: Mapping[str, HermitianOperator | np.ndarray] = field(repr=False)
    solve_time: float
    iterations: int = 0
    residual: float = 0.0
    min_eig: float = 0.0

    @property
    def value(self) -> float:
        return self.primal_value

    def matrix(self, name: str) -> np.ndarray:
        x = self.solution[name]
        return np.asarray(x.entries if isinstance(x, HermitianOperator) else x)


# ---------------------------------------------------------------------------
# parametrizations


def _sym_params(s: int):
    """Real symmetric matrix from its upper triangle: ``(B, C)`` with ``B``
    mapping params to complex ``vec`` and ``C`` to the cone vector."""
    iu, ju = np.triu_indices(s)
    k = np.arange(iu.size)
    rows = np.concatenate([iu * s + ju, (ju * s + iu)[iu != ju]])
    cols = np.concatenate([k, k[iu != ju]])
    b = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(s * s, iu.size))
    return b.astype(complex), b


def _herm_params(s: int):
    """Hermitian matrix from ``s²`` reals: ``p[i s + j]`` is ``Re X_ij`` for
    ``i ≤ j`` and ``p[j s + i]`` is ``Im X_ij`` for ``i < j``.  The cone
    vector is the real embedding ``[[Re, -Im], [Im, Re]]``."""
    iu, ju = np.triu_indices(s)
    re_p = iu * s + ju
    strict = iu < ju
    im_p = (ju * s + iu)[strict]
    i2, j2 = iu[strict], ju[strict]
    rows = np.concatenate([iu * s + ju, (ju * s + iu)[strict], i2 * s + j2, j2 * s + i2])
    cols = np.concatenate([re_p, re_p[strict], im_p, im_p])
    vals = np.concatenate([np.ones(iu.size), np.ones(strict.sum()), 1j * np.ones(im_p.size), -1j * np.ones(im_p.size)])
    b = sp.csr_matrix((vals, (rows, cols)), shape=(s * s, s * s))
    re, im = b.real.tocoo(), b.imag.tocoo()
    t = 2 * s

    def place(m, dr, dc, sign):
        i, j = np.divmod(m.row, s)
        return (i + dr) * t + (j + dc), m.col, sign * m.data

    parts = [place(re, 0, 0, 1), place(im, 0, s, -1), place(im, s, 0, 1), place(re, s, s, 1)]
    c = sp.csr_matrix(
        (np.concatenate([p[2] for p in parts]), (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))),
        shape=(t * t, s * s),
    )
    return b, c


@dataclass
class _VarParam:
    var: Variable
    B: sp.csr_matrix  # params -> complex vec(X)
    cones: list  # (kind, side or count, real sparse cone map)
    n: int
    blocks: tuple = ()


def _parametrize(var: Variable, real: bool, use_symmetry: bool) -> _VarParam:
    if var.kind == "nonneg":
        eye = sp.identity(var.side, format="csr")
        return _VarParam(var, eye.astype(complex), [("l", var.side, eye)], var.side)
    symmetric = var.kind == "symmetric-psd" or real
    block_fn = _sym_params if symmetric else _herm_params
    dec = None
    tw = var.twirl
    if use_symmetry and tw is not None and var.dims is not None and len(tw.positions) > 0:
        d = var.dims[tw.positions[0]]
        if all(var.dims[p] == d for p in tw.positions):
            dec = decompose(d, tuple(tw.conj), symmetric)
    if dec is None:
        b, c = block_fn(var.side)
        return _VarParam(var, b, [("s", var.side * (1 if symmetric else 2), c)], b.shape[1])
    bl = block_lift(tuple(var.dims), tuple(tw.positions), dec)
    bs, cones, offsets = [], [], []
    for s in bl.block_sides:
        b, c = block_fn(s)
        bs.append(b)
        cones.append(c)
    nparams = [b.shape[1] for b in bs]
    starts = np.concatenate([[0], np.cumsum(nparams)])
    z_to_x = bl.lift @ sp.block_diag(bs, format="csr")
    out = []
    for s, c, a, e in zip(bl.block_sides, cones, starts[:-1], starts[1:]):
        sel = sp.csr_matrix((np.ones(e - a), (np.arange(e - a), np.arange(a, e))), shape=(e - a, starts[-1]))
        out.append(("s", s * (1 if symmetric else 2), c @ sel))
    return _VarParam(var, z_to_x.tocsr(), out, int(starts[-1]), bl.block_sides)


# ---------------------------------------------------------------------------
# compiled program


def _has_imag(form: LinearForm) -> bool:
    return any(a.nnz and np.max(np.abs(a.data.imag)) > 1e-12 * np.max(np.abs(a.data)) for a in form.coeffs.values())


def _real_rows(coeffs: sp.csr_matrix, B: sp.csr_matrix) -> sp.csr_matrix:
    return sp.csr_matrix((coeffs @ B).real)


class CompiledProgram:
    """Presolved program; :meth:`run` can be called repeatedly with new
    objectives over the same feasible set."""

    def __init__(self, program: ConicProgram, config: SolverConfig = SolverConfig()):
        t0 = time.perf_counter()
        self.program = program
        self.config = config
        self.real = config.real and program.is_real()
        self.params = {v.name: _parametrize(v, self.real, config.symmetry) for v in program.variables}
        self.infeasible = False
        self.direct_lp = config.lp_solver == "highs" and all(v.kind == "nonneg" for v in program.variables)
        self._presolve()
        self.presolve_time = time.perf_counter() - t0

    # -- presolve ---------------------------------------------------------

    def _block_rows(self, block: ConstraintBlock) -> dict[str, sp.csr_matrix]:
        return {name: _real_rows(a, self.params[name].B) for name, a in block.coeffs.items()}

    def _presolve(self) -> None:
        prog = self.program
        defined: dict[str, tuple] = {}
        regular = []
        for block in prog.constraints:
            rows = self._block_rows(block)
            sub = self._substitution(block, rows) if block.defines and block.defines not in defined else None
            if sub is None:
                regular.append((block, rows))
            else:
                defined[block.defines] = sub

        indep = [v.name for v in prog.variables if v.name not in defined]
        offs = np.concatenate([[0], np.cumsum([self.params[n].n for n in indep])]).astype(int)
        nz = int(offs[-1])
        F: dict[str, sp.csr_matrix] = {}
        f: dict[str, np.ndarray] = {}
        for name, a, e in zip(indep, offs[:-1], offs[1:]):
            F[name] = sp.csr_matrix((np.ones(e - a), (np.arange(e - a), np.arange(a, e))), shape=(e - a, nz))
            f[name] = np.zeros(e - a)
        for name, (K, k0) in defined.items():
            # q_T = k0 - Σ_o K_o q_o
            acc_F = sp.csr_matrix((self.params[name].n, nz))
            acc_f = np.array(k0, dtype=float)
            for other, Ko in K.items():
                if other not in F:
                    raise SolverError(f"auxiliary variable {name!r} depends on {other!r} before it is resolved")
                acc_F = acc_F - sp.csr_matrix(Ko @ F[other])
                acc_f = acc_f - Ko @ f[other]
            F[name], f[name] = acc_F.tocsr(), acc_f

        # remaining equalities in z
        mats, rhs = [], []
        for block, rows in regular:
            m = sp.csr_matrix((block.rows, nz))
            b = np.array(block.rhs, dtype=float)
            for name, a in rows.items():
                m = m + a @ F[name]
                b = b - a @ f[name]
            mats.append(m)
            rhs.append(b)
        if mats:
            A = sp.vstack(mats, format="csr")
            b = np.concatenate(rhs)
        else:
            A, b = sp.csr_matrix((0, nz)), np.zeros(0)
        self.A_eq, self.b_eq = None, None
        if self.direct_lp:
            # HiGHS takes the equalities as they are, which is better
            # conditioned than eliminating them for LPs with wide coefficient ranges
            N, z0 = np.eye(nz), np.zeros(nz)
            self.A_eq, self.b_eq = A.toarray(), b
        else:
            N, z0 = self._nullspace(A, b, nz)
        self.ny = N.shape[1]
        self.maps = {}
        for v in prog.variables:
            Fv = F[v.name]
            self.maps[v.name] = (np.asarray((Fv @ N)), Fv @ z0 + f[v.name])
        self._build_cones()

    def _substitution(self, block: ConstraintBlock, rows: dict[str, sp.csr_matrix]):
        name = block.defines
        At = rows[name]
        gram = (At.T @ At).tocsr()
        diag = gram.diagonal()
        if np.any(diag <= 1e-14):
            return None
        others = {o: a for o, a in rows.items() if o != name}
        rhs = np.asarray(block.rhs, dtype=float)
        offdiag = gram - sp.diags(diag)
        if offdiag.nnz == 0 or np.max(np.abs(offdiag.data), initial=0.0) <= 1e-14 * diag.max():
            inv = sp.diags(1.0 / diag)
            K = {o: sp.csr_matrix(inv @ (At.T @ a)) for o, a in others.items()}
            k0 = inv @ (At.T @ rhs)
        else:
            try:
                cho = sla.cho_factor(gram.toarray())
            except np.linalg.LinAlgError:
                return None
            K = {o: sla.cho_solve(cho, (At.T @ a).toarray()) for o, a in others.items()}
            k0 = sla.cho_solve(cho, At.T @ rhs)
        # the substitution is only valid if the block holds for every value of
        # the other variables; probe with random points
        rng = np.random.default_rng(0)
        for _ in range(2):
            xs = {o: rng.standard_normal(a.shape[1]) for o, a in others.items()}
            qt = k0 - sum((K[o] @ xs[o] for o in others), np.zeros(At.shape[1]))
            lhs = At @ qt + sum((a @ xs[o] for o, a in others.items()), np.zeros(At.shape[0]))
            scale = 1.0 + np.max(np.abs(lhs), initial=0.0) + np.max(np.abs(rhs), initial=0.0)
            if np.max(np.abs(lhs - rhs), initial=0.0) > 1e-9 * scale:
                log.debug("block %s: substitution rejected", block.tag)
                return None
        return K, k0

    def _nullspace(self, A: sp.csr_matrix, b: np.ndarray, nz: int):
        if A.shape[0] == 0:
            return np.eye(nz), np.zeros(nz)
        norms = np.sqrt(np.asarray(A.multiply(A).sum(axis=1)).ravel())
        big = norms.max(initial=0.0)
        keep = norms > 1e-12 * max(big, 1.0)
        if np.any(np.abs(b[~keep]) > 1e-9):
            self.infeasible = True
        A = sp.diags(1.0 / norms[keep]) @ A[keep]
        b = b[keep] / norms[keep]
        gram = (A.T @ A).toarray()
        w, V = np.linalg.eigh(gram)
        thr = 1e-9 * max(w.max(initial=0.0), 1.0)
        rng_mask = w > thr
        Vr, wr = V[:, rng_mask], w[rng_mask]

        def solve(rhs):
            return Vr @ ((Vr.T @ (A.T @ rhs)) / wr)

        z0 = solve(b)
        z0 = z0 + solve(b - A @ z0)
        res = np.max(np.abs(A @ z0 - b), initial=0.0)
        if res > 1e-8:
            log.debug("equalities inconsistent: residual %.3e", res)
            self.infeasible = True
        return V[:, ~rng_mask], z0

    def _build_cones(self) -> None:
        lin_G, lin_h, s_G, s_h, s_dims = [], [], [], [], []
        for v in self.program.variables:
            P = self.params[v.name]
            FN, g = self.maps[v.name]
            for kind, size, C in P.cones:
                Gb = -np.asarray(C @ FN)
                hb = np.asarray(C @ g).ravel()
                if kind == "l":
                    lin_G.append(Gb)
                    lin_h.append(hb)
                else:
                    s_G.append(np.ascontiguousarray(Gb.T.reshape(self.ny, size, size)))
                    s_h.append(hb)
                    s_dims.append(size)
        self.G_l = np.vstack(lin_G) if lin_G else np.zeros((0, self.ny))
        self.h_l = np.concatenate(lin_h) if lin_h else np.zeros(0)
        self.G_s, self.h_s, self.s_dims = s_G, s_h, s_dims

    # -- objective --------------------------------------------------------

    def objective_vector(self, objective: LinearForm) -> tuple[np.ndarray, float]:
        c = np.zeros(self.ny)
        const = float(objective.constant)
        for name, a in objective.coeffs.items():
            row = _real_rows(a, self.params[name].B)
            FN, g = self.maps[name]
            c += np.asarray(row @ FN).ravel()
            const += float((row @ g).sum())
        return c, const

    # -- run --------------------------------------------------------------

    def run(self, objective: LinearForm | None = None, sense: str | None = None) -> SolverResult:
        t0 = time.perf_counter()
        objective = objective or self.program.objective
        sense = sense or self.program.sense
        if self.infeasible:
            return self._result("infeasible", np.nan, np.nan, None, t0, 0)
        if self.real and objective is not self.program.objective and _has_imag(objective):
            # real parametrization is only exact for real objectives
            raise ValueError("complex objective on a program compiled over real matrices; use real=False")
        c, const = self.objective_vector(objective)
        sign = -1.0 if sense == "max" else 1.0
        if self.ny == 0:
            return self._result("optimal", const, const, np.zeros(0), t0, 0)
        if not self.s_dims and self.config.lp_solver == "highs":
            return self._run_highs(sign * c, const, sign, t0)
        return self._run_cvxopt(sign * c, const, sign, t0)

    def _run_highs(self, c, const, sign, t0):
        from scipy.optimize import linprog

        # cone rows: h - G y >= 0
        res = linprog(
            c, A_ub=self.G_l, b_ub=self.h_l, A_eq=self.A_eq, b_eq=self.b_eq,
            bounds=[(None, None)] * self.ny, method="highs",
        )
        if res.status == 0:
            pv = sign * res.fun + const
            dual = float(self.h_l @ res.ineqlin.marginals)
            if self.A_eq is not None:
                dual += float(self.b_eq @ res.eqlin.marginals)
            dual = sign * dual + const
            return self._result("optimal", pv, dual, res.x, t0, int(res.nit))
        if res.status == 2:
            return self._result("infeasible", np.nan, np.nan, None, t0, int(res.nit))
        if res.status == 3:
            return self._result("unbounded", np.nan, np.nan, None, t0, int(res.nit))
        if res.status == 1:
            return self._result("iteration-limit", np.nan, np.nan, None, t0, int(res.nit))
        raise SolverError(f"HiGHS failed: {res.message}")

    def _run_cvxopt(self, c, const, sign, t0):
        import cvxopt
        from cvxopt import solvers

        ny = self.ny
        G_l, h_l, G_s, s_dims = self.G_l, self.h_l, self.G_s, self.s_dims
        nl = G_l.shape[0]
        s_off = np.concatenate([[nl], nl + np.cumsum([k * k for k in s_dims])]).astype(int)
        h = cvxopt.matrix(np.concatenate([h_l] + self.h_s))
        dims = {"l": nl, "q": [], "s": list(s_dims)}
        tri = [np.triu_indices(k) for k in s_dims]

        def lower_sym(vec, k):
            # cvxopt references the lower triangle (column major), i.e. the
            # upper triangle of the row-major reshape
            m = vec.reshape(k, k)
            return np.triu(m) + np.triu(m, 1).T

        def G_fun(x, y, alpha=1.0, beta=0.0, trans="N"):
            xv = np.asarray(x).ravel()
            yv = np.asarray(y).ravel()
            if trans == "N":
                out = np.empty(s_off[-1])
                out[:nl] = G_l @ xv
                for Gb, a, e in zip(G_s, s_off[:-1], s_off[1:]):
                    out[a:e] = Gb.reshape(ny, -1).T @ xv
            else:
                out = G_l.T @ xv[:nl]
                for Gb, a, e, k in zip(G_s, s_off[:-1], s_off[1:], s_dims):
                    out = out + Gb.reshape(ny, -1) @ lower_sym(xv[a:e], k).ravel()
            yv *= beta
            yv += alpha * out

        def A_fun(x, y, alpha=1.0, beta=0.0, trans="N"):
            yv = np.asarray(y).ravel()
            yv *= beta

        def kkt(W):
            di = np.asarray(W["di"]).ravel()
            rtis = [np.array(r) for r in W["rti"]]
            Ml = di[:, None] * G_l
            Ms = [np.matmul(r.T, np.matmul(Gb, r)) for Gb, r in zip(G_s, rtis)]
            packed = [Ml]
            for M, (iu, ju), k in zip(Ms, tri, s_dims):
                packed.append((M[:, iu, ju] * np.where(iu == ju, 1.0, np.sqrt(2.0))[None, :]).T)
            H = sum(P.T @ P for P in packed)
            try:
                fac = ("cho", sla.cho_factor(H))
            except np.linalg.LinAlgError:
                # near the optimum the normal matrix loses definiteness to
                # round-off; a QR factor of the scaled G avoids squaring
                r = sla.qr(np.vstack(packed), mode="r")[0][:ny]
                if np.min(np.abs(np.diag(r))) <= 1e-300:
                    raise ArithmeticError("singular KKT system")
                fac = ("qr", r)

            def newton(rhs):
                if fac[0] == "cho":
                    return sla.cho_solve(fac[1], rhs)
                t = sla.solve_triangular(fac[1], rhs, trans="T")
                return sla.solve_triangular(fac[1], t)

            def solve(x, y, z):
                bx = np.asarray(x).ravel()
                zv = np.asarray(z).ravel()
                wl = di * zv[:nl]
                ws = [r.T @ lower_sym(zv[a:e], k) @ r for r, a, e, k in zip(rtis, s_off[:-1], s_off[1:], s_dims)]
                rhs = bx + Ml.T @ wl
                for M, w in zip(Ms, ws):
                    rhs = rhs + M.reshape(ny, -1) @ w.ravel()
                ux = newton(rhs)
                bx[:] = ux
                zv[:nl] = Ml @ ux - wl
                for M, w, a, e in zip(Ms, ws, s_off[:-1], s_off[1:]):
                    zv[a:e] = M.reshape(ny, -1).T @ ux - w.ravel()

            return solve

        opts = {
            "abstol": self.config.abs_tol,
            "reltol": self.config.rel_tol,
            "feastol": self.config.feas_tol,
            "maxiters": int(min(self.config.max_iter, IPM_MAX_ITERS)),
            "show_progress": bool(self.config.verbose),
        }
        try:
            sol = solvers.conelp(
                cvxopt.matrix(c),
                G_fun,
                h,
                dims,
                A_fun,
                cvxopt.matrix(0.0, (0, 1)),
                kktsolver=kkt,
                options=opts,
            )
        except (ArithmeticError, ValueError) as exc:
            raise SolverError(f"cvxopt failed on a program with {ny} free parameters and cones {s_dims}: {exc}") from exc
        status = sol["status"]
        iters = int(sol.get("iterations", 0))
        x = np.array(sol["x"]).ravel() if sol["x"] is not None else None
        if status == "optimal":
            st = "optimal"
        elif status == "primal infeasible":
            return self._result("infeasible", np.nan, np.nan, None, t0, iters)
        elif status == "dual infeasible":
            return self._result("unbounded", np.nan, np.nan, None, t0, iters)
        else:
            gap = sol.get("relative gap")
            pres, dres = sol.get("primal infeasibility"), sol.get("dual infeasibility")
            small = gap is not None and gap < 1e-5 and (pres or 1) < 1e-5 and (dres or 1) < 1e-5
            if small:
                st = "near-optimal"
            elif iters >= opts["maxiters"]:
                st = "iteration-limit"
            else:
                raise SolverError(
                    f"cvxopt stopped without convergence after {iters} iterations "
                    f"(gap {sol.get('gap')}, pres {pres}, dres {dres})"
                )
        pv = sign * sol["primal objective"] + const
        dv = sign * sol["dual objective"] + const
        return self._result(st, pv, dv, x, t0, iters)

    # -- recovery ---------------------------------------------------------

    def recover(self, y: np.ndarray) -> dict[str, np.ndarray]:
        out = {}
        for v in self.program.variables:
            FN, g = self.maps[v.name]
            q = FN @ y + g
            vec = self.params[v.name].B @ q
            out[v.name] = vec if v.kind == "nonneg" else vec.reshape(v.side, v.side)
        return out

    def _result(self, status, pv, dv, y, t0, iters) -> SolverResult:
        values: dict = {}
        residual, min_eig = np.nan, np.nan
        if y is not None:
            raw = self.recover(y)
            res = self.program.residuals(raw)
            residual = max(res.values(), default=0.0)
            eigs = []
            for v in self.program.variables:
                x = raw[v.name]
                if v.kind == "nonneg":
                    values[v.name] = x.real.copy()
                    eigs.append(x.real.min(initial=np.inf))
                else:
                    m = 0.5 * (x + x.conj().T)
                    if v.kind == "symmetric-psd":
                        m = m.real
                    layout = _layout(v)
                    values[v.name] = HermitianOperator(layout, m, check=False)
                    eigs.append(np.linalg.eigvalsh(m)[0])
            min_eig = float(min(eigs)) if eigs else 0.0
        return SolverResult(
            status,
            float(pv),
            float(dv),
            values,
            time.perf_counter() - t0,
            iters,
            float(residual),
            min_eig,
        )


def _layout(v: Variable) -> SystemLayout:
    if v.dims is not None and v.labels is not None:
        return SystemLayout(zip(v.labels, v.dims))
    if v.dims is not None:
        return SystemLayout((f"{v.name}{i}", d) for i, d in enumerate(v.dims))
    return SystemLayout([(v.name, v.side)])


def compile_program(program: ConicProgram, config: SolverConfig | None = None) -> CompiledProgram:
    return CompiledProgram(program, config or SolverConfig())


def solve(program: ConicProgram, config: SolverConfig | None = None) -> SolverResult:
    """Solve ``program``; statuses follow :data:`STATUSES`."""
    compiled = compile_program(program, config)
    result = compiled.run()
    return replace(result, solve_time=result.solve_time + compiled.presolve_time)


# ---------------------------------------------------------------------------
# complex -> real embedding at the IR level


def embed_real(program: ConicProgram) -> ConicProgram:
    """Replace each Hermitian variable ``H`` (side ``s``) by a real symmetric
    ``S`` of side ``2s`` standing for ``[[Re H, -Im H], [Im H, Re H]]``.
    :func:`unembed_solution` maps solutions back."""
    herm = {v.name: v.side for v in program.variables if v.kind == "hermitian-psd"}

    def lift(name, a: sp.csr_matrix) -> sp.csr_matrix:
        if name not in herm:
            return a
        s = herm[name]
        t = 2 * s
        coo = a.tocoo()
        i, j = np.divmod(coo.col, s)
        re, im = coo.data.real / 2, coo.data.imag / 2
        rows = np.tile(coo.row, 4)
        cols = np.concatenate([i * t + j, (s + i) * t + (s + j), (s + i) * t + j, i * t + (s + j)])
        vals = np.concatenate([re, re, -im, im])
        return sp.csr_matrix((vals.astype(complex), (rows, cols)), shape=(a.shape[0], t * t))

    variables = tuple(
        replace(v, kind="symmetric-psd", side=2 * v.side, dims=None, labels=None, twirl=None) if v.name in herm else v
        for v in program.variables
    )
    obj = LinearForm({k: lift(k, a) for k, a in program.objective.coeffs.items()}, program.objective.constant)
    blocks = tuple(
        ConstraintBlock(c.tag, {k: lift(k, a) for k, a in c.coeffs.items()}, c.rhs, c.defines) for c in program.constraints
    )
    meta = dict(program.metadata)
    meta["embedded"] = True
    return ConicProgram(variables, obj, blocks, program.sense, meta)


def unembed(S: np.ndarray) -> np.ndarray:
    """``(S11 + S22)/2 + i (S21 - S12)/2`` for a ``2s × 2s`` real matrix."""
    S = np.asarray(S)
    s = S.shape[0] // 2
    return (S[:s, :s] + S[s:, s:]) / 2 + 1j * (S[s:, :s] - S[:s, s:]) / 2


def unembed_solution(original: ConicProgram, result: SolverResult) -> dict[str, np.ndarray]:
    out = {}
    for v in original.variables:
        x = result.matrix(v.name)
        out[v.name] = unembed(x) if v.kind == "hermitian-psd" else x
    return out
