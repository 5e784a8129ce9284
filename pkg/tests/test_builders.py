import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qecbounds import linmaps as lm
from qecbounds.backend import solve
from qecbounds.builders import (
    HierarchySpec,
    build_dep_lp,
    build_first_level_symmetrized,
    build_generic_bilinear,
    build_hierarchy,
    qec_bilinear_instance,
    x_coeff,
)
from qecbounds.channels import (
    amplitude_damping,
    bit_flip,
    depolarizing,
    identity_channel,
    random_channel,
)
from qecbounds.codes import code_from_channels, evaluate_code
from qecbounds.errors import DomainError, ResourceError
from qecbounds.program import ConicProgram, structurally_equal
from qecbounds.tensor import HermitianOperator, max_entangled, ptranspose_array


def product_point(program, pair, n):
    w = np.asarray(pair.E.entries)
    for _ in range(n):
        w = np.kron(w, pair.D.entries)
    values = {"W": w}
    dims = program.variable("W").dims
    for v in program.variables[1:]:
        j = int(v.name[1:])
        transposed = [p for i in range(1, j + 1) for p in (2 * i, 2 * i + 1)]
        values[v.name] = ptranspose_array(w, dims, transposed)
    return values


class TestHierarchyStructure:
    def test_tags_level_one_ppt(self):
        prog = build_hierarchy(bit_flip(0.1), 2, HierarchySpec(1, True))
        assert prog.tags == {"unit-trace", "A-marginal", "B-marginal", "ppt-BB̄"}

    def test_tags_level_two(self):
        prog = build_hierarchy(bit_flip(0.1), 2, HierarchySpec(2, True))
        assert prog.tags == {"unit-trace", "perm-invariance", "A-marginal", "B-marginal", "ppt-BB̄[1..1]", "ppt-BB̄"}
        w = prog.variable("W")
        assert w.labels == ("A", "Abar", "B1", "Bbar1", "B2", "Bbar2")
        assert w.side == 64

    def test_locc_tags(self):
        prog = build_hierarchy(depolarizing(3, 0.4), 2, HierarchySpec(1, True, "locc1"))
        assert "locc1-AB-marginal" in prog.tags and "A-marginal" not in prog.tags

    def test_extend_a_tags(self):
        prog = build_hierarchy(bit_flip(0.1), 2, HierarchySpec(2, True, extend_side="A"))
        assert "ppt-AĀ" in prog.tags
        assert prog.variable("W").labels[:2] == ("B", "Bbar")

    def test_side_cap(self):
        with pytest.raises(ResourceError):
            build_hierarchy(depolarizing(3, 0.2), 3, HierarchySpec(3))

    def test_invalid_choi(self):
        bad = HermitianOperator([("B", 2), ("Abar", 2)], np.eye(4) / 2)
        with pytest.raises(DomainError):
            build_hierarchy(bad, 2)

    def test_spec_validation(self):
        with pytest.raises(DomainError):
            HierarchySpec(0)
        with pytest.raises(DomainError):
            HierarchySpec(1, assisted="locc2")
        with pytest.raises(DomainError):
            build_hierarchy(bit_flip(0.1), 2, HierarchySpec(1, extend_side="A", assisted="locc1"))

    def test_json_round_trip(self):
        prog = build_hierarchy(amplitude_damping(0.3), 2, HierarchySpec(2, True))
        back = ConicProgram.from_json(prog.to_json())
        assert structurally_equal(prog, back)
        assert back.variable("W").twirl == prog.variable("W").twirl


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("ppt", [False, True])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_product_codes_are_feasible(n, ppt, seed):
    ch = random_channel(2, 2, 2, seed)
    enc = random_channel(2, 2, 2, 100 + seed)
    dec = random_channel(2, 2, 3, 200 + seed)
    pair = code_from_channels(enc, dec)
    for assisted in ("plain", "locc1"):
        prog = build_hierarchy(ch, 2, HierarchySpec(n, ppt, assisted))
        values = product_point(prog, pair, n)
        assert max(prog.residuals(values).values()) <= 1e-10
        assert np.isclose(prog.evaluate(values), evaluate_code(pair, ch), atol=1e-12)


class TestXCoeff:
    def test_examples(self):
        assert x_coeff(0, 0, 1) == 3
        assert x_coeff(1, 0, 1) == -1

    def test_range(self):
        with pytest.raises(DomainError):
            x_coeff(2, 0, 1)
        with pytest.raises(DomainError):
            x_coeff(0, 0, 1, d=1)

    @given(st.integers(1, 12), st.integers(2, 5), st.data())
    def test_generating_function(self, N, d, data):
        # Σ_i x_{i,k} t^i = (d-1+t)^k (d+1-t)^{N-k}
        k = data.draw(st.integers(0, N))
        t = data.draw(st.integers(-3, 3))
        lhs = sum(x_coeff(i, k, N, d) * t**i for i in range(N + 1))
        assert lhs == (d - 1 + t) ** k * (d + 1 - t) ** (N - k)

    def test_brute_force_two_copies(self):
        # x_{i,k}/2^N is the eigenvalue of the partially transposed sum over
        # placements of i factors Φ and N-i factors 1-Φ, on the eigenvector
        # with k symmetric and N-k antisymmetric swap eigenvectors
        N, d = 2, 2
        phi = max_entangled(2).entries
        factors = {1: phi, 0: np.eye(4) - phi}
        sym = np.array([0, 1, 1, 0]) / np.sqrt(2)
        anti = np.array([0, 1, -1, 0]) / np.sqrt(2)
        dims = [2] * (2 * N)
        for i in range(N + 1):
            s = np.zeros((16, 16))
            for placement in itertools.combinations(range(N), i):
                op = np.ones((1, 1))
                for site in range(N):
                    op = np.kron(op, factors[int(site in placement)])
                s = s + op
            st_ = ptranspose_array(s, dims, [1, 3]).real
            for k in range(N + 1):
                v = np.ones(1)
                for site in range(N):
                    v = np.kron(v, sym if site < k else anti)
                assert np.allclose(st_ @ v, (st_ @ v) @ v * v)
                assert np.isclose(v @ st_ @ v, x_coeff(i, k, N, d) / 2**N)


class TestDepLp:
    def test_structure(self):
        prog = build_dep_lp(5, 0.3)
        assert prog.variable("m").side == 6
        assert all(v.kind == "nonneg" for v in prog.variables)
        assert prog.tags == {"m-upper", "ppt-upper", "ppt-lower", "normalization"}

    def test_identity_value(self):
        assert np.isclose(solve(build_dep_lp(1, 0.0)).value, 1, atol=1e-9)

    def test_normalization_matches_stated_form(self):
        # Σ C(N,i) 3^{N-i} m_i = 2^{2N-2}, here scaled by 4^{-N}
        N = 4
        prog = build_dep_lp(N, 0.2)
        block = next(c for c in prog.constraints if c.tag == "normalization")
        coeffs = block.coeffs["m"].toarray().ravel().real * 4**N
        assert np.allclose(coeffs, [comb(N, i) * 3 ** (N - i) for i in range(N + 1)])
        assert np.isclose(block.rhs[0] * 4**N, 2 ** (2 * N - 2))

    def test_errors(self):
        with pytest.raises(DomainError):
            build_dep_lp(0, 0.1)
        with pytest.raises(DomainError):
            build_dep_lp(2, 1.5)
        with pytest.raises(DomainError):
            build_dep_lp(2, 0.1, M=3)

    @pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.7, 0.9])
    def test_matches_level_one_ppt(self, p):
        lp = solve(build_dep_lp(1, p)).value
        sdp = solve(build_hierarchy(depolarizing(2, p), 2, HierarchySpec(1, True))).value
        assert abs(lp - sdp) <= 1e-5


class TestSymmetrizedFirstLevel:
    @pytest.mark.parametrize("ch", [depolarizing(2, 0.3), amplitude_damping(0.4), bit_flip(0.2)], ids=lambda c: c.name)
    def test_matches_hierarchy(self, ch):
        a = solve(build_first_level_symmetrized(ch, 2)).value
        b = solve(build_hierarchy(ch, 2, HierarchySpec(1, True))).value
        assert abs(a - b) <= 1e-5

    def test_identity(self):
        assert np.isclose(solve(build_first_level_symmetrized(identity_channel(2), 2)).value, 1, atol=1e-6)

    def test_locc_matches_hierarchy(self):
        ch = depolarizing(3, 0.4)
        a = solve(build_first_level_symmetrized(ch, 2, "locc1")).value
        b = solve(build_hierarchy(ch, 2, HierarchySpec(1, True, "locc1"))).value
        assert abs(a - b) <= 1e-5

    def test_variables_live_on_channel_systems(self):
        prog = build_first_level_symmetrized(depolarizing(3, 0.4), 2)
        assert prog.variable("Y").side == 9


class TestGenericBilinear:
    @pytest.mark.parametrize("n", [1, 2])
    def test_structural_equality(self, n):
        ch = depolarizing(2, 0.3)
        inst = qec_bilinear_instance(ch, 2)
        gen = build_generic_bilinear(**inst, n=n, strengthened=True)
        assert structurally_equal(gen, build_hierarchy(ch, 2, HierarchySpec(n)))

    @pytest.mark.parametrize("d", [2, 3])
    def test_maximally_entangled_objective(self, d):
        # the largest overlap of an n-extendible state with Φ_d is
        # (n + d - 1)/(n d); it falls to the separable value 1/d
        phi = max_entangled(d).entries
        tr = lm.trace_row(d).toarray()
        vals = []
        for n in (1, 2):
            prog = build_generic_bilinear(phi, tr, np.eye(1), tr, np.eye(1), n, (d, d))
            vals.append(solve(prog).value)
            assert abs(vals[-1] - (n + d - 1) / (n * d)) <= 1e-6
        # separable optimum by a grid over pure product states at d=2
        if d == 2:
            best = 0.0
            for th in np.linspace(0, np.pi, 61):
                for ph in np.linspace(0, 2 * np.pi, 61):
                    a = np.array([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)])
                    v = np.kron(a, a.conj())
                    best = max(best, float(np.real(v.conj() @ phi @ v)))
            assert abs(best - 1 / d) <= 1e-3
            assert vals[-1] >= best - 1e-6

    def test_random_instance_upper_bounds_product_grid(self):
        rng = np.random.default_rng(7)
        z = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        G = (z + z.conj().T) / 2
        tr = lm.trace_row(2).toarray()
        upper = solve(build_generic_bilinear(G, tr, np.eye(1), tr, np.eye(1), 1, (2, 2))).value
        best = -np.inf
        angles = np.linspace(0, np.pi, 25), np.linspace(0, 2 * np.pi, 25)
        states = [np.array([np.cos(t / 2), np.exp(1j * p) * np.sin(t / 2)]) for t in angles[0] for p in angles[1]]
        for a in states:
            for b in states[::3]:
                v = np.kron(a, b)
                best = max(best, float(np.real(v.conj() @ G @ v)))
        assert best <= upper + 1e-6
        # with no marginal constraint beyond normalization the first level is the top eigenvalue
        assert np.isclose(upper, np.linalg.eigvalsh(G)[-1], atol=1e-6)

    def test_shape_errors(self):
        with pytest.raises(Exception):
            build_generic_bilinear(np.eye(3), np.eye(1), np.eye(1), np.eye(1), np.eye(1), 1, (2, 2))
