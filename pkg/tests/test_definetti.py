import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qecbounds.definetti import (
    DistortionBound,
    Measurement,
    definetti_bound,
    distortion_ratio,
    measure_side_B,
    single_marginal_bound,
    two_design_measurement,
    two_design_residual,
)
from qecbounds.errors import ConstructionError, DegenerateInput, DomainError, ShapeError
from qecbounds.tensor import HermitianOperator

from conftest import random_hermitian


def op(mat, d_a, d_b=2):
    layout = [("A", d_a), ("B", d_b)] if d_a > 1 else [("B", d_b)]
    return HermitianOperator(layout, mat)


class TestTwoDesign:
    def test_qubit_effects(self):
        m = two_design_measurement(2)
        assert m.outcome_count == 6
        assert np.allclose(sum(m.effects), np.eye(2), atol=1e-14)
        for e in m.effects:
            vals = np.linalg.eigvalsh(e)
            assert np.allclose(vals, [0, 1 / 3])

    @pytest.mark.parametrize("d, t", [(2, 6), (3, 12)])
    def test_residual(self, d, t):
        m = two_design_measurement(d)
        projectors = [e * t / d for e in m.effects]
        assert two_design_residual(projectors, d) <= 1e-12

    def test_uniform_on_maximally_mixed(self):
        assert np.allclose(two_design_measurement(2).probabilities(np.eye(2) / 2), 1 / 6)

    def test_unsupported_dimension(self):
        with pytest.raises(DomainError):
            two_design_measurement(4)

    def test_computational_basis_is_not_a_design(self):
        projectors = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
        assert two_design_residual(projectors, 2) > 0.1

    def test_measurement_validation(self):
        with pytest.raises(ConstructionError):
            Measurement(2, (np.diag([1.0, 0.0]),))
        with pytest.raises(ConstructionError):
            Measurement(2, (np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])))
        with pytest.raises(ShapeError):
            Measurement(2, (np.eye(3),))


class TestMeasureSideB:
    m = two_design_measurement(2)

    def test_maximally_mixed_side(self, rng):
        rho = random_hermitian(rng, 3, psd=True)
        out = measure_side_B(self.m, HermitianOperator([("A", 3), ("B", 2)], np.kron(rho, np.eye(2) / 2)))
        assert out.layout.labels == ("Z", "A")
        for z in range(6):
            assert np.allclose(out.entries[3 * z:3 * z + 3, 3 * z:3 * z + 3], rho / 6)

    def test_product(self, rng):
        rho, sigma = random_hermitian(rng, 2, psd=True), random_hermitian(rng, 2, psd=True)
        out = measure_side_B(self.m, op(np.kron(rho, sigma), 2)).entries
        for z, e in enumerate(self.m.effects):
            expected = np.real(np.trace(e @ sigma)) * rho
            assert np.allclose(out[2 * z:2 * z + 2, 2 * z:2 * z + 2], expected)

    def test_block_diagonal(self, rng):
        out = measure_side_B(self.m, op(random_hermitian(rng, 4), 2)).entries
        mask = np.kron(np.eye(6), np.ones((2, 2)))
        assert np.all(out[mask == 0] == 0)

    def test_label_position(self, rng):
        rho, sigma = random_hermitian(rng, 3, psd=True), random_hermitian(rng, 2, psd=True)
        first = measure_side_B(self.m, HermitianOperator([("B", 2), ("A", 3)], np.kron(sigma, rho)))
        last = measure_side_B(self.m, HermitianOperator([("A", 3), ("B", 2)], np.kron(rho, sigma)))
        assert np.allclose(first.entries, last.entries)

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            measure_side_B(self.m, HermitianOperator([("A", 2), ("B", 3)], np.eye(6) / 6))

    @given(st.integers(0, 10_000), st.sampled_from([1, 2, 4]))
    def test_trace_and_positivity(self, seed, d_a):
        rng = np.random.default_rng(seed)
        xi = random_hermitian(rng, 2 * d_a)
        out = measure_side_B(self.m, op(xi, d_a)).entries
        assert abs(np.trace(out) - np.trace(xi)) <= 1e-10
        rho = random_hermitian(rng, 2 * d_a, psd=True)
        assert np.linalg.eigvalsh(measure_side_B(self.m, op(rho, d_a)).entries)[0] >= -1e-12


class TestDistortion:
    m = two_design_measurement(2)

    @given(st.integers(0, 10_000), st.sampled_from([1, 2, 4, 8]))
    def test_bounded_by_twelve(self, seed, d_a):
        xi = random_hermitian(np.random.default_rng(seed), 2 * d_a)
        assert distortion_ratio(op(xi, d_a), self.m) <= 12 + 1e-6

    def test_pauli_z_side(self, rng):
        rho = random_hermitian(rng, 2, psd=True)
        ratio = distortion_ratio(op(np.kron(rho, np.diag([1.0, -1.0])), 2), self.m)
        # ‖σ_z‖₁ = 2, measured mass is 2/3 on the two Z-basis outcomes
        assert np.isclose(ratio, 3.0)

    def test_psd_ratio_one(self, rng):
        rho = random_hermitian(rng, 8, psd=True)
        assert np.isclose(distortion_ratio(op(rho, 4), self.m), 1.0)

    def test_degenerate(self):
        with pytest.raises(DegenerateInput):
            distortion_ratio(op(np.zeros((4, 4)), 2), self.m)

    def test_bound_constants(self):
        b = DistortionBound.for_dims(2, 2)
        assert b.f_side_info == 12
        assert np.isclose(b.f_product, 36)
        assert b.best == 12


class TestDeFinettiBound:
    def test_example(self):
        val = definetti_bound(1, 10, 2, 2, 12)
        assert np.isclose(val, 12 * math.sqrt(2 * math.log(2) / 10))
        assert abs(val - 4.468) <= 1e-3

    def test_monotone_in_n(self):
        vals = [definetti_bound(2, n, 2, 2, 12) for n in range(3, 60)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < vals[0] / 3

    def test_monotone_in_k(self):
        vals = [definetti_bound(k, 30, 2, 2, 12) for k in range(1, 10)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_trivial_side(self):
        assert definetti_bound(1, 5, 1, 2, 12) == 0

    def test_single_marginal(self):
        assert np.isclose(single_marginal_bound(4, 2, 12), 12 * math.sqrt(2 * math.log(2) / 4))
        assert single_marginal_bound(3, 1, 12) == 0

    @pytest.mark.parametrize("args", [(0, 5, 2, 2, 12), (5, 5, 2, 2, 12), (1, 5, 0, 2, 12), (1, 5, 2, 2, 0)])
    def test_errors(self, args):
        with pytest.raises(DomainError):
            definetti_bound(*args)
