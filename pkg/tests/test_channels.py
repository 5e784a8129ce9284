import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qecbounds.channels import (
    QuantumChannel,
    amplitude_damping,
    apply,
    bit_flip,
    channel_from_dict,
    channel_to_dict,
    choi_from_kraus,
    depolarizing,
    identity_channel,
    load_channel,
    pauli_flip,
    random_channel,
    save_channel,
    tensor_power,
    werner_holevo,
)
from qecbounds.errors import DomainError, ResourceError, ShapeError
from qecbounds.tensor import max_entangled, permute_array

from conftest import random_hermitian


def zoo():
    return [
        identity_channel(2),
        depolarizing(2, 0.3),
        depolarizing(3, 0.5),
        depolarizing(2, 4 / 3),
        amplitude_damping(0.3),
        pauli_flip("bit", 0.1),
        pauli_flip("phase", 0.2),
        pauli_flip("bit-phase", 0.7),
        werner_holevo(2),
        werner_holevo(3),
        werner_holevo(3, 0.4),
        random_channel(2, 3, 2, 5),
    ]


@pytest.mark.parametrize("ch", zoo(), ids=lambda c: c.name)
def test_constructor_invariants(ch):
    gram = sum(k.conj().T @ k for k in ch.kraus)
    assert np.max(np.abs(gram - np.eye(ch.dim_in))) <= 1e-10
    assert ch.choi.eigvalsh()[0] >= -1e-10
    assert abs(ch.choi.trace() - 1) <= 1e-12
    assert np.max(np.abs(ch.choi.entries - choi_from_kraus(ch.kraus, ch.dim_in))) <= 1e-12
    assert ch.choi.layout.dims == (ch.dim_out, ch.dim_in)


class TestDepolarizing:
    def test_p0_identity(self):
        assert np.allclose(depolarizing(2, 0).choi.entries, max_entangled(2).entries)

    def test_p1_fully_mixing(self):
        assert np.allclose(depolarizing(2, 1).choi.entries, np.eye(4) / 4)

    def test_qutrit_spectrum(self):
        p = 0.5
        vals = np.sort(depolarizing(3, p).choi.eigvalsh())
        expected = np.sort([(1 - p) + p / 9] + [p / 9] * 8)
        assert np.allclose(vals, expected)

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_boundary_psd(self, d):
        ch = depolarizing(d, d * d / (d * d - 1))
        assert ch.choi.eigvalsh()[0] >= -1e-12

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            depolarizing(2, 1.4)
        with pytest.raises(DomainError):
            depolarizing(2, -0.1)


class TestAmplitudeDamping:
    def test_zero_is_identity(self):
        assert np.allclose(amplitude_damping(0).choi.entries, max_entangled(2).entries)

    def test_full_damping(self):
        ket0 = np.diag([1.0, 0.0])
        assert np.allclose(amplitude_damping(1).choi.entries, np.kron(ket0, np.eye(2) / 2))

    def test_range(self):
        with pytest.raises(DomainError):
            amplitude_damping(1.1)


class TestPauliFlips:
    def test_bit_zero(self):
        assert np.allclose(pauli_flip("bit", 0).choi.entries, max_entangled(2).entries)

    def test_bit_one_rank_one(self):
        assert np.sum(pauli_flip("bit", 1).choi.eigvalsh() > 1e-10) == 1

    def test_dephasing(self):
        expected = np.zeros((4, 4))
        expected[0, 0] = expected[3, 3] = 0.5
        assert np.allclose(pauli_flip("phase", 0.5).choi.entries, expected)

    def test_bad_kind(self):
        with pytest.raises(DomainError):
            pauli_flip("spin", 0.1)

    def test_range(self):
        with pytest.raises(DomainError):
            bit_flip(1.5)


class TestWernerHolevo:
    def test_qubit_definition(self):
        # (Tr[ρ] 1 - ρ^T)/(d-1) at d=2 is conjugation by iY: a unitary channel
        ch = werner_holevo(2)
        assert np.allclose(np.sort(ch.choi.eigvalsh()), [0, 0, 0, 1], atol=1e-12)
        rho = random_hermitian(np.random.default_rng(0), 2, psd=True)
        assert np.allclose(apply(ch, rho), np.trace(rho) * np.eye(2) - rho.T)

    def test_qutrit_definition(self):
        rho = random_hermitian(np.random.default_rng(1), 3, psd=True)
        assert np.allclose(apply(werner_holevo(3), rho), (np.trace(rho) * np.eye(3) - rho.T) / 2)

    def test_generalized_mixture(self):
        rho = random_hermitian(np.random.default_rng(2), 3, psd=True)
        lam = 0.3
        expected = lam * rho + (1 - lam) * (np.trace(rho) * np.eye(3) - rho.T) / 2
        assert np.allclose(apply(werner_holevo(3, lam), rho), expected)

    def test_small_d(self):
        with pytest.raises(DomainError):
            werner_holevo(1)


class TestRandom:
    def test_isometry_rank_one(self):
        assert np.sum(random_channel(2, 2, 1, 3).choi.eigvalsh() > 1e-10) == 1

    def test_seed_determinism(self):
        a, b = random_channel(2, 2, 3, 11), random_channel(2, 2, 3, 11)
        assert all(np.array_equal(x, y) for x, y in zip(a.kraus, b.kraus))

    def test_four_kraus(self):
        ch = random_channel(2, 2, 4, 0)
        assert len(ch.kraus) == 4


class TestTensorPower:
    def test_k1(self):
        ch = bit_flip(0.2)
        assert tensor_power(ch, 1) is ch

    def test_identity_square(self):
        sq = tensor_power(identity_channel(2), 2)
        assert np.allclose(sq.choi.entries, max_entangled(4).entries)

    @pytest.mark.parametrize("ch", [depolarizing(2, 0.3), amplitude_damping(0.2), random_channel(2, 2, 2, 1)])
    def test_choi_is_permuted_square(self, ch):
        j = ch.choi.entries
        # [out1, in1, out2, in2] -> [out1, out2, in1, in2]
        expected = permute_array(np.kron(j, j), [2, 2, 2, 2], [0, 2, 1, 3])
        assert np.max(np.abs(tensor_power(ch, 2).choi.entries - expected)) <= 1e-12

    def test_cap(self):
        with pytest.raises(ResourceError):
            tensor_power(depolarizing(2, 0.1), 11)


class TestApply:
    def test_identity(self, rng):
        rho = random_hermitian(rng, 3, psd=True)
        assert np.allclose(apply(identity_channel(3), rho), rho)

    def test_fully_depolarizing(self, rng):
        rho = random_hermitian(rng, 2, psd=True)
        assert np.allclose(apply(depolarizing(2, 1), rho), np.eye(2) / 2)

    def test_bit_flip_on_ket0(self):
        assert np.allclose(apply(bit_flip(0.3), np.diag([1.0, 0.0])), np.diag([0.7, 0.3]))

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            apply(bit_flip(0.1), np.eye(3))

    @given(st.integers(0, 10_000))
    def test_trace_and_hermiticity(self, seed):
        rng = np.random.default_rng(seed)
        ch = random_channel(2, 3, 2, seed)
        x = random_hermitian(rng, 2 * 2)
        out = apply(ch, x, spectator=2)
        assert abs(np.trace(out) - np.trace(x)) <= 1e-10
        assert np.max(np.abs(out - out.conj().T)) <= 1e-10


class TestJson:
    def test_round_trip(self, tmp_path):
        ch = random_channel(2, 3, 2, 4)
        path = tmp_path / "ch.json"
        save_channel(ch, path)
        back = load_channel(path)
        assert np.allclose(back.choi.entries, ch.choi.entries)
        assert back.name == ch.name

    def test_format(self):
        data = channel_to_dict(bit_flip(0.25))
        assert set(data) == {"name", "dim_in", "dim_out", "kraus"}
        assert data["kraus"][1][0][1] == [0.5, 0.0]
        json.dumps(data)

    def test_rejects_non_tp(self):
        data = channel_to_dict(bit_flip(0.25))
        data["kraus"] = data["kraus"][:1]
        with pytest.raises(DomainError):
            channel_from_dict(data)

    def test_wrong_shape(self):
        with pytest.raises(ShapeError):
            QuantumChannel(2, 2, (np.eye(3),))
