import numpy as np
import pytest
from scipy.stats import unitary_group

from qecbounds.symmetry import block_lift, commutant_basis, decompose


def rep(d, conj, u):
    out = np.ones((1, 1), dtype=complex)
    for c in conj:
        out = np.kron(out, u.conj() if c else u)
    return out


@pytest.mark.parametrize(
    "conj, irreps",
    [
        ((False, False), [1, 3]),  # antisymmetric + symmetric
        ((False, True), [1, 3]),  # trivial + adjoint
    ],
)
def test_two_factor_irreps(conj, irreps):
    dec = decompose(2, conj, False)
    assert dec is not None
    assert sorted(c.n for c in dec.components) == irreps
    assert all(c.m == 1 for c in dec.components)


@pytest.mark.parametrize("conj", [(False, False, True), (False, True, False, True)])
@pytest.mark.parametrize("real", [False, True])
def test_commutant_dimension_matches(conj, real):
    dec = decompose(2, conj, real)
    if dec is None:
        pytest.skip("no real form for this representation")
    assert sum(c.m**2 for c in dec.components) == len(commutant_basis(2, conj))
    assert sum(c.m * c.n for c in dec.components) == 2 ** len(conj)


def test_bases_are_orthonormal():
    dec = decompose(2, (False, True, False, True), True)
    q = np.hstack([b for c in dec.components for b in c.bases])
    assert np.allclose(q.conj().T @ q, np.eye(16), atol=1e-9)
    assert np.allclose(q.imag, 0)


def test_commutant_elements_commute():
    conj = (False, True, False)
    rng = np.random.default_rng(3)
    basis = commutant_basis(2, conj)
    v = rep(2, conj, unitary_group.rvs(2, random_state=rng))
    for row in basis:
        x = row.reshape(8, 8)
        assert np.allclose(v @ x, x @ v, atol=1e-9)


class TestBlockLift:
    dims = (2, 2, 3)
    positions = (0, 1)
    conj = (False, True)

    def lifted(self, real=False):
        dec = decompose(2, self.conj, real)
        return block_lift(self.dims, self.positions, dec)

    def test_psd_blocks_lift_to_invariant_psd(self):
        lift = self.lifted()
        rng = np.random.default_rng(0)
        parts = []
        for s in lift.block_sides:
            z = rng.standard_normal((s, s)) + 1j * rng.standard_normal((s, s))
            parts.append((z @ z.conj().T).ravel())
        x = (lift.lift @ np.concatenate(parts)).reshape(12, 12)
        assert np.allclose(x, x.conj().T)
        assert np.linalg.eigvalsh(x)[0] >= -1e-10
        u = unitary_group.rvs(2, random_state=rng)
        v = np.kron(rep(2, self.conj, u), np.eye(3))
        assert np.allclose(v @ x @ v.conj().T, x, atol=1e-9)

    def test_reconstructs_invariant_operators(self):
        lift = self.lifted()
        rng = np.random.default_rng(1)
        basis = commutant_basis(2, self.conj)
        # twirled factors come first in the layout, so kron(commutant, anything)
        x = sum(np.kron(row.reshape(4, 4), rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))) for row in basis)
        L = lift.lift.toarray()
        coef, *_ = np.linalg.lstsq(L, x.ravel(), rcond=None)
        assert np.allclose(L @ coef, x.ravel(), atol=1e-9)
        assert L.shape[1] == sum(s * s for s in lift.block_sides)

    def test_non_adjacent_positions(self):
        dec = decompose(2, (False, False), False)
        lift = block_lift((2, 3, 2), (0, 2), dec)
        rng = np.random.default_rng(2)
        z = np.concatenate([np.eye(s).ravel() for s in lift.block_sides])
        x = (lift.lift @ z).reshape(12, 12)
        u = unitary_group.rvs(2, random_state=rng)
        v = np.kron(np.kron(u, np.eye(3)), u)
        assert np.allclose(v @ x @ v.conj().T, x, atol=1e-9)

    def test_dimension_mismatch(self):
        dec = decompose(2, (False, True), False)
        with pytest.raises(ValueError):
            block_lift((3, 3), (0, 1), dec)
