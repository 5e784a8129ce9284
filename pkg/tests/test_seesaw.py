import numpy as np
import pytest

from qecbounds.backend import solve
from qecbounds.builders import HierarchySpec, build_hierarchy
from qecbounds.channels import amplitude_damping, bit_flip, depolarizing, identity_channel, random_channel
from qecbounds.codes import CodePair, InstrumentCode, evaluate_code, evaluate_instrument_code, trivial_code
from qecbounds.errors import DomainError
from qecbounds.seesaw import SeesawConfig, seesaw_lower_bound
from qecbounds.tensor import ptrace_array

FAST = SeesawConfig(restarts=3, iters_per_restart=30)


def test_identity_channel():
    val, code = seesaw_lower_bound(identity_channel(2), 2, FAST)
    assert abs(val - 1) <= 1e-6
    assert isinstance(code, CodePair)


def test_bit_flip_optimum():
    val, code = seesaw_lower_bound(bit_flip(0.1), 2, FAST)
    assert abs(val - 0.9) <= 1e-4
    assert abs(evaluate_code(code, bit_flip(0.1)) - val) <= 1e-12


def test_depolarizing_not_below_trivial():
    ch = depolarizing(2, 0.2)
    val, _ = seesaw_lower_bound(ch, 2, FAST)
    assert val >= evaluate_code(trivial_code(2, 2, 2), ch) - 1e-6
    assert val >= 0.85 - 1e-6


def test_no_trivial_start_random_only():
    cfg = SeesawConfig(restarts=4, iters_per_restart=40, trivial_start=False, seed=5)
    val, _ = seesaw_lower_bound(depolarizing(2, 0.2), 2, cfg)
    assert val >= 0.85 - 1e-4


def test_seed_determinism():
    cfg = SeesawConfig(restarts=2, iters_per_restart=10, trivial_start=False, seed=11)
    ch = random_channel(2, 2, 2, 8)
    a, ca = seesaw_lower_bound(ch, 2, cfg)
    b, cb = seesaw_lower_bound(ch, 2, cfg)
    assert a == b
    assert np.array_equal(ca.E.entries, cb.E.entries)


@pytest.mark.parametrize("ch", [amplitude_damping(0.3), random_channel(2, 2, 2, 1), random_channel(2, 2, 3, 2)], ids=lambda c: c.name)
def test_sandwich_against_hierarchy(ch):
    val, code = seesaw_lower_bound(ch, 2, FAST)
    upper = solve(build_hierarchy(ch, 2, HierarchySpec(2, True))).value
    assert val <= upper + 1e-5
    # outputs are valid codes
    for op, dims in ((code.E, (2, 2)), (code.D, (2, 2))):
        mat = np.asarray(op.entries)
        assert np.linalg.eigvalsh(mat)[0] >= -1e-8
        assert np.allclose(ptrace_array(mat, list(dims), [1]), np.eye(2) / 2, atol=1e-6)


def test_locc_dominates_plain_from_same_start():
    ch = depolarizing(3, 0.4)
    plain, code = seesaw_lower_bound(ch, 2, FAST)
    assisted, inst = seesaw_lower_bound(ch, 2, SeesawConfig(restarts=1, iters_per_restart=30), "locc1", init=code)
    assert isinstance(inst, InstrumentCode) and len(inst.E) == 4
    assert assisted >= plain - 1e-6
    assert abs(evaluate_instrument_code(inst, ch) - assisted) <= 1e-12
    upper = solve(build_hierarchy(ch, 2, HierarchySpec(1, True, "locc1"))).value
    assert assisted <= upper + 1e-5


def test_locc_arity_override():
    cfg = SeesawConfig(restarts=1, iters_per_restart=10, arity=2)
    _, inst = seesaw_lower_bound(bit_flip(0.1), 2, cfg, "locc1")
    assert len(inst.D) == 2


def test_bad_init_arity():
    inst = InstrumentCode.from_pair(trivial_code(2, 2, 2), arity=3)
    with pytest.raises(DomainError):
        seesaw_lower_bound(bit_flip(0.1), 2, SeesawConfig(restarts=1, iters_per_restart=5, arity=2), "locc1", init=inst)


def test_bad_assistance():
    with pytest.raises(DomainError):
        seesaw_lower_bound(bit_flip(0.1), 2, FAST, "two-way")


@pytest.mark.parametrize(
    "kwargs", [{"restarts": 0}, {"iters_per_restart": 0}, {"convergence_tol": 0.0}, {"arity": 0}]
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SeesawConfig(**kwargs)
