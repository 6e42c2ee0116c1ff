import numpy as np
import pytest
from scipy.linalg import expm

from rpnvsim.geometry import NV, FieldVector
from rpnvsim.hamiltonian import (H6_TENSOR, NVParams, RateParams, RPParams,
                                 build_H_NV, build_H_RP, build_H_total,
                                 build_register, charge_projectors)
from rpnvsim.liouville import (Liouvillian, assemble, dephasing_jump,
                               recombination_jumps, relaxation_jumps, unvectorize,
                               vectorize)
from rpnvsim.model import SensorModel
from rpnvsim.propagate import TimeGrid, initial_state, propagate_dense
from rpnvsim.spinalg import SpinRegister, SpinSite, partial_trace, spin_matrices

RNG = np.random.default_rng(11)


def random_density_matrix(dim):
    a = RNG.standard_normal((dim, dim)) + 1j * RNG.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


@pytest.fixture(scope="module")
def default_setup():
    model = SensorModel()
    register = model.register()
    return model, register


@pytest.fixture(scope="module")
def small_setup():
    # nucleus-free register keeps the superoperator at 576x576
    model = SensorModel(rp=RPParams(hyperfines=()))
    register = model.register()
    return model, register


def test_recombination_jump_structure(default_setup):
    model, register = default_setup
    jumps = recombination_jumps(model.rates, register)
    assert len(jumps) == 4
    p_e, _ = charge_projectors(register)
    total = sum(j.operator.conj().T @ j.operator for j in jumps)
    assert np.allclose(total, p_e)          # sum_u l_u = identity on the pair
    for j in jumps:
        assert np.linalg.norm(j.operator @ j.operator) < 1e-14  # nilpotent


def test_equal_rates_give_pure_exponential_charge_decay(small_setup):
    model, register = small_setup
    k = 0.15e6
    from dataclasses import replace
    m = replace(model, rates=RateParams(k_s=k, k_t=k))
    lv = m.liouvillian(register)
    rho0 = initial_state(register)
    grid = TimeGrid(0.0, 4e-6, 9)
    traj = propagate_dense(lv, rho0, grid)
    p_e, _ = charge_projectors(register)
    pe = np.real(np.einsum("tij,ji->t", traj, p_e))
    assert np.abs(pe - np.exp(-k * grid.times)).max() < 1e-10


def test_block_solution_equivalence(small_setup):
    # with k_s = k_t the charge-separated block is exp(-iHt) rho exp(iHt) e^{-kt}
    model, register = small_setup
    k = 0.1425e6
    from dataclasses import replace
    m = replace(model, rates=RateParams(k_s=k, k_t=k))
    lv = m.liouvillian(register)
    rho0 = initial_state(register)
    grid = TimeGrid(0.0, 1.5e-6, 4)
    traj = propagate_dense(lv, rho0, grid)
    _, h_e, _ = m.hamiltonians(register)
    p_e, _ = charge_projectors(register)
    n = register.total_dim
    for rho_t, t in zip(traj, grid.times):
        block = p_e @ rho_t @ p_e
        u = expm(-1j * h_e * t)
        expected = u @ (p_e @ rho0 @ p_e) @ u.conj().T * np.exp(-k * t)
        assert np.abs(block - expected).max() < 1e-8


def test_dephasing_jump_basics(default_setup):
    model, register = default_setup
    assert dephasing_jump(0.0, register) is None
    j = dephasing_jump(0.5e6, register)
    assert j.rate == 0.5e6
    # acting on a state diagonal in Sz does nothing
    lv = Liouvillian(H=np.zeros((register.total_dim,) * 2), jumps=(j,),
                     dim=register.total_dim)
    rho = initial_state(register)  # diagonal in the NV Sz basis
    assert np.abs(lv.apply(rho)).max() < 1e-20


def test_relaxation_jumps_count_and_depolarization():
    reg = SpinRegister((SpinSite("e1", 0.5), SpinSite("e2", 0.5)))
    assert relaxation_jumps(0.0, reg) == []
    jumps = relaxation_jumps(0.1e6, reg)
    assert len(jumps) == 6
    # with no Hamiltonian and no recombination the pair depolarizes
    lv = assemble(np.zeros((4, 4)), jumps)
    m = lv.matrix()
    from rpnvsim.spinalg import pair_basis, projector
    rho0 = projector(pair_basis()["s"])
    rho_t = unvectorize(expm(m * 20e-6) @ vectorize(rho0), 4)
    assert np.abs(rho_t - np.eye(4) / 4).max() < 1e-6


def test_assemble_trace_preservation_random_states(default_setup):
    model, register = default_setup
    from dataclasses import replace
    m = replace(model, rates=RateParams(k_s=0.02e6, k_t=0.2e6, gamma=0.5e6,
                                        Gamma=0.1e6))
    lv = m.liouvillian(register)
    for _ in range(3):
        rho = random_density_matrix(register.total_dim)
        assert abs(np.trace(lv.apply(rho))) < 1e-12 * np.linalg.norm(lv.apply(rho))


def test_no_jumps_preserves_purity_and_identity_fixed_point():
    reg = SpinRegister((SpinSite("nv", 1.0),))
    sx, _, sz = spin_matrices(1.0)
    lv = assemble(2e6 * sx, [])
    m = lv.matrix()
    psi = np.array([1, 0, 0], dtype=complex)
    rho0 = np.outer(psi, psi.conj())
    rho_t = unvectorize(expm(m * 1e-6) @ vectorize(rho0), 3)
    assert np.isclose(np.trace(rho_t @ rho_t).real, 1.0, atol=1e-10)
    # dephasing only: identity/N is a fixed point (unital channel)
    lv2 = assemble(np.zeros((3, 3)), [dephasing_jump(1e6, reg)])
    rho_id = np.eye(3) / 3
    assert np.abs(lv2.apply(rho_id)).max() < 1e-20


def test_matrix_sparse_matches_dense(default_setup):
    model, register = default_setup
    lv = model.liouvillian(register)
    md = lv.matrix()
    ms = lv.matrix_sparse().toarray()
    assert np.abs(md - ms).max() < 1e-9 * np.abs(md).max()


def test_vectorization_round_trip():
    rho = random_density_matrix(6)
    assert np.allclose(unvectorize(vectorize(rho), 6), rho)


def test_apply_matches_matrix(default_setup):
    model, register = default_setup
    lv = model.liouvillian(register)
    rho = random_density_matrix(register.total_dim)
    direct = lv.apply(rho)
    via_matrix = unvectorize(lv.matrix_sparse() @ vectorize(rho), register.total_dim)
    assert np.abs(direct - via_matrix).max() < 1e-9 * np.abs(direct).max()


def test_jump_dimension_mismatch_rejected():
    from rpnvsim.liouville import JumpTerm
    with pytest.raises(ValueError):
        assemble(np.zeros((4, 4)), [JumpTerm(np.eye(3), 1.0)])
    with pytest.raises(ValueError):
        JumpTerm(np.eye(2), -1.0)
