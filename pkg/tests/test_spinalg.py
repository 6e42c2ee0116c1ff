import numpy as np
import pytest

from rpnvsim.spinalg import (SpinRegister, SpinSite, check_density_matrix, commutator,
                             embed, embed_factors, is_hermitian, pair_basis,
                             partial_trace, pauli_matrices, projector, spin_matrices)

RNG = np.random.default_rng(42)


def random_density_matrix(dim, rng=RNG):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


@pytest.fixture
def register():
    return SpinRegister((
        SpinSite("nv", 1.0),
        SpinSite("e1", 0.5),
        SpinSite("e2", 0.5),
        SpinSite("charge", None),
    ))


def test_spin_half_defining_representation():
    sx, sy, sz = spin_matrices(0.5)
    assert np.allclose(sz, np.diag([0.5, -0.5]))
    assert np.allclose(sx, [[0, 0.5], [0.5, 0]])


def test_spin_one_defining_representation():
    _, _, sz = spin_matrices(1.0)
    assert np.allclose(sz, np.diag([1.0, 0.0, -1.0]))


@pytest.mark.parametrize("s", [0.5, 1.0, 1.5, 2.0, 2.5])
def test_su2_commutation_and_casimir(s):
    sx, sy, sz = spin_matrices(s)
    assert np.linalg.norm(commutator(sx, sy) - 1j * sz) < 1e-12
    assert np.linalg.norm(commutator(sy, sz) - 1j * sx) < 1e-12
    casimir = sx @ sx + sy @ sy + sz @ sz
    assert np.allclose(casimir, s * (s + 1) * np.eye(round(2 * s + 1)))


def test_non_half_integer_spin_rejected():
    with pytest.raises(ValueError):
        spin_matrices(0.7)
    with pytest.raises(ValueError):
        spin_matrices(-0.5)


def test_pauli_matrices():
    sx, sy, sz = pauli_matrices()
    assert np.allclose(sz, np.diag([1, -1]))
    assert np.allclose(sx @ sy, 1j * sz)
    for p in (sx, sy, sz):
        assert np.allclose(p @ p, np.eye(2))


def test_register_dimensions(register):
    assert register.total_dim == 3 * 2 * 2 * 2
    assert register.dims == (3, 2, 2, 2)
    with pytest.raises(ValueError):
        SpinRegister((SpinSite("a", 0.5), SpinSite("a", 0.5)))


def test_embed_traceless_stays_traceless(register):
    sz = spin_matrices(1.0)[2]
    big = embed(sz, "nv", register)
    assert abs(np.trace(big)) < 1e-12
    assert big.shape == (24, 24)


def test_embed_disjoint_supports_commute(register):
    a = embed(spin_matrices(1.0)[0], "nv", register)
    b = embed(spin_matrices(0.5)[1], "e2", register)
    assert np.linalg.norm(commutator(a, b)) < 1e-12


def test_embed_identity(register):
    assert np.allclose(embed(np.eye(2), "e1", register), np.eye(24))


def test_embed_preserves_hermiticity_and_norm(register):
    sx = spin_matrices(0.5)[0]
    big = embed(sx, "e1", register)
    assert is_hermitian(big)
    assert np.isclose(np.linalg.norm(big, 2), np.linalg.norm(sx, 2))


def test_embed_errors(register):
    with pytest.raises(KeyError):
        embed(np.eye(2), "nope", register)
    with pytest.raises(ValueError):
        embed(np.eye(3), "e1", register)


def test_embed_factors_adjacent_block(register):
    ps = projector(pair_basis()["s"])
    big = embed_factors(register, {("e1", "e2"): ps})
    assert big.shape == (24, 24)
    assert np.isclose(np.trace(big), 3 * 2)  # rank-1 on pair, identity elsewhere
    with pytest.raises(ValueError):
        embed_factors(register, {("e1", "charge"): np.eye(4)})


def test_partial_trace_product_state(register):
    rho_nv = random_density_matrix(3)
    rho_rest = random_density_matrix(8)
    rho = np.kron(rho_nv, rho_rest)
    reduced = partial_trace(rho, {"nv"}, register)
    assert np.allclose(reduced, rho_nv)
    assert np.isclose(np.trace(reduced), 1.0)


def test_partial_trace_preserves_trace_and_positivity(register):
    for _ in range(5):
        rho = random_density_matrix(register.total_dim)
        red = partial_trace(rho, {"e1", "e2"}, register)
        assert np.isclose(np.trace(red), np.trace(rho))
        assert np.linalg.eigvalsh(red).min() > -1e-12


def test_partial_trace_singlet_is_maximally_mixed():
    reg = SpinRegister((SpinSite("e1", 0.5), SpinSite("e2", 0.5)))
    rho = projector(pair_basis()["s"])
    red = partial_trace(rho, {"e1"}, reg)
    assert np.allclose(red, np.eye(2) / 2)


def test_partial_trace_invalid_labels(register):
    with pytest.raises(KeyError):
        partial_trace(np.eye(24) / 24, {"bogus"}, register)


def test_pair_basis_orthonormal_and_complete():
    basis = pair_basis()
    names = list(basis)
    for i, a in enumerate(names):
        for j, b in enumerate(names):
            expect = 1.0 if i == j else 0.0
            assert np.isclose(np.vdot(basis[a], basis[b]), expect)
    total = sum(projector(v) for v in basis.values())
    assert np.allclose(total, np.eye(4))


def test_singlet_has_zero_total_spin():
    sx, sy, sz = spin_matrices(0.5)
    tot = [np.kron(m, np.eye(2)) + np.kron(np.eye(2), m) for m in (sx, sy, sz)]
    s2 = sum(m @ m for m in tot)
    s = pair_basis()["s"]
    assert np.linalg.norm(s2 @ s) < 1e-12


def test_check_density_matrix_rejects_bad_inputs():
    with pytest.raises(ValueError):
        check_density_matrix(np.eye(2))  # trace 2
    with pytest.raises(ValueError):
        check_density_matrix(np.array([[1.5, 0], [0, -0.5]]))  # negative eigenvalue
