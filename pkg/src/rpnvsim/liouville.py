"""Lindblad generator assembly and vectorization.

The master equation is

    rho' = -i [H, rho] + sum_j r_j ( L_j rho L_j+ - 1/2 {L_j+ L_j, rho} )

which reproduces the per-term conventions used throughout: recombination
enters as (k/2){2 L rho L+ - ...} with r = k_s (singlet) and k_t (each
triplet channel), NV dephasing as gamma {Sz rho Sz - 1/2 ...} with
r = gamma, and radical relaxation as (Gamma/2){2 sigma rho sigma - ...}
with r = Gamma for each Pauli on each electron. The superoperator acts on
column-stacked density matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

from .hamiltonian import CHARGE_SITE, ELECTRON_SITES, NV_SITE, RateParams
from .spinalg import (SpinRegister, embed_factors, pair_basis, pauli_matrices,
                      projector, spin_matrices)

TRACE_TOL = 1e-9


@dataclass(frozen=True)
class JumpTerm:
    """One dissipator: dimensionless operator with a rate in 1/s."""

    operator: np.ndarray
    rate: float
    label: str = ""

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("jump rate must be non-negative")
        object.__setattr__(self, "operator", np.asarray(self.operator, dtype=complex))


def recombination_jumps(rates: RateParams, register: SpinRegister) -> list[JumpTerm]:
    """Spin-selective recombination |u, G><u, E| for u in {s, t0, t+, t-}.

    Rates: k_s for the singlet channel, k_t for each triplet channel. With
    k_s = k_t = k the charge-separated population obeys P_E' = -k P_E.
    """
    basis = pair_basis()
    eg = np.array([[0.0, 0.0], [1.0, 0.0]])  # |G><E| on the (E, G) flag
    jumps = []
    for name in ("s", "t0", "t+", "t-"):
        op = embed_factors(register, {
            ELECTRON_SITES: projector(basis[name]),
            CHARGE_SITE: eg,
        })
        rate = rates.k_s if name == "s" else rates.k_t
        jumps.append(JumpTerm(op, rate, label=f"recombination[{name}]"))
    return jumps


def dephasing_jump(gamma: float, register: SpinRegister) -> JumpTerm | None:
    """NV pure dephasing, L = Sz with rate gamma. Returns None when gamma = 0."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if gamma == 0.0:
        return None
    sz = spin_matrices(register.site(NV_SITE).spin)[2]
    return JumpTerm(embed_factors(register, {NV_SITE: sz}), gamma, label="nv-dephasing")


def relaxation_jumps(big_gamma: float, register: SpinRegister) -> list[JumpTerm]:
    """Radical spin relaxation: sigma_x, sigma_y, sigma_z on each electron.

    Each of the six jumps carries the rate Gamma, i.e. the (Gamma/2)
    {2 L rho L+ - ...} form per noise operator.
    """
    if big_gamma < 0:
        raise ValueError("Gamma must be non-negative")
    if big_gamma == 0.0:
        return []
    paulis = pauli_matrices()
    names = ("x", "y", "z")
    return [
        JumpTerm(embed_factors(register, {lab: p}), big_gamma,
                 label=f"relaxation[{lab},{n}]")
        for lab in ELECTRON_SITES
        for p, n in zip(paulis, names)
    ]


@dataclass(frozen=True)
class Liouvillian:
    """Coherent part plus dissipators; acts on N^2 column-stacked vectors."""

    H: np.ndarray
    jumps: tuple[JumpTerm, ...]
    dim: int

    def matrix(self) -> np.ndarray:
        """Dense superoperator (column-stacking: vec(A X B) = (B^T kron A) vec X)."""
        n = self.dim
        ident = np.eye(n, dtype=complex)
        m = -1j * (np.kron(ident, self.H) - np.kron(self.H.T, ident))
        for j in self.jumps:
            if j.rate == 0.0:
                continue
            l = j.operator
            ll = l.conj().T @ l
            m += j.rate * (
                np.kron(l.conj(), l)
                - 0.5 * np.kron(ident, ll)
                - 0.5 * np.kron(ll.T, ident)
            )
        return m

    def matrix_sparse(self) -> sps.csr_matrix:
        """Sparse CSR variant of :meth:`matrix` for Krylov matvecs."""
        n = self.dim
        ident = sps.identity(n, dtype=complex, format="csr")
        h = sps.csr_matrix(self.H)
        m = -1j * (sps.kron(ident, h) - sps.kron(h.T, ident))
        for j in self.jumps:
            if j.rate == 0.0:
                continue
            l = sps.csr_matrix(j.operator)
            ll = (l.conj().T @ l).tocsr()
            m = m + j.rate * (
                sps.kron(l.conj(), l)
                - 0.5 * sps.kron(ident, ll)
                - 0.5 * sps.kron(ll.T, ident)
            )
        return m.tocsr()

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """rho' for a matrix-form density operator (direct, no vectorization)."""
        h = self.H
        out = -1j * (h @ rho - rho @ h)
        for j in self.jumps:
            if j.rate == 0.0:
                continue
            l = j.operator
            ll = l.conj().T @ l
            out += j.rate * (l @ rho @ l.conj().T - 0.5 * (ll @ rho + rho @ ll))
        return out


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Column-stacked vec(rho)."""
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvectorize(vec: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(vec, dtype=complex).reshape((dim, dim), order="F")


def assemble(h_total: np.ndarray, jumps) -> Liouvillian:
    """Build the generator and check it preserves the trace numerically."""
    h = np.asarray(h_total, dtype=complex)
    n = h.shape[0]
    jumps = tuple(j for j in jumps if j is not None)
    for j in jumps:
        if j.operator.shape != (n, n):
            raise ValueError(
                f"jump {j.label!r} has shape {j.operator.shape}, expected {(n, n)}")
    lv = Liouvillian(H=h, jumps=jumps, dim=n)
    # trace preservation: vec(I)^T M must vanish
    m = lv.matrix_sparse() if n > 64 else lv.matrix()
    tr = vectorize(np.eye(n))
    defect = np.linalg.norm(np.asarray(tr @ m).ravel())
    scale = max(1.0, abs(h).max())
    if defect > 1e-7 * scale:
        raise ValueError(f"generator does not preserve the trace (defect {defect:.2e})")
    return lv
