"""Spin operators, composite-register embeddings and matrix utilities.

A :class:`SpinRegister` is an ordered list of subsystems (NV spin, radical
electrons, nuclei and the classical charge flag). Operators on single
sites, or on blocks of adjacent sites, are lifted to the full Hilbert
space with :func:`embed` / :func:`embed_factors`. Basis ordering is
m = s ... -s for every spin site and (|E>, |G>) for the charge flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

HERMITICITY_TOL = 1e-12


def _is_half_integer(s) -> bool:
    return s > 0 and abs(2 * s - round(2 * s)) < 1e-9


def spin_matrices(s):
    """Angular-momentum matrices (Sx, Sy, Sz) for spin quantum number s.

    Basis |s, m> ordered m = s ... -s. Dimensionless (hbar = 1); multiply
    by an angular frequency to obtain a Hamiltonian term.

    Args:
        s: half-integer spin, 2s a positive integer.

    Returns:
        Tuple of three (2s+1) x (2s+1) complex arrays.
    """
    if not _is_half_integer(s):
        raise ValueError(f"spin must be a positive half-integer, got {s}")
    dim = round(2 * s + 1)
    m = np.arange(s, -s - 0.5, -1.0)
    sz = np.diag(m).astype(complex)
    sp = np.zeros((dim, dim), dtype=complex)
    for i in range(dim - 1):
        sp[i, i + 1] = np.sqrt(s * (s + 1) - m[i + 1] * (m[i + 1] + 1))
    sx = (sp + sp.conj().T) / 2
    sy = (sp - sp.conj().T) / 2j
    return sx, sy, sz


def pauli_matrices():
    """2x2 Pauli matrices (sigma_x, sigma_y, sigma_z), eigenvalues +-1."""
    sx, sy, sz = spin_matrices(0.5)
    return 2 * sx, 2 * sy, 2 * sz


@dataclass(frozen=True)
class SpinSite:
    """One subsystem of the composite register.

    ``spin`` is the half-integer quantum number for a spin site, or None
    for the classical two-level charge flag (basis |E>, |G>).
    """

    label: str
    spin: float | None = None

    def __post_init__(self):
        if self.spin is not None and not _is_half_integer(self.spin):
            raise ValueError(f"site {self.label!r}: spin must be half-integer")

    @property
    def dim(self) -> int:
        if self.spin is None:
            return 2
        return round(2 * self.spin + 1)

    @property
    def is_charge_flag(self) -> bool:
        return self.spin is None


@dataclass(frozen=True)
class SpinRegister:
    """Ordered collection of :class:`SpinSite` defining the Hilbert space."""

    sites: tuple[SpinSite, ...]

    def __post_init__(self):
        labels = [s.label for s in self.sites]
        if len(set(labels)) != len(labels):
            raise ValueError("site labels must be unique")
        object.__setattr__(self, "sites", tuple(self.sites))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.sites)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.sites)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no site labelled {label!r} in register") from None

    def site(self, label: str) -> SpinSite:
        return self.sites[self.index(label)]


def _kron_all(mats):
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def embed(op: np.ndarray, label: str, register: SpinRegister) -> np.ndarray:
    """Lift a single-site operator to the full register (Kronecker with
    identities on every other site, in register order)."""
    return embed_factors(register, {label: op})


def embed_factors(register: SpinRegister, factors: dict) -> np.ndarray:
    """Lift several operators at once.

    ``factors`` maps a site label, or a tuple of *adjacent* site labels,
    to the operator acting on that site / block. Remaining sites get
    identities.
    """
    order = []
    for key, op in factors.items():
        labels = (key,) if isinstance(key, str) else tuple(key)
        start = register.index(labels[0])
        span = register.labels[start:start + len(labels)]
        if span != labels:
            raise ValueError(f"sites {labels} are not adjacent in register order")
        op = np.asarray(op, dtype=complex)
        block_dim = int(np.prod(register.dims[start:start + len(labels)]))
        if op.shape != (block_dim, block_dim):
            raise ValueError(
                f"operator for {labels} has shape {op.shape}, expected "
                f"({block_dim}, {block_dim})")
        order.append((start, len(labels), op))
    order.sort()
    for (a, na, _), (b, _, _) in zip(order, order[1:]):
        if b < a + na:
            raise ValueError("overlapping factors")

    mats = []
    i = 0
    by_start = {start: (length, op) for start, length, op in order}
    while i < len(register.sites):
        if i in by_start:
            length, op = by_start[i]
            mats.append(op)
            i += length
        else:
            mats.append(np.eye(register.dims[i], dtype=complex))
            i += 1
    return _kron_all(mats)


def partial_trace(rho: np.ndarray, keep, register: SpinRegister) -> np.ndarray:
    """Reduced density operator on the kept sites (register order).

    Trace-preserving; ``keep`` is an iterable of site labels.
    """
    dims = list(register.dims)
    n = len(dims)
    keep_idx = sorted(register.index(l) for l in set(keep))
    if not keep_idx:
        raise ValueError("keep set must name at least one site")
    t = np.asarray(rho, dtype=complex).reshape(dims + dims)
    traced = 0
    for site in range(n):
        if site in keep_idx:
            continue
        ax1 = site - traced
        ax2 = ax1 + (n - traced)
        t = np.trace(t, axis1=ax1, axis2=ax2)
        traced += 1
    d = int(np.prod([dims[i] for i in keep_idx]))
    return t.reshape(d, d)


def pair_basis() -> dict[str, np.ndarray]:
    """Singlet/triplet basis of two spin-1/2 electrons.

    Product basis ordered (uu, ud, du, dd); |s> = (ud - du)/sqrt(2),
    |t0> = (ud + du)/sqrt(2), |t+> = uu, |t-> = dd.
    """
    uu = np.array([1, 0, 0, 0], dtype=complex)
    ud = np.array([0, 1, 0, 0], dtype=complex)
    du = np.array([0, 0, 1, 0], dtype=complex)
    dd = np.array([0, 0, 0, 1], dtype=complex)
    s = (ud - du) / np.sqrt(2)
    t0 = (ud + du) / np.sqrt(2)
    return {"s": s, "t0": t0, "t+": uu, "t-": dd}


def projector(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    return np.outer(vec, vec.conj())


def is_hermitian(op: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    op = np.asarray(op)
    scale = np.linalg.norm(op)
    if scale == 0:
        return True
    return np.linalg.norm(op - op.conj().T) <= tol * scale


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def check_density_matrix(rho: np.ndarray, tol: float = 1e-9) -> None:
    """Raise ValueError unless rho is Hermitian, unit-trace and PSD."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if abs(np.trace(rho) - 1.0) > max(tol, 1e-9):
        raise ValueError(f"density matrix trace {np.trace(rho)} != 1")
    if not is_hermitian(rho, tol=1e-9):
        raise ValueError("density matrix is not Hermitian")
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    if w.min() < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {w.min()}")
