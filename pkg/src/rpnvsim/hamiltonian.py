"""Hamiltonian assembly: radical pair, NV centre, charge blocks, dipolar.

All operators are returned embedded in the full register and expressed as
angular frequencies (rad/s). The magnetic field enters through a single
NV-frame vector shared by the NV and radical-pair terms (see
:func:`rpnvsim.geometry.bfield_from_angles`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import D_GS, GYRO_E, HBAR, K_PAR, K_PERP, MU_0, mT_to_rad_per_s
from .geometry import NV, FieldVector, Geometry
from .spinalg import SpinRegister, embed_factors, is_hermitian, spin_matrices

NV_SITE = "nv"
ELECTRON_SITES = ("e1", "e2")
CHARGE_SITE = "charge"


@dataclass(frozen=True)
class NVParams:
    """NV ground-state constants (angular frequencies)."""

    D: float = D_GS                # zero-field splitting, rad/s
    k_par: float = K_PAR           # rad/s per V/m
    k_perp: float = K_PERP         # rad/s per V/m
    gyro: float = GYRO_E           # rad/s per tesla

    def __post_init__(self):
        if self.D <= 0:
            raise ValueError("zero-field splitting must be positive")


@dataclass(frozen=True)
class HyperfineTensor:
    """Hyperfine coupling from principal values (mT) and principal axes.

    ``principal_axes`` is a 3x3 matrix whose *columns* are the unit
    principal axes (axis i belongs to principal_values[i]). Printed axis
    tables are accepted up to a small non-orthogonality (1e-3) and
    polished to the nearest orthogonal matrix, which preserves the
    principal values exactly.
    """

    nucleus_label: str
    principal_values: tuple[float, float, float]
    principal_axes: np.ndarray
    spin: float = 0.5

    def __post_init__(self):
        axes = np.asarray(self.principal_axes, dtype=float)
        if axes.shape != (3, 3):
            raise ValueError("principal_axes must be 3x3")
        defect = np.linalg.norm(axes.T @ axes - np.eye(3))
        if defect > 1e-3:
            raise ValueError(
                f"principal axes of {self.nucleus_label!r} are not orthonormal "
                f"(defect {defect:.2e})")
        u, _, vt = np.linalg.svd(axes)
        object.__setattr__(self, "principal_axes", u @ vt)
        object.__setattr__(self, "principal_values", tuple(float(v) for v in self.principal_values))

    def matrix_mT(self) -> np.ndarray:
        """Symmetric coupling tensor in mT: R diag(Aii) R^T."""
        r = self.principal_axes
        return r @ np.diag(self.principal_values) @ r.T

    def matrix(self, gyro: float = GYRO_E) -> np.ndarray:
        """Coupling tensor in rad/s."""
        return mT_to_rad_per_s(self.matrix_mT(), gyro)


# Dominant anisotropic hyperfine coupling of the flavin radical used as the
# default single-nucleus model: proton H6, principal values in mT. The
# printed axis table enters as the rotation matrix R itself (columns are
# the principal axes); this reading reproduces the reference effective
# recombination rate 0.1425 MHz, the transposed reading does not.
H6_TENSOR = HyperfineTensor(
    nucleus_label="H6",
    principal_values=(-0.218, -0.202, -0.054),
    principal_axes=np.array([
        [-0.0362, 0.2937, 0.9552],
        [0.7948, 0.5879, -0.1507],
        [-0.6059, 0.7537, -0.2546],
    ]),
    spin=0.5,
)


@dataclass(frozen=True)
class RPParams:
    """Radical-pair parameters: hyperfine couplings per electron."""

    hyperfines: tuple[tuple[int, HyperfineTensor], ...] = ((1, H6_TENSOR),)
    gyro: float = GYRO_E

    def __post_init__(self):
        for electron, _ in self.hyperfines:
            if electron not in (1, 2):
                raise ValueError("electron index must be 1 or 2")


@dataclass(frozen=True)
class RateParams:
    """Incoherent rates in 1/s."""

    k_s: float = 0.02e6     # singlet recombination
    k_t: float = 0.2e6      # triplet recombination (per channel)
    gamma: float = 0.0      # NV pure dephasing
    Gamma: float = 0.0      # radical spin relaxation (per noise operator)

    def __post_init__(self):
        if min(self.k_s, self.k_t, self.gamma, self.Gamma) < 0:
            raise ValueError("rates must be non-negative")


def build_register(hyperfines=((1, H6_TENSOR),), with_charge: bool = True,
                   with_nv: bool = True) -> SpinRegister:
    """Standard register order: nv, e1, e2, nuclei..., charge."""
    from .spinalg import SpinSite

    sites = []
    if with_nv:
        sites.append(SpinSite(NV_SITE, 1.0))
    sites.append(SpinSite("e1", 0.5))
    sites.append(SpinSite("e2", 0.5))
    for _, tensor in hyperfines:
        sites.append(SpinSite(tensor.nucleus_label, tensor.spin))
    if with_charge:
        sites.append(SpinSite(CHARGE_SITE, None))
    return SpinRegister(tuple(sites))


def _spin_vector(register: SpinRegister, label: str):
    s = register.site(label).spin
    return [embed_factors(register, {label: m}) for m in spin_matrices(s)]


def build_H_RP(p: RPParams, b: FieldVector, register: SpinRegister) -> np.ndarray:
    """Radical-pair Hamiltonian: electron Zeeman plus hyperfine terms.

    g_e mu_B sum_k B.S_k + sum_{k,i} S_k . A_i^k . I_i^k, embedded.
    """
    bv = b.components
    h = np.zeros((register.total_dim,) * 2, dtype=complex)
    electron_ops = {lab: _spin_vector(register, lab) for lab in ELECTRON_SITES}
    for ops in electron_ops.values():
        for i in range(3):
            h += p.gyro * bv[i] * ops[i]
    for electron, tensor in p.hyperfines:
        s_ops = electron_ops[ELECTRON_SITES[electron - 1]]
        i_ops = _spin_vector(register, tensor.nucleus_label)
        a = tensor.matrix(p.gyro)
        for i in range(3):
            for j in range(3):
                if a[i, j] != 0.0:
                    h += a[i, j] * (s_ops[i] @ i_ops[j])
    return h


def build_H_NV(p: NVParams, b: FieldVector, e: FieldVector,
               register: SpinRegister) -> np.ndarray:
    """NV spin-1 Hamiltonian with Zeeman and Stark terms, embedded.

    (D + k_par Ez)(Sz^2 - 2/3) + g_e mu_B B.S
    - k_perp Ex (Sx^2 - Sy^2) + k_perp Ey (Sx Sy + Sy Sx)
    """
    if e.frame != NV or b.frame != NV:
        raise ValueError("build_H_NV expects NV-frame field vectors")
    sx, sy, sz = _spin_vector(register, NV_SITE)
    ident = np.eye(register.total_dim, dtype=complex)
    ex, ey, ez = e.components
    bx, by, bz = b.components
    h = (p.D + p.k_par * ez) * (sz @ sz - (2.0 / 3.0) * ident)
    h += p.gyro * (bx * sx + by * sy + bz * sz)
    h += -p.k_perp * ex * (sx @ sx - sy @ sy)
    h += p.k_perp * ey * (sx @ sy + sy @ sx)
    return h


def charge_projectors(register: SpinRegister) -> tuple[np.ndarray, np.ndarray]:
    """(P_E, P_G) projectors on the charge flag, embedded."""
    pe = embed_factors(register, {CHARGE_SITE: np.diag([1.0, 0.0])})
    pg = embed_factors(register, {CHARGE_SITE: np.diag([0.0, 1.0])})
    return pe, pg


def build_H_total(h_nv: np.ndarray, h_rp: np.ndarray, h_nv_e0: np.ndarray,
                  register: SpinRegister,
                  h_dipolar: np.ndarray | None = None) -> np.ndarray:
    """Block Hamiltonian (H_NV + H_RP [+ H_dd]) x |E><E| + H_NV|E=0 x |G><G|."""
    p_e, p_g = charge_projectors(register)
    h_e = h_nv + h_rp
    if h_dipolar is not None:
        h_e = h_e + h_dipolar
    h = h_e @ p_e + h_nv_e0 @ p_g
    if not is_hermitian(h):
        raise ValueError("total Hamiltonian is not Hermitian")
    return h


def build_H_dipolar(g: Geometry, register: SpinRegister,
                    gyro: float = GYRO_E) -> np.ndarray:
    """Point-dipole coupling between the NV spin and each radical electron.

    sum_k (mu0 gyro^2 hbar / 4 pi r_k^3)
          [ S_nv . S_k - 3 (S_nv . rhat_k)(S_k . rhat_k) ]
    with the NV-to-radical directions taken from the geometry and expressed
    in the NV frame (the common spin quantization frame).
    """
    rot = g.rotation_lab_to_nv()
    r_nv = g.nv_position
    s_nv = _spin_vector(register, NV_SITE)
    h = np.zeros((register.total_dim,) * 2, dtype=complex)
    for label, r_charge in zip(ELECTRON_SITES, g.charge_positions):
        d = r_charge - r_nv
        r = np.linalg.norm(d)
        if r < 1e-15:
            raise ValueError("zero NV-radical separation")
        rhat = rot @ (d / r)
        coupling = MU_0 * gyro**2 * HBAR / (4 * np.pi * r**3)
        s_k = _spin_vector(register, label)
        s_dot_s = sum(s_nv[i] @ s_k[i] for i in range(3))
        s_nv_r = sum(rhat[i] * s_nv[i] for i in range(3))
        s_k_r = sum(rhat[i] * s_k[i] for i in range(3))
        h += coupling * (s_dot_s - 1.5 * (s_nv_r @ s_k_r + s_k_r @ s_nv_r))
    return h
