"""Decoupling-pulse identity: U0 Uz U0 U0 Uz U0 cancels transverse fields.

The gate Uz = |1><1| - |0><0| + |-1><-1| flips the sign of every term
linear in Sx or Sy while leaving Sz^2-type and {Sx^2 - Sy^2,
Sx Sy + Sy Sx} terms alone, so the palindromic sequence averages the
transverse magnetic terms away to second order in the pulse spacing tau:
U = exp(-i 4 tau [H_kept + O(tau^2)]).
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm, logm

from .spinalg import is_hermitian

UZ = np.diag([1.0, -1.0, 1.0]).astype(complex)


class TooLongTauError(ValueError):
    """Pulse spacing too long for an unambiguous matrix logarithm."""


def _check_h(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.shape != (3, 3):
        raise ValueError("expected a 3x3 NV Hamiltonian")
    if not is_hermitian(h, tol=1e-10):
        raise ValueError("Hamiltonian must be Hermitian")
    return h


def sequence_unitary(h: np.ndarray, tau: float) -> np.ndarray:
    """Exact unitary of the sequence U0 Uz U0 U0 Uz U0, U0 = exp(-i h tau)."""
    h = _check_h(h)
    u0 = expm(-1j * h * tau)
    return u0 @ UZ @ u0 @ u0 @ UZ @ u0


def kept_hamiltonian(h: np.ndarray) -> np.ndarray:
    """Part of h that commutes with Uz (the sequence's target Hamiltonian)."""
    h = _check_h(h)
    return 0.5 * (h + UZ @ h @ UZ)


def sequence_error(h: np.ndarray, tau: float,
                   h_target: np.ndarray | None = None) -> float:
    """Spectral norm || U - exp(-i 4 tau H_target) ||.

    ``h_target`` defaults to the Uz-symmetric part of ``h``.
    """
    target = kept_hamiltonian(h) if h_target is None else _check_h(h_target)
    u = sequence_unitary(h, tau)
    return float(np.linalg.norm(u - expm(-1j * 4 * tau * target), 2))


def effective_hamiltonian_error(h: np.ndarray, tau: float,
                                h_target: np.ndarray | None = None) -> float:
    """|| (i / 4 tau) log(U exp(+i 4 tau H_target)) ||, rad/s.

    The deviation of the sequence's effective Hamiltonian from the target.
    Requires 4 tau ||h|| < pi so the principal logarithm is unambiguous.
    """
    h = _check_h(h)
    target = kept_hamiltonian(h) if h_target is None else _check_h(h_target)
    hnorm = float(np.linalg.norm(h, 2))
    if 4 * tau * hnorm >= np.pi:
        raise TooLongTauError(
            f"4 tau ||H|| = {4 * tau * hnorm:.3f} >= pi; shorten the pulse spacing")
    u = sequence_unitary(h, tau)
    defect = u @ expm(1j * 4 * tau * target)
    gen = logm(defect)
    return float(np.linalg.norm(1j * gen / (4 * tau), 2))


def error_scaling(h: np.ndarray, taus: np.ndarray,
                  h_target: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """Sequence errors over a tau range and their log-log slope."""
    taus = np.asarray(taus, dtype=float)
    errs = np.array([sequence_error(h, t, h_target) for t in taus])
    slope = float(np.polyfit(np.log(taus), np.log(errs), 1)[0])
    return errs, slope
