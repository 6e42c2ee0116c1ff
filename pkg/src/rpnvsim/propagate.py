"""Time evolution under a Liouvillian: dense reference path and Krylov path.

Both paths are exponential integrators (the generator is constant in
time), so there is no step-size error; the grid only sets where the
trajectory is sampled. The dense path exponentiates the superoperator
once per distinct step length; the Krylov path approximates the
exponential action on the vectorized state with an Arnoldi subspace and
adaptive substepping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
from scipy.linalg import expm

from .hamiltonian import CHARGE_SITE, ELECTRON_SITES, NV_SITE, charge_projectors
from .liouville import Liouvillian, unvectorize, vectorize
from .spinalg import SpinRegister, check_density_matrix, embed_factors, pair_basis, projector


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling grid: n_steps points from t0 to t1 inclusive."""

    t0: float
    t1: float
    n_steps: int

    def __post_init__(self):
        if not (self.t1 > self.t0 >= 0):
            raise ValueError("need t1 > t0 >= 0")
        if self.n_steps < 2:
            raise ValueError("need at least 2 grid points")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n_steps)

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / (self.n_steps - 1)

    @classmethod
    def for_frequency(cls, t1: float, omega: float, points_per_period: int = 20,
                      t0: float = 0.0, n_min: int = 2) -> "TimeGrid":
        """Grid resolving the fastest retained frequency: dt <= 2 pi/(ppp * omega)."""
        dt_max = 2 * np.pi / (points_per_period * omega)
        n = max(n_min, int(np.ceil((t1 - t0) / dt_max)) + 1)
        return cls(t0, t1, n)


@dataclass(frozen=True)
class SignalTrace:
    """Sensor signal and charge-state populations along a time grid.

    Attributes:
        times: seconds.
        P: probability that the NV spin is in |1>.
        P_E, P_G: charge-separated / recombined populations.
        P1_E: joint probability of |1> and the charge-separated state
            (the E-branch contribution to P).
        method: provenance tag, one of numeric-dense, numeric-krylov,
            analytic.
    """

    times: np.ndarray
    P: np.ndarray
    P_E: np.ndarray
    P_G: np.ndarray
    P1_E: np.ndarray
    method: str

    def __post_init__(self):
        for name in ("P", "P_E", "P_G", "P1_E"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.min() < -1e-9 or v.max() > 1 + 1e-9:
                raise ValueError(f"{name} leaves [0, 1]: [{v.min()}, {v.max()}]")
        if np.abs(self.P_E + self.P_G - 1.0).max() > 1e-9:
            raise ValueError("P_E + P_G != 1")


def initial_state(register: SpinRegister) -> np.ndarray:
    """|1><1| x |s><s| x (I_j/d_j per nucleus) x |E><E|, embedded.

    NV prepared in m_s = +1, radical electrons in the singlet, nuclei
    maximally mixed, charge flag in the separated state.
    """
    factors = {}
    nv1 = np.zeros((3, 3))
    nv1[0, 0] = 1.0  # m ordering +1, 0, -1
    factors[NV_SITE] = nv1
    factors[ELECTRON_SITES] = projector(pair_basis()["s"])
    factors[CHARGE_SITE] = np.diag([1.0, 0.0])
    rho = embed_factors(register, factors)
    # embed_factors used identities on the nuclei; normalize them to I/d
    nuc_dim = 1
    for site in register.sites:
        if site.label not in (NV_SITE, *ELECTRON_SITES, CHARGE_SITE):
            nuc_dim *= site.dim
    return rho / nuc_dim


def propagate_dense(lv: Liouvillian, rho0: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Trajectory rho(t_i) = exp(M (t_i - t0)) rho0 via the dense superoperator.

    One matrix exponential for the (uniform) step, then repeated
    application to the vectorized state.

    Returns:
        Array of shape (n_steps, N, N).
    """
    check_density_matrix(rho0)
    n = lv.dim
    m = lv.matrix()
    step = expm(m * grid.dt)
    v = vectorize(rho0)
    if grid.t0 > 0:
        ratio = grid.t0 / grid.dt
        if abs(ratio - round(ratio)) < 1e-9:
            for _ in range(round(ratio)):
                v = step @ v
        else:
            v = expm(m * grid.t0) @ v
    out = np.empty((grid.n_steps, n, n), dtype=complex)
    for i in range(grid.n_steps):
        out[i] = unvectorize(v, n)
        if i + 1 < grid.n_steps:
            v = step @ v
    return out


class KrylovConvergenceError(RuntimeError):
    """Arnoldi step failed to reach the requested tolerance."""

    def __init__(self, residual: float, tol: float):
        super().__init__(
            f"Krylov step did not converge: achieved residual {residual:.3e} "
            f"exceeds tolerance {tol:.3e}")
        self.residual = residual
        self.tol = tol


def _expv_step(matvec, v: np.ndarray, dt: float, m: int, tol: float):
    """exp(dt*A) v by Arnoldi with adaptive substepping.

    The per-substep error is estimated from the first neglected Krylov
    component (h_{m+1,m} times the last entry of exp(tau H_m) e1); a
    substep is halved until the estimate meets the tolerance budget.
    """
    t_done = 0.0
    tau = dt
    halvings = 0
    while t_done < dt:
        tau = min(tau, dt - t_done)
        beta = np.linalg.norm(v)
        if beta == 0.0:
            return v
        q = [v / beta]
        h = np.zeros((m + 1, m), dtype=complex)
        breakdown = False
        j_used = m
        for j in range(m):
            w = matvec(q[j])
            for i in range(j + 1):
                h[i, j] = np.vdot(q[i], w)
                w = w - h[i, j] * q[i]
            # one re-orthogonalization pass for stability
            for i in range(j + 1):
                c = np.vdot(q[i], w)
                h[i, j] += c
                w = w - c * q[i]
            hn = np.linalg.norm(w)
            h[j + 1, j] = hn
            if hn < 1e-13 * max(1.0, abs(h).max()):
                breakdown = True
                j_used = j + 1
                break
            q.append(w / hn)
        hm = h[:j_used, :j_used]
        eh = expm(hm * tau)
        y = beta * eh[:, 0]
        if breakdown:
            err = 0.0
        else:
            err = float(beta * abs(h[j_used, j_used - 1]) * abs(eh[-1, 0]) * tau)
        budget = tol * max(1.0, beta) * (tau / dt if dt > 0 else 1.0)
        if err <= budget or breakdown:
            basis = np.column_stack(q[:j_used])
            v = basis @ y
            t_done += tau
            tau *= 1.5
            halvings = 0
        else:
            tau *= 0.5
            halvings += 1
            if halvings > 60:
                raise KrylovConvergenceError(residual=err, tol=budget)
    return v


def propagate_krylov(lv: Liouvillian, rho0: np.ndarray, grid: TimeGrid,
                     m: int = 30, tol: float = 1e-8) -> np.ndarray:
    """Same contract as :func:`propagate_dense` via Arnoldi exponential action."""
    if m < 2:
        raise ValueError("Krylov subspace dimension must be >= 2")
    check_density_matrix(rho0)
    n = lv.dim
    mat = lv.matrix_sparse()
    m_eff = min(m, n * n)

    def matvec(x):
        return mat @ x

    v = vectorize(rho0)
    if grid.t0 > 0:
        v = _expv_step(matvec, v, grid.t0, m_eff, tol)
    out = np.empty((grid.n_steps, n, n), dtype=complex)
    for i in range(grid.n_steps):
        out[i] = unvectorize(v, n)
        if i + 1 < grid.n_steps:
            v = _expv_step(matvec, v, grid.dt, m_eff, tol)
    return out


def observables(trajectory: np.ndarray, register: SpinRegister,
                times: np.ndarray, method: str) -> SignalTrace:
    """Extract P, P_E, P_G and the E-branch signal from a trajectory."""
    nv1 = np.zeros((3, 3))
    nv1[0, 0] = 1.0
    proj1 = embed_factors(register, {NV_SITE: nv1})
    p_e, _ = charge_projectors(register)
    p = np.real(np.einsum("tij,ji->t", trajectory, proj1))
    pe = np.real(np.einsum("tij,ji->t", trajectory, p_e))
    p1e = np.real(np.einsum("tij,ji->t", trajectory, proj1 @ p_e))
    return SignalTrace(
        times=np.asarray(times, dtype=float),
        P=p,
        P_E=pe,
        P_G=1.0 - pe,
        P1_E=p1e,
        method=method,
    )
