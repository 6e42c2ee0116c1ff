"""Full sensing model: register, operators, propagation entry points.

Besides the full-Liouvillian numeric path this module exposes two exact
reductions that the parameter sweeps rely on:

* The density matrix stays block-diagonal in the charge flag, and the
  charge-separated (EE) block obeys a closed equation
      rho_EE' = -i[H_E, rho_EE] - sum_u (k_u/2){l_u, rho_EE} + noise
  so P_E(t) = Tr rho_EE(t) never needs the recombined block.
* Within the EE block the NV factor is decoupled from the radical pair
  unless the NV-radical dipolar term is included, so rate fits can run on
  the electrons x nuclei sector alone.

Both facts are verified against the full propagation in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import expm

from .analytics import AnalyticParams
from .constants import GYRO_E
from .geometry import (FieldVector, Geometry, bfield_from_angles, image_charge_field,
                       lab_to_nv_frame, transverse_component)
from .hamiltonian import (CHARGE_SITE, ELECTRON_SITES, NV_SITE, NVParams, RateParams,
                          RPParams, build_H_dipolar, build_H_NV, build_H_RP,
                          build_H_total, build_register)
from .liouville import (JumpTerm, Liouvillian, assemble, dephasing_jump,
                        recombination_jumps, relaxation_jumps)
from .propagate import SignalTrace, TimeGrid, initial_state, observables, \
    propagate_dense, propagate_krylov
from .spinalg import SpinRegister, embed_factors, pair_basis, pauli_matrices, \
    projector, spin_matrices


@dataclass(frozen=True)
class BFieldSpec:
    """Static field in NV-frame spherical coordinates (tesla, rad)."""

    b0: float = 0.05e-3
    theta: float = np.pi / 2
    phi: float = 2.0

    def vector(self) -> FieldVector:
        return bfield_from_angles(self.b0, self.theta, self.phi)


@dataclass(frozen=True)
class SensorModel:
    """All physical parameters of one simulation instance."""

    nv: NVParams = NVParams()
    rp: RPParams = RPParams()
    rates: RateParams = RateParams()
    geometry: Geometry = Geometry()
    bfield: BFieldSpec = BFieldSpec()
    include_dipolar: bool = False

    # -- geometry-derived quantities -------------------------------------

    def efield_nv(self) -> FieldVector:
        return lab_to_nv_frame(image_charge_field(self.geometry), self.geometry)

    def e_perp(self) -> float:
        return transverse_component(self.efield_nv())[0]

    def omega(self) -> float:
        """Bare Rabi frequency 2 k_perp E_perp, rad/s."""
        return 2.0 * self.nv.k_perp * self.e_perp()

    def analytic_params(self, k: float | None = None) -> AnalyticParams:
        k = self.rates.k_s if k is None else k
        return AnalyticParams(Omega=self.omega(), k=k, gamma=self.rates.gamma)

    # -- operator assembly ------------------------------------------------

    def register(self) -> SpinRegister:
        return build_register(self.rp.hyperfines)

    def hamiltonians(self, register: SpinRegister | None = None,
                     theta: float | None = None, phi: float | None = None):
        """(H_total, H_E, H_G) on the full register."""
        register = register or self.register()
        bspec = self.bfield
        if theta is not None or phi is not None:
            bspec = replace(bspec, theta=theta if theta is not None else bspec.theta,
                            phi=phi if phi is not None else bspec.phi)
        b = bspec.vector()
        e = self.efield_nv()
        e0 = FieldVector(np.zeros(3), frame=e.frame)
        h_nv = build_H_NV(self.nv, b, e, register)
        h_rp = build_H_RP(self.rp, b, register)
        h_nv0 = build_H_NV(self.nv, b, e0, register)
        h_dd = build_H_dipolar(self.geometry, register, self.nv.gyro) \
            if self.include_dipolar else None
        h_total = build_H_total(h_nv, h_rp, h_nv0, register, h_dd)
        h_e = h_nv + h_rp if h_dd is None else h_nv + h_rp + h_dd
        return h_total, h_e, h_nv0

    def jumps(self, register: SpinRegister | None = None) -> list[JumpTerm]:
        register = register or self.register()
        out = recombination_jumps(self.rates, register)
        deph = dephasing_jump(self.rates.gamma, register)
        if deph is not None:
            out.append(deph)
        out.extend(relaxation_jumps(self.rates.Gamma, register))
        return out

    def liouvillian(self, register: SpinRegister | None = None) -> Liouvillian:
        register = register or self.register()
        h_total, _, _ = self.hamiltonians(register)
        return assemble(h_total, self.jumps(register))

    def initial_state(self, register: SpinRegister | None = None) -> np.ndarray:
        return initial_state(register or self.register())

    # -- numeric signal ----------------------------------------------------

    def numeric_signal(self, grid: TimeGrid, method: str = "dense",
                       krylov_m: int = 30, krylov_tol: float = 1e-8) -> SignalTrace:
        """Full-model P(t), P_E(t), P_G(t) via the Liouvillian."""
        register = self.register()
        lv = self.liouvillian(register)
        rho0 = self.initial_state(register)
        if method == "dense":
            traj = propagate_dense(lv, rho0, grid)
            tag = "numeric-dense"
        elif method == "krylov":
            traj = propagate_krylov(lv, rho0, grid, m=krylov_m, tol=krylov_tol)
            tag = "numeric-krylov"
        else:
            raise ValueError(f"unknown propagation method {method!r}")
        return observables(traj, register, grid.times, tag)

    # -- exact charge-block reductions --------------------------------------

    def _rp_sector_ops(self):
        """Operators on the electrons x nuclei sector (no NV, no charge)."""
        register = build_register(self.rp.hyperfines, with_charge=False, with_nv=False)
        basis = pair_basis()
        p_s = embed_factors(register, {ELECTRON_SITES: projector(basis["s"])})
        p_t = sum(embed_factors(register, {ELECTRON_SITES: projector(basis[u])})
                  for u in ("t0", "t+", "t-"))
        nuc_dim = register.total_dim // 4
        rho0 = embed_factors(register, {ELECTRON_SITES: projector(basis["s"])}) / nuc_dim
        return register, p_s, p_t, rho0

    def pe_trace(self, times: np.ndarray, theta: float | None = None,
                 phi: float | None = None) -> np.ndarray:
        """P_E(t) from the closed charge-separated block.

        Uses the radical-pair sector alone when the dipolar term is off;
        with it on, the NV spin is kept in the block. Radical relaxation
        (Gamma > 0) switches to a vectorized Lindblad propagation of the
        block; otherwise a non-Hermitian sandwich evolution suffices.
        """
        times = np.asarray(times, dtype=float)
        dts = np.diff(times)
        if times.size < 2 or np.any(dts <= 0):
            raise ValueError("times must be strictly increasing with >= 2 samples")
        if not np.allclose(dts, dts[0], rtol=1e-10, atol=0.0):
            raise ValueError("pe_trace expects a uniform time grid")
        dt = dts[0]

        rates = self.rates
        if self.include_dipolar:
            register = build_register(self.rp.hyperfines, with_charge=False)
            bspec = self.bfield
            if theta is not None or phi is not None:
                bspec = replace(bspec, theta=theta if theta is not None else bspec.theta,
                                phi=phi if phi is not None else bspec.phi)
            b = bspec.vector()
            e = self.efield_nv()
            h = build_H_NV(self.nv, b, e, register) + build_H_RP(self.rp, b, register) \
                + build_H_dipolar(self.geometry, register, self.nv.gyro)
            basis = pair_basis()
            p_s = embed_factors(register, {ELECTRON_SITES: projector(basis["s"])})
            p_t = sum(embed_factors(register, {ELECTRON_SITES: projector(basis[u])})
                      for u in ("t0", "t+", "t-"))
            nv1 = np.zeros((3, 3)); nv1[0, 0] = 1.0
            nuc_dim = register.total_dim // 12
            rho0 = embed_factors(register, {
                NV_SITE: nv1, ELECTRON_SITES: projector(basis["s"])}) / nuc_dim
        else:
            register, p_s, p_t, rho0 = self._rp_sector_ops()
            bspec = self.bfield
            if theta is not None or phi is not None:
                bspec = replace(bspec, theta=theta if theta is not None else bspec.theta,
                                phi=phi if phi is not None else bspec.phi)
            h = build_H_RP(self.rp, bspec.vector(), register)

        loss = 0.5 * (rates.k_s * p_s + rates.k_t * p_t)
        n = register.total_dim
        out = np.empty(times.size)
        if rates.Gamma == 0.0:
            u = expm((-1j * h - loss) * dt)
            u_t0 = expm((-1j * h - loss) * times[0]) if times[0] > 0 else None
            rho = rho0 if u_t0 is None else u_t0 @ rho0 @ u_t0.conj().T
            for i in range(times.size):
                out[i] = np.real(np.trace(rho))
                rho = u @ rho @ u.conj().T
        else:
            ident = np.eye(n, dtype=complex)
            m = -1j * (np.kron(ident, h) - np.kron(h.T, ident))
            m -= np.kron(ident, loss) + np.kron(loss.T, ident)
            paulis = pauli_matrices()
            for lab in ELECTRON_SITES:
                for p in paulis:
                    l = embed_factors(register, {lab: p})
                    ll = l.conj().T @ l
                    m += rates.Gamma * (np.kron(l.conj(), l)
                                        - 0.5 * np.kron(ident, ll)
                                        - 0.5 * np.kron(ll.T, ident))
            u = expm(m * dt)
            v = rho0.reshape(-1, order="F")
            if times[0] > 0:
                v = expm(m * times[0]) @ v
            tr = np.eye(n).reshape(-1, order="F")
            for i in range(times.size):
                out[i] = np.real(tr @ v)
                v = u @ v
        return out

    def reduced_signal_model(self) -> "SensorModel":
        """Model with the nuclear register dropped.

        Exact for the NV signal whenever k_s = k_t and the dipolar term is
        off: the NV factor of the charge-separated block is then decoupled
        from the radical-pair spins, so P(t) does not depend on the
        hyperfine register (verified against the full model in tests).
        """
        if self.include_dipolar:
            raise ValueError("reduction invalid with the dipolar coupling enabled")
        if self.rates.k_s != self.rates.k_t:
            raise ValueError("reduction requires k_s == k_t")
        return replace(self, rp=replace(self.rp, hyperfines=()))


def numeric_signal_fn(model: SensorModel, grid: TimeGrid, method: str = "dense"):
    """signal(k, T) callable for the sensitivity pipeline.

    Propagates the model with k_s = k_t = k over the grid once per rate
    value and interpolates P(T) on the grid points (T must be grid times).
    """
    cache: dict[float, np.ndarray] = {}

    def signal(k: float, T: np.ndarray) -> np.ndarray:
        if k not in cache:
            m = replace(model, rates=replace(model.rates, k_s=k, k_t=k))
            cache[k] = m.numeric_signal(grid, method=method).P
        p = cache[k]
        return np.interp(np.asarray(T, dtype=float), grid.times, p)

    return signal
