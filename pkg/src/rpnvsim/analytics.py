"""Closed-form signal models, sensitivity estimation and rate fitting.

The sensor signal splits into an E-branch (charge still separated) and a
G-branch (recombined). With equal recombination rates k and NV dephasing
gamma the approximate closed forms are

    P_E-branch(t) = [1 + e^{-gamma t} cos(Omega t)] e^{-k t} / 2
    P_G-branch(t) = (1 - e^{-k t}) / 2
    P(t)          = [1 + cos(Omega t) e^{-(k+gamma) t}] / 2

valid for gamma << k_perp E_perp. The general dephasing solution keeps
the damped-oscillator phase shift: the cosine becomes
C cos(Omega' t - alpha) with Omega' = sqrt(Omega^2 - gamma^2),
C = sqrt(1 + (gamma/Omega')^2) and cos(alpha) = Omega'/sqrt(Omega'^2 +
gamma^2).

Shot-noise sensitivity: eta(T) = dP(T) sqrt(T) / |dP/dk| with the
single-shot projection noise dP = sqrt(P (1 - P)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit


class OutOfRegimeError(ValueError):
    """Requested closed form outside its validity regime (overdamped)."""


class FitFailureError(RuntimeError):
    """Rate fit could not be performed on the supplied trace."""


@dataclass(frozen=True)
class AnalyticParams:
    """Parameters of the closed-form models.

    Attributes:
        Omega: bare Rabi frequency 2 k_perp E_perp, rad/s.
        k: charge recombination rate, 1/s.
        gamma: NV dephasing rate, 1/s.
    """

    Omega: float
    k: float
    gamma: float = 0.0

    def __post_init__(self):
        if self.Omega <= 0:
            raise ValueError("Omega must be positive")
        if self.k < 0 or self.gamma < 0:
            raise ValueError("rates must be non-negative")


def analytic_signal(p: AnalyticParams, t):
    """Weak-noise closed-form signal.

    Returns:
        (P, P_E_branch, P_G_branch) evaluated at t (array or scalar).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    env = np.exp(-p.k * t)
    pe = (1.0 + np.exp(-p.gamma * t) * np.cos(p.Omega * t)) * env / 2.0
    pg = (1.0 - env) / 2.0
    ptot = (1.0 + np.cos(p.Omega * t) * np.exp(-(p.k + p.gamma) * t)) / 2.0
    return ptot, pe, pg


def analytic_signal_general(p: AnalyticParams, t):
    """General dephasing solution (underdamped regime gamma < Omega).

    P_E-branch = [1 + e^{-gamma t} C cos(Omega' t - alpha)] e^{-k t}/2 with
    Omega' = sqrt(Omega^2 - gamma^2); the total signal adds the G-branch
    k * integral of P_E-branch, evaluated in closed form.

    Returns:
        (P, P_E_branch) at t.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    if p.gamma >= p.Omega:
        raise OutOfRegimeError(
            f"overdamped: gamma = {p.gamma:.3e} >= 2 k_perp E_perp = {p.Omega:.3e}")
    om = np.sqrt(p.Omega**2 - p.gamma**2)
    c = np.sqrt(1.0 + (p.gamma / om) ** 2)
    alpha = np.arccos(om / np.sqrt(om**2 + p.gamma**2))
    pe = (1.0 + np.exp(-p.gamma * t) * c * np.cos(om * t - alpha)) * np.exp(-p.k * t) / 2.0
    # k * int_0^t P_E(tau) dtau in closed form
    a = p.k + p.gamma
    osc0 = (a * np.cos(alpha) + om * np.sin(alpha)) / (a**2 + om**2)
    osc = np.exp(-a * t) * (a * np.cos(om * t - alpha) - om * np.sin(om * t - alpha)) \
        / (a**2 + om**2)
    integral = (1.0 - np.exp(-p.k * t)) / (2.0 * p.k) if p.k > 0 else t / 2.0
    integral = integral + c * (osc0 - osc) / 2.0
    ptot = pe + p.k * integral
    return ptot, pe


def general_envelope_constants(p: AnalyticParams) -> tuple[float, float, float]:
    """(Omega', C, alpha) of the general dephasing solution."""
    if p.gamma >= p.Omega:
        raise OutOfRegimeError("overdamped regime")
    om = np.sqrt(p.Omega**2 - p.gamma**2)
    c = np.sqrt(1.0 + (p.gamma / om) ** 2)
    alpha = np.arccos(om / np.sqrt(om**2 + p.gamma**2))
    return om, c, alpha


def eta_analytic(p: AnalyticParams, t):
    """Closed-form shot-noise sensitivity of the approximate signal.

    eta(T) = |e^{(gamma+k)T} sec(Omega T)| sqrt(1 - e^{-2(gamma+k)T}
    cos^2(Omega T)) / sqrt(T), in (1/s)/sqrt(Hz).
    """
    t = np.asarray(t, dtype=float)
    a = p.gamma + p.k
    cos = np.cos(p.Omega * t)
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = np.abs(np.exp(a * t) / cos) * np.sqrt(1.0 - np.exp(-2 * a * t) * cos**2) \
            / np.sqrt(t)
    return eta


@dataclass(frozen=True)
class SensitivityCurve:
    """Sensitivity vs interrogation time with its located optimum.

    eta is in (1/s)/sqrt(Hz); divide by 1e3 for kHz/sqrt(Hz).
    """

    T: np.ndarray
    eta: np.ndarray
    T_op: float
    eta_op: float
    on_boundary: bool = False


DIVERGENT_SENSITIVITY = np.inf


def sensitivity(signal, T: np.ndarray, k: float, delta_k: float | None = None) -> np.ndarray:
    """Shot-noise sensitivity from a parameterized signal.

    Args:
        signal: callable signal(k, T_array) -> P array.
        T: interrogation times, s.
        k: rate at which the derivative is taken, 1/s.
        delta_k: central-difference step (default 1e-3 * k).

    Returns:
        eta(T); entries where |dP/dk| < 1e-18 are flagged as infinite.
    """
    T = np.asarray(T, dtype=float)
    if delta_k is None:
        delta_k = 1e-3 * k
    if delta_k <= 0:
        raise ValueError("delta_k must be positive")
    p0 = np.asarray(signal(k, T), dtype=float)
    if np.any((p0 < -1e-9) | (p0 > 1 + 1e-9)):
        bad = p0[(p0 < -1e-9) | (p0 > 1 + 1e-9)]
        raise ValueError(f"signal must lie in (0, 1); got e.g. {bad[:3]}")
    p0 = np.clip(p0, 1e-15, 1.0 - 1e-15)
    dpdk = (np.asarray(signal(k + delta_k, T)) - np.asarray(signal(k - delta_k, T))) \
        / (2.0 * delta_k)
    dp = np.sqrt(p0 * (1.0 - p0))
    eta = np.full_like(T, DIVERGENT_SENSITIVITY)
    ok = np.abs(dpdk) >= 1e-18
    eta[ok] = dp[ok] * np.sqrt(T[ok]) / np.abs(dpdk[ok])
    return eta


def find_optimum(T: np.ndarray, eta: np.ndarray) -> SensitivityCurve:
    """Grid minimum refined by a local parabolic fit.

    Flags the optimum when it falls on the first or last grid point.
    """
    T = np.asarray(T, dtype=float)
    eta = np.asarray(eta, dtype=float)
    finite = np.isfinite(eta)
    if not finite.any():
        raise ValueError("sensitivity curve has no finite values")
    idx = np.flatnonzero(finite)[np.argmin(eta[finite])]
    if idx == 0 or idx == len(T) - 1:
        return SensitivityCurve(T, eta, float(T[idx]), float(eta[idx]), on_boundary=True)
    x = T[idx - 1:idx + 2]
    y = eta[idx - 1:idx + 2]
    if not np.all(np.isfinite(y)):
        return SensitivityCurve(T, eta, float(T[idx]), float(eta[idx]))
    coef = np.polyfit(x, y, 2)
    if coef[0] <= 0:
        return SensitivityCurve(T, eta, float(T[idx]), float(eta[idx]))
    t_op = float(np.clip(-coef[1] / (2 * coef[0]), x[0], x[-1]))
    eta_op = float(np.polyval(coef, t_op))
    return SensitivityCurve(T, eta, t_op, eta_op)


def default_T_grid(k: float, gamma: float = 0.0, n: int = 2000) -> np.ndarray:
    """Optimum-search grid T in (0, 5/(k+gamma)]."""
    t_max = 5.0 / (k + gamma)
    return np.linspace(t_max / n, t_max, n)


@dataclass(frozen=True)
class RateFit:
    """Single-exponential fit of the charge-separated population."""

    k_eff: float
    residual: float
    window: tuple[float, float]

    def __post_init__(self):
        if self.k_eff <= 0:
            raise FitFailureError(f"fitted rate is not positive: {self.k_eff}")


def fit_keff(times: np.ndarray, p_e: np.ndarray) -> RateFit:
    """Fit P_E(t) ~ exp(-k_eff t).

    A log-linear regression over the positive part of the trace seeds a
    nonlinear least-squares fit restricted to t <= min(3/k_init, t_max).
    """
    times = np.asarray(times, dtype=float)
    p_e = np.asarray(p_e, dtype=float)
    if times.shape != p_e.shape or times.size < 3:
        raise FitFailureError("need matching time/population arrays with >= 3 samples")
    pos = p_e > 0
    if pos.sum() < 3:
        raise FitFailureError("trace is not positive over the fit window")
    k_init = -np.polyfit(times[pos], np.log(p_e[pos]), 1)[0]
    if not np.isfinite(k_init) or k_init <= 0:
        raise FitFailureError(f"trace does not decay (k_init = {k_init:.3e})")
    t_hi = min(3.0 / k_init, times[-1])
    win = times <= t_hi
    if win.sum() < 3:
        win = np.ones_like(times, dtype=bool)
    try:
        popt, _ = curve_fit(lambda t, k: np.exp(-k * t), times[win], p_e[win],
                            p0=[k_init])
    except RuntimeError as exc:
        raise FitFailureError(f"nonlinear fit failed: {exc}") from exc
    k_eff = float(popt[0])
    resid = float(np.sqrt(np.mean((np.exp(-k_eff * times[win]) - p_e[win]) ** 2)))
    return RateFit(k_eff=k_eff, residual=resid, window=(float(times[win][0]), float(t_hi)))


def keff_map(pe_solver, thetas: np.ndarray, phis: np.ndarray,
             times: np.ndarray) -> np.ndarray:
    """Fitted k_eff over a (theta, phi) grid.

    Args:
        pe_solver: callable (theta, phi, times) -> P_E trace.
        thetas, phis: field-direction grids, rad.
        times: fit time grid, s.

    Returns:
        Array of shape (len(thetas), len(phis)); cells where the fit
        fails hold NaN.
    """
    out = np.full((len(thetas), len(phis)), np.nan)
    for i, th in enumerate(np.asarray(thetas, dtype=float)):
        for j, ph in enumerate(np.asarray(phis, dtype=float)):
            try:
                out[i, j] = fit_keff(times, pe_solver(th, ph, times)).k_eff
            except FitFailureError:
                continue
    return out
