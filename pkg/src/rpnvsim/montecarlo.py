"""Single-molecule measurement trajectories with single-shot readout.

One detection event: draw a nuclear configuration (an effective rate k_i
by weight), draw the recombination time t_rec ~ Exponential(k_i); the
Rabi oscillation P_r(t) = (1 + cos(Omega t))/2 freezes at t_rec. A
readout at time t_m estimates the frozen probability from N repetitions
(binomial). Averaged over many events the estimate converges to

    P(x) = k int_0^x P_r(t) e^{-k t} dt + P_r(x) e^{-k x}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ShotConfig:
    """Single-shot measurement configuration.

    Attributes:
        t_m: measurement time, s.
        n_repetitions: readout repetitions per event (N).
        n_events: number of single-molecule events (M).
        rates: (k_i, weight) pairs over nuclear configurations, 1/s.
        omega: Rabi frequency, rad/s.
        seed: RNG seed; all randomness derives from it.
    """

    t_m: float
    n_repetitions: int = 500
    n_events: int = 1
    rates: tuple[tuple[float, float], ...] = ((0.1425e6, 1.0),)
    omega: float = 2 * np.pi * 1.07e6
    seed: int = 0

    def __post_init__(self):
        if self.n_repetitions < 1:
            raise ValueError("need at least one readout repetition")
        weights = [w for _, w in self.rates]
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError("configuration weights must sum to 1")
        if any(k <= 0 for k, _ in self.rates):
            raise ValueError("rates must be positive")


@dataclass(frozen=True)
class Trajectory:
    """One single-molecule detection event."""

    t_rec: float
    truth: float
    readout_estimate: float
    error_bar: float


def rabi_probability(omega: float, t) -> np.ndarray:
    return (1.0 + np.cos(omega * np.asarray(t, dtype=float))) / 2.0


def sample_trajectory(cfg: ShotConfig, rng: np.random.Generator) -> Trajectory:
    """Draw one event: configuration, recombination time, binomial readout.

    The error bar follows sqrt((P_r(tau) - P_r(tau)^2)/N) with
    tau = min(t_m, t_rec).
    """
    ks = np.array([k for k, _ in cfg.rates])
    ws = np.array([w for _, w in cfg.rates])
    k = ks[rng.choice(len(ks), p=ws)]
    t_rec = rng.exponential(1.0 / k)
    tau = min(cfg.t_m, t_rec)
    truth = float(rabi_probability(cfg.omega, tau))
    estimate = rng.binomial(cfg.n_repetitions, truth) / cfg.n_repetitions
    err = float(np.sqrt(max(truth - truth**2, 0.0) / cfg.n_repetitions))
    return Trajectory(t_rec=float(t_rec), truth=truth,
                      readout_estimate=float(estimate), error_bar=err)


def sample_events(cfg: ShotConfig) -> list[Trajectory]:
    rng = np.random.default_rng(cfg.seed)
    return [sample_trajectory(cfg, rng) for _ in range(cfg.n_events)]


def closed_form_average(cfg: ShotConfig, x) -> np.ndarray:
    """Ensemble limit of the readout estimate at measurement time x.

    Weighted sum over configurations of
    k int_0^x P_r e^{-k t} dt + P_r(x) e^{-k x}, with the integral in
    closed form.
    """
    x = np.asarray(x, dtype=float)
    om = cfg.omega
    out = np.zeros_like(x)
    for k, w in cfg.rates:
        decay = np.exp(-k * x)
        # int_0^x (1 + cos om t)/2 * e^{-k t} dt
        osc = (k * (1 - decay * np.cos(om * x)) + om * decay * np.sin(om * x)) \
            / (k**2 + om**2)
        integral = (1 - decay) / (2 * k) + osc / 2
        out = out + w * (k * integral + rabi_probability(om, x) * decay)
    return out


@dataclass(frozen=True)
class EnsembleResult:
    t_m: np.ndarray
    mean: np.ndarray
    std_error: np.ndarray
    closed_form: np.ndarray
    n_events: int


def ensemble_average(cfg: ShotConfig, t_m_grid: np.ndarray) -> EnsembleResult:
    """Monte Carlo mean of the readout estimate over a t_m grid.

    Draws ``cfg.n_events`` independent events per grid point (vectorized)
    and reports the sample mean, its standard error and the closed-form
    limit. Deterministic for a fixed seed.
    """
    t_m_grid = np.asarray(t_m_grid, dtype=float)
    rng = np.random.default_rng(cfg.seed)
    ks = np.array([k for k, _ in cfg.rates])
    ws = np.array([w for _, w in cfg.rates])
    m = cfg.n_events
    mean = np.empty_like(t_m_grid)
    serr = np.empty_like(t_m_grid)
    for i, tm in enumerate(t_m_grid):
        idx = rng.choice(len(ks), size=m, p=ws)
        t_rec = rng.exponential(1.0 / ks[idx])
        tau = np.minimum(tm, t_rec)
        truth = rabi_probability(cfg.omega, tau)
        est = rng.binomial(cfg.n_repetitions, truth) / cfg.n_repetitions
        mean[i] = est.mean()
        serr[i] = est.std(ddof=1) / np.sqrt(m)
    return EnsembleResult(t_m=t_m_grid, mean=mean, std_error=serr,
                          closed_form=closed_form_average(cfg, t_m_grid),
                          n_events=m)
