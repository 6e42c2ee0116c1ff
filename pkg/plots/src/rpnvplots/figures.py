"""Renderers for the simulator's CSV outputs, one static PNG per experiment.

Tables are read with the leading ``# config_sha256=...`` provenance line
treated as a comment. Each renderer declares the columns it needs per
input file; a missing column raises :class:`MissingColumnError` naming it,
an empty table raises :class:`EmptyTableError` and no image is written.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


class MissingColumnError(ValueError):
    """An input table lacks a required column."""

    def __init__(self, path: str, column: str):
        super().__init__(f"{path}: missing required column {column!r}")
        self.column = column


class EmptyTableError(ValueError):
    """An input table has no data rows."""

    def __init__(self, path: str):
        super().__init__(f"{path}: table has no rows, refusing to render an empty figure")


@dataclass(frozen=True)
class FigureSpec:
    """One figure: experiment name, input tables, output path, labels."""

    experiment: str
    csv_paths: tuple[str, ...]
    output_path: str
    title: str = ""


def load_table(path: str, required: tuple[str, ...]) -> pd.DataFrame:
    df = pd.read_csv(path, comment="#")
    for column in required:
        if column not in df.columns:
            raise MissingColumnError(path, column)
    if len(df) == 0:
        raise EmptyTableError(path)
    return df


def _finish(fig, spec: FigureSpec):
    fig.savefig(spec.output_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return spec.output_path


def _render_signal(spec: FigureSpec):
    df = load_table(spec.csv_paths[0], ("t_us", "P_numeric", "P_analytic",
                                        "P_E", "P_G"))
    fig, ax = plt.subplots(figsize=(7, 4.2))
    ax.plot(df.t_us, df.P_numeric, color="seagreen", lw=1.6, label="numeric")
    ax.plot(df.t_us, df.P_analytic, "r--", lw=1.4, label="analytic")
    ax.plot(df.t_us, df.P_E, color="steelblue", lw=1.0, alpha=0.8, label="P_E")
    ax.plot(df.t_us, df.P_G, color="orange", lw=1.0, alpha=0.8, label="P_G")
    ax.set_xlabel(r"evolution time $t$ ($\mu$s)")
    ax.set_ylabel("probability")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(frameon=False)
    ax.set_title(spec.title or "NV sensor signal")
    return _finish(fig, spec)


def _render_sensitivity(spec: FigureSpec):
    df = load_table(spec.csv_paths[0], ("T_us", "eta_numeric_khz_per_sqrthz"))
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    finite = np.isfinite(df.eta_numeric_khz_per_sqrthz)
    ax.plot(df.T_us[finite], df.eta_numeric_khz_per_sqrthz[finite],
            color="seagreen", lw=1.4, label="numeric")
    if "eta_analytic_khz_per_sqrthz" in df.columns:
        fin = np.isfinite(df.eta_analytic_khz_per_sqrthz)
        ax.plot(df.T_us[fin], df.eta_analytic_khz_per_sqrthz[fin], "r--",
                lw=1.2, label="analytic")
    i = int(np.nanargmin(df.eta_numeric_khz_per_sqrthz[finite].to_numpy()))
    t_op = df.T_us[finite].to_numpy()[i]
    eta_op = df.eta_numeric_khz_per_sqrthz[finite].to_numpy()[i]
    ax.plot([t_op], [eta_op], "ko", ms=5)
    ax.annotate(f"  $\\eta_{{op}}$ = {eta_op:.2f} at T = {t_op:.2f} $\\mu$s",
                (t_op, eta_op))
    ax.set_yscale("log")
    ax.set_xlim(0, min(df.T_us.max(), 8 * t_op))
    ax.set_ylim(eta_op / 2, eta_op * 100)
    ax.set_xlabel(r"interrogation time $T$ ($\mu$s)")
    ax.set_ylabel(r"$\eta$ (kHz Hz$^{-1/2}$)")
    ax.set_title(spec.title or "recombination-rate sensitivity")
    ax.legend(frameon=False)
    return _finish(fig, spec)


def _render_keff_map(spec: FigureSpec):
    df = load_table(spec.csv_paths[0], ("theta_rad", "phi_rad", "keff_mhz"))
    pivot = df.pivot_table(index="theta_rad", columns="phi_rad", values="keff_mhz")
    fig, ax = plt.subplots(figsize=(6.8, 4.5))
    mesh = ax.pcolormesh(pivot.columns, pivot.index, pivot.to_numpy(),
                         shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=r"$k_{eff}$ (MHz)")
    ax.set_xlabel(r"$\phi$ (rad)")
    ax.set_ylabel(r"$\theta$ (rad)")
    ax.set_title(spec.title or "effective rate vs field direction")
    return _finish(fig, spec)


def _render_keff_phi(spec: FigureSpec):
    df = load_table(spec.csv_paths[0], ("phi_rad", "keff_mhz"))
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    ax.plot(df.phi_rad, df.keff_mhz, "o-", color="steelblue", ms=3.5)
    ax.set_xlabel(r"$\phi$ (rad)")
    ax.set_ylabel(r"$k_{eff}$ (MHz)")
    ax.set_title(spec.title or r"effective rate vs $\phi$ at $\theta = \pi/2$")
    return _finish(fig, spec)


def _render_noise_sweep(spec: FigureSpec):
    df = load_table(spec.csv_paths[0], ("gamma_mhz", "eta_op_khz_per_sqrthz",
                                        "T_op_us"))
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    ax.plot(df.gamma_mhz, df.eta_op_khz_per_sqrthz, "o-", color="seagreen")
    ax.set_xlabel(r"dephasing rate $\gamma$ (MHz)")
    ax.set_ylabel(r"$\eta_{op}$ (kHz Hz$^{-1/2}$)", color="seagreen")
    ax2 = ax.twinx()
    ax2.plot(df.gamma_mhz, df.T_op_us, "s--", color="firebrick")
    ax2.set_ylabel(r"$T_{op}$ ($\mu$s)", color="firebrick")
    ax2.set_ylim(0, df.T_op_us.max() * 1.5)
    ax.set_title(spec.title or "dephasing influence on the optimum")
    return _finish(fig, spec)


def _render_relaxation(spec: FigureSpec):
    df = load_table(spec.csv_paths[0], ("phi_rad", "keff_mhz_gamma0",
                                        "keff_mhz_relaxed"))
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    ax.plot(df.phi_rad, df.keff_mhz_gamma0, "o-", color="steelblue",
            ms=3.5, label=r"$\Gamma = 0$")
    ax.plot(df.phi_rad, df.keff_mhz_relaxed, "s-", color="firebrick",
            ms=3.5, label="with relaxation")
    ax.set_xlabel(r"$\phi$ (rad)")
    ax.set_ylabel(r"$k_{eff}$ (MHz)")
    ax.legend(frameon=False)
    ax.set_title(spec.title or "angular contrast under spin relaxation")
    return _finish(fig, spec)


def _render_nucleus_variant(spec: FigureSpec):
    df_phi = load_table(spec.csv_paths[0], ("phi_rad", "keff_mhz"))
    fig, axes = plt.subplots(1, 3, figsize=(13, 3.8))
    axes[0].plot(df_phi.phi_rad, df_phi.keff_mhz, "o-", color="steelblue", ms=3)
    axes[0].set_xlabel(r"$\phi$ (rad)")
    axes[0].set_ylabel(r"$k_{eff}$ (MHz)")
    if len(spec.csv_paths) > 1 and os.path.exists(spec.csv_paths[1]):
        df_sig = load_table(spec.csv_paths[1], ("t_us", "P_numeric", "P_E"))
        axes[1].plot(df_sig.t_us, df_sig.P_numeric, color="seagreen", lw=1.3,
                     label="P")
        axes[1].plot(df_sig.t_us, df_sig.P_E, color="orange", lw=1.1, label="P_E")
        axes[1].set_xlabel(r"$t$ ($\mu$s)")
        axes[1].legend(frameon=False)
    if len(spec.csv_paths) > 2 and os.path.exists(spec.csv_paths[2]):
        df_eta = load_table(spec.csv_paths[2],
                            ("T_us", "eta_numeric_khz_per_sqrthz"))
        fin = np.isfinite(df_eta.eta_numeric_khz_per_sqrthz)
        axes[2].plot(df_eta.T_us[fin], df_eta.eta_numeric_khz_per_sqrthz[fin],
                     color="seagreen", lw=1.2)
        axes[2].set_yscale("log")
        eta_min = float(df_eta.eta_numeric_khz_per_sqrthz[fin].min())
        axes[2].set_ylim(eta_min / 2, eta_min * 100)
        axes[2].set_xlim(0, min(df_eta.T_us.max(), 5))
        axes[2].set_xlabel(r"$T$ ($\mu$s)")
        axes[2].set_ylabel(r"$\eta$ (kHz Hz$^{-1/2}$)")
    fig.suptitle(spec.title or "nucleus variant")
    return _finish(fig, spec)


def _render_depth_sweep(spec: FigureSpec):
    df = load_table(spec.csv_paths[0], ("d1_nm", "eta_op_khz_per_sqrthz", "T_op_us"))
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    ax.plot(df.d1_nm, df.eta_op_khz_per_sqrthz, "o-", color="seagreen")
    ax.set_xlabel(r"NV depth $d_1$ (nm)")
    ax.set_ylabel(r"$\eta_{op}$ (kHz Hz$^{-1/2}$)", color="seagreen")
    ax2 = ax.twinx()
    ax2.plot(df.d1_nm, df.T_op_us, "s--", color="firebrick")
    ax2.set_ylabel(r"$T_{op}$ ($\mu$s)", color="firebrick")
    ax.set_title(spec.title or "sensitivity vs NV depth")
    return _finish(fig, spec)


def _render_dipolar_sweep(spec: FigureSpec):
    df = load_table(spec.csv_paths[0], ("d1_nm", "rel_change_percent"))
    fig, ax = plt.subplots(figsize=(6.2, 4.0))
    ax.plot(df.d1_nm, df.rel_change_percent, "o-", color="steelblue")
    ax.set_xlabel(r"NV depth $d_1$ (nm)")
    ax.set_ylabel(r"$k_{eff}$ change from dipolar coupling (%)")
    ax.set_title(spec.title or "dipolar-coupling influence")
    return _finish(fig, spec)


def _render_efield_permittivity(spec: FigureSpec):
    df = load_table(spec.csv_paths[0], ("eps_r1", "e_perp_mv_per_m"))
    fig, ax = plt.subplots(figsize=(6.2, 4.0))
    ax.plot(df.eps_r1, df.e_perp_mv_per_m, "o-", color="steelblue")
    ax.set_xlabel(r"$\epsilon_{r1}$")
    ax.set_ylabel(r"$E_\perp$ (MV/m)")
    ax.set_title(spec.title or "transverse field vs surface permittivity")
    return _finish(fig, spec)


def _render_pulses(spec: FigureSpec):
    df = load_table(spec.csv_paths[0], ("tau_ns", "err_rotframe"))
    fig, ax = plt.subplots(figsize=(6.2, 4.2))
    ax.loglog(df.tau_ns, df.err_rotframe, "o-", color="seagreen",
              label="interaction frame")
    if "err_labframe" in df.columns:
        ax.loglog(df.tau_ns, df.err_labframe, "s--", color="gray", alpha=0.7,
                  label="lab frame")
    slope = np.polyfit(np.log(df.tau_ns), np.log(df.err_rotframe), 1)[0]
    ax.annotate(f"slope = {slope:.2f}", (df.tau_ns.iloc[2], df.err_rotframe.iloc[2]))
    ax.set_xlabel(r"pulse spacing $\tau$ (ns)")
    ax.set_ylabel(r"$\| U - e^{-i 4 \tau H} \|$")
    ax.legend(frameon=False)
    ax.set_title(spec.title or "decoupling-sequence error scaling")
    return _finish(fig, spec)


def _render_montecarlo(spec: FigureSpec):
    df_avg = load_table(spec.csv_paths[0], ("t_m_us", "p_mc", "p_stderr",
                                            "p_closed_form"))
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.0))
    if len(spec.csv_paths) > 1 and os.path.exists(spec.csv_paths[1]):
        df_ev = load_table(spec.csv_paths[1], ("event_index", "t_rec_us",
                                               "estimate", "error_bar"))
        axes[0].errorbar(df_ev.event_index, df_ev.estimate, yerr=df_ev.error_bar,
                         fmt="o", ms=3, lw=0.8, color="steelblue")
        axes[0].set_xlabel("single-molecule event")
        axes[0].set_ylabel("readout estimate")
        axes[0].set_ylim(-0.05, 1.05)
    axes[1].errorbar(df_avg.t_m_us, df_avg.p_mc, yerr=3 * df_avg.p_stderr,
                     fmt="o", ms=3.5, color="steelblue", label="MC mean (3 s.e.)")
    axes[1].plot(df_avg.t_m_us, df_avg.p_closed_form, "r--", lw=1.2,
                 label="closed form")
    axes[1].set_xlabel(r"measurement time $t_m$ ($\mu$s)")
    axes[1].set_ylabel("P")
    axes[1].legend(frameon=False)
    fig.suptitle(spec.title or "single-shot trajectories and their average")
    return _finish(fig, spec)


# registry: primary CSV basename -> (renderer, extra input basenames)
RENDERERS = {
    "signal": (_render_signal, ()),
    "sensitivity": (_render_sensitivity, ()),
    "keff-map": (_render_keff_map, ()),
    "keff-phi": (_render_keff_phi, ()),
    "noise-sweep": (_render_noise_sweep, ()),
    "relaxation": (_render_relaxation, ()),
    "nucleus-variant": (_render_nucleus_variant,
                        ("nucleus-variant_signal", "nucleus-variant_sensitivity")),
    "depth-sweep": (_render_depth_sweep, ()),
    "dipolar-sweep": (_render_dipolar_sweep, ()),
    "efield-permittivity": (_render_efield_permittivity, ()),
    "pulses": (_render_pulses, ()),
    "montecarlo_average": (_render_montecarlo, ("montecarlo_events",)),
}


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the written image path."""
    try:
        renderer, _ = RENDERERS[spec.experiment]
    except KeyError:
        raise ValueError(f"no renderer registered for {spec.experiment!r}") from None
    return renderer(spec)


def recognized_outputs(results_dir: str) -> list[FigureSpec]:
    """Figure specs for every recognized CSV in a results directory."""
    specs = []
    for name in sorted(RENDERERS):
        primary = os.path.join(results_dir, f"{name}.csv")
        if not os.path.exists(primary):
            continue
        renderer, extras = RENDERERS[name]
        paths = [primary] + [os.path.join(results_dir, f"{e}.csv") for e in extras]
        out_name = "montecarlo.png" if name == "montecarlo_average" else f"{name}.png"
        specs.append(FigureSpec(
            experiment=name,
            csv_paths=tuple(paths),
            output_path=os.path.join(results_dir, out_name),
        ))
    return specs
