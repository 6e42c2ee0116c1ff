"""Named experiments: compute tables and scalar summaries, write results.

Every experiment emits one or more CSV tables (comma separator, '.'
decimal, header row, units suffixed in the column names, a config-hash
comment line on top) plus a JSON summary with the key scalars, the full
config echo and the code version. Reruns with the same config and seed
are byte-identical.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import analytics, montecarlo, pulses
from .config import CODE_VERSION, canonical_json, config_hash, build_model
from .constants import TWO_PI
from .geometry import Geometry, image_charge_field, lab_to_nv_frame, transverse_component
from .model import SensorModel, numeric_signal_fn
from .propagate import TimeGrid
from .spinalg import spin_matrices


class ExperimentError(RuntimeError):
    """Numeric failure while running an experiment."""


@dataclass
class ResultBundle:
    """Tables plus summary for one experiment run."""

    experiment: str
    tables: dict[str, dict[str, np.ndarray]]
    summary: dict
    config: dict

    def write(self, out_dir: str, formats=("csv", "json")) -> list[str]:
        os.makedirs(out_dir, exist_ok=True)
        digest = config_hash(self.config)
        written = []
        if "csv" in formats:
            for name, columns in self.tables.items():
                path = os.path.join(out_dir, f"{name}.csv")
                _write_csv(path, columns, digest)
                written.append(path)
        if "json" in formats:
            path = os.path.join(out_dir, f"{self.experiment}_summary.json")
            doc = {
                "experiment": self.experiment,
                "code_version": CODE_VERSION,
                "config_sha256": digest,
                "config": self.config,
                "results": self.summary,
            }
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, sort_keys=True, indent=2)
                fh.write("\n")
            written.append(path)
        return written


def _write_csv(path: str, columns: dict[str, np.ndarray], digest: str) -> None:
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    n_rows = len(arrays[0])
    if any(len(a) != n_rows for a in arrays):
        raise ValueError(f"ragged columns writing {path}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# config_sha256={digest}\n")
        fh.write(",".join(names) + "\n")
        for i in range(n_rows):
            fh.write(",".join(_fmt(a[i]) for a in arrays) + "\n")


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def _keff_of_model(model: SensorModel, t_max: float, n_points: int,
                   theta=None, phi=None) -> analytics.RateFit:
    times = np.linspace(0.0, t_max, n_points)
    pe = model.pe_trace(times, theta=theta, phi=phi)
    return analytics.fit_keff(times, pe)


def _numeric_sensitivity(model: SensorModel, k: float, n_t: int,
                         delta_k_rel: float, reduced: bool):
    """Numeric eta(T) pipeline at k_s = k_t = k (optionally on the
    nucleus-free register, exact in that regime)."""
    m = replace(model, rates=replace(model.rates, k_s=k, k_t=k))
    if reduced:
        m = m.reduced_signal_model()
    t_grid = analytics.default_T_grid(k, m.rates.gamma, n=n_t)
    grid = TimeGrid(t_grid[0], t_grid[-1], n_t)
    signal = numeric_signal_fn(m, grid)
    eta = analytics.sensitivity(signal, t_grid, k, delta_k=delta_k_rel * k)
    return analytics.find_optimum(t_grid, eta)


# -- experiment implementations -------------------------------------------


def _run_signal(model: SensorModel, opts: dict, seed: int) -> tuple[dict, dict]:
    fit = _keff_of_model(model, opts["fit_t_max_us"] * 1e-6, opts["fit_n_points"])
    k_eff = fit.k_eff
    grid = TimeGrid(0.0, opts["t_max_us"] * 1e-6, opts["n_points"])
    eff_model = replace(model, rates=replace(model.rates, k_s=k_eff, k_t=k_eff))
    trace = eff_model.numeric_signal(grid, method=opts["method"],
                                     krylov_m=opts["krylov_m"],
                                     krylov_tol=opts["krylov_tol"])
    params = model.analytic_params(k=k_eff)
    if model.rates.gamma > 0:
        p_analytic, _ = analytics.analytic_signal_general(params, grid.times)
    else:
        p_analytic, _, _ = analytics.analytic_signal(params, grid.times)
    pe_tworate = model.pe_trace(grid.times)
    table = {
        "t_us": grid.times * 1e6,
        "P_numeric": trace.P,
        "P_analytic": p_analytic,
        "P_E": trace.P_E,
        "P_G": trace.P_G,
        "P_E_tworate": pe_tworate,
        "P_E_fit": np.exp(-k_eff * grid.times),
    }
    summary = {
        "k_eff_mhz": k_eff / 1e6,
        "k_eff_fit_residual": fit.residual,
        "e_perp_mv_per_m": model.e_perp() / 1e6,
        "omega_over_2pi_mhz": model.omega() / TWO_PI / 1e6,
        "max_abs_dev_numeric_vs_analytic": float(np.abs(trace.P - p_analytic).max()),
        "method": trace.method,
    }
    return {"signal": table}, summary


def _run_sensitivity(model: SensorModel, opts: dict, seed: int) -> tuple[dict, dict]:
    if opts["k_mhz"] is None:
        fit = _keff_of_model(model, opts["fit_t_max_us"] * 1e-6, opts["fit_n_points"])
        k = fit.k_eff
    else:
        k = opts["k_mhz"] * 1e6
    curve = _numeric_sensitivity(model, k, opts["n_t"], opts["delta_k_rel"],
                                 opts["reduced_register"])
    eta_an = analytics.eta_analytic(model.analytic_params(k=k), curve.T)
    table = {
        "T_us": curve.T * 1e6,
        "eta_numeric_khz_per_sqrthz": curve.eta / 1e3,
        "eta_analytic_khz_per_sqrthz": eta_an / 1e3,
    }
    summary = {
        "k_used_mhz": k / 1e6,
        "eta_op_khz_per_sqrthz": curve.eta_op / 1e3,
        "T_op_us": curve.T_op * 1e6,
        "optimum_on_boundary": curve.on_boundary,
    }
    return {"sensitivity": table}, summary


def _map_worker(args):
    model, theta, phi, t_max, n_points = args
    try:
        return _keff_of_model(model, t_max, n_points, theta=theta, phi=phi).k_eff
    except analytics.FitFailureError:
        return float("nan")


def _run_keff_map(model: SensorModel, opts: dict, seed: int,
                  jobs: int = 1) -> tuple[dict, dict]:
    thetas = np.linspace(0.0, np.pi, opts["n_theta"])
    phis = np.linspace(0.0, 2 * np.pi, opts["n_phi"])
    t_max = opts["t_max_us"] * 1e-6
    work = [(model, th, ph, t_max, opts["n_points"]) for th in thetas for ph in phis]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            flat = list(pool.map(_map_worker, work, chunksize=8))
    else:
        flat = [_map_worker(w) for w in work]
    kmap = np.array(flat).reshape(len(thetas), len(phis))
    th_col = np.repeat(thetas, len(phis))
    ph_col = np.tile(phis, len(thetas))
    table = {
        "theta_rad": th_col,
        "phi_rad": ph_col,
        "keff_mhz": kmap.reshape(-1) / 1e6,
        "fit_ok": ~np.isnan(kmap.reshape(-1)),
    }
    valid = kmap[~np.isnan(kmap)]
    summary = {
        "keff_mean_mhz": float(valid.mean() / 1e6),
        "keff_min_mhz": float(valid.min() / 1e6),
        "keff_max_mhz": float(valid.max() / 1e6),
        "peak_to_peak_over_mean": float((valid.max() - valid.min()) / valid.mean()),
        "n_failed_fits": int(np.isnan(kmap).sum()),
    }
    return {"keff-map": table}, summary


def _run_keff_phi(model: SensorModel, opts: dict, seed: int) -> tuple[dict, dict]:
    phis = np.linspace(0.0, 2 * np.pi, opts["n_phi"])
    t_max = opts["t_max_us"] * 1e-6
    keffs = np.array([
        _keff_of_model(model, t_max, opts["n_points"], theta=np.pi / 2, phi=ph).k_eff
        for ph in phis
    ])
    table = {"phi_rad": phis, "keff_mhz": keffs / 1e6}
    summary = {
        "keff_mean_mhz": float(keffs.mean() / 1e6),
        "modulation_mhz": float((keffs.max() - keffs.min()) / 1e6),
    }
    return {"keff-phi": table}, summary


def _run_noise_sweep(model: SensorModel, opts: dict, seed: int) -> tuple[dict, dict]:
    if opts["k_mhz"] is None:
        fit = _keff_of_model(model, opts["fit_t_max_us"] * 1e-6, opts["fit_n_points"])
        k = fit.k_eff
    else:
        k = opts["k_mhz"] * 1e6
    gammas = np.asarray(opts["gammas_mhz"], dtype=float) * 1e6
    eta_ops, t_ops = [], []
    for gamma in gammas:
        m = replace(model, rates=replace(model.rates, gamma=gamma))
        curve = _numeric_sensitivity(m, k, opts["n_t"], 1e-3,
                                     opts["reduced_register"])
        eta_ops.append(curve.eta_op)
        t_ops.append(curve.T_op)
    eta_ops = np.array(eta_ops)
    t_ops = np.array(t_ops)
    table = {
        "gamma_mhz": gammas / 1e6,
        "eta_op_khz_per_sqrthz": eta_ops / 1e3,
        "T_op_us": t_ops * 1e6,
    }
    summary = {
        "k_used_mhz": k / 1e6,
        "T_op_spread_rel": float((t_ops.max() - t_ops.min()) / t_ops.min()),
        "eta_op_monotone_increasing": bool(np.all(np.diff(eta_ops) > 0)),
    }
    return {"noise-sweep": table}, summary


def _run_relaxation(model: SensorModel, opts: dict, seed: int) -> tuple[dict, dict]:
    big_gamma = opts["relaxation_mhz"] * 1e6
    t_max = opts["t_max_us"] * 1e-6
    phis = np.linspace(0.0, 2 * np.pi, opts["n_phi"])
    model0 = replace(model, rates=replace(model.rates, Gamma=0.0))
    model_g = replace(model, rates=replace(model.rates, Gamma=big_gamma))
    keff0 = np.array([
        _keff_of_model(model0, t_max, opts["n_points"], theta=np.pi / 2, phi=ph).k_eff
        for ph in phis])
    keffg = np.array([
        _keff_of_model(model_g, t_max, opts["n_points"], theta=np.pi / 2, phi=ph).k_eff
        for ph in phis])
    fit_g = _keff_of_model(model_g, t_max, opts["n_points"])
    curve = _numeric_sensitivity(model_g, fit_g.k_eff, opts["n_t"], 1e-3,
                                 opts["reduced_register"])
    table = {
        "phi_rad": phis,
        "keff_mhz_gamma0": keff0 / 1e6,
        "keff_mhz_relaxed": keffg / 1e6,
    }
    summary = {
        "relaxation_mhz": big_gamma / 1e6,
        "keff_relaxed_mhz": fit_g.k_eff / 1e6,
        "eta_op_khz_per_sqrthz": curve.eta_op / 1e3,
        "T_op_us": curve.T_op * 1e6,
        "phi_modulation_mhz_gamma0": float((keff0.max() - keff0.min()) / 1e6),
        "phi_modulation_mhz_relaxed": float((keffg.max() - keffg.min()) / 1e6),
    }
    return {"relaxation": table}, summary


def _run_nucleus_variant(model: SensorModel, opts: dict, seed: int) -> tuple[dict, dict]:
    t_max = opts["t_max_us"] * 1e-6
    phis = np.linspace(0.0, 2 * np.pi, opts["n_phi"])
    keffs = np.array([
        _keff_of_model(model, t_max, opts["n_points"], theta=np.pi / 2, phi=ph).k_eff
        for ph in phis])
    fit = _keff_of_model(model, t_max, opts["n_points"])
    curve = _numeric_sensitivity(model, fit.k_eff, opts["n_t"], 1e-3,
                                 opts["reduced_register"])
    grid = TimeGrid(0.0, opts["t_max_us_signal"] * 1e-6, opts["n_points_signal"])
    eff = replace(model, rates=replace(model.rates, k_s=fit.k_eff, k_t=fit.k_eff))
    trace = eff.numeric_signal(grid)
    tables = {
        "nucleus-variant": {
            "phi_rad": phis,
            "keff_mhz": keffs / 1e6,
        },
        "nucleus-variant_signal": {
            "t_us": grid.times * 1e6,
            "P_numeric": trace.P,
            "P_E": trace.P_E,
            "P_E_tworate": model.pe_trace(grid.times),
        },
        "nucleus-variant_sensitivity": {
            "T_us": curve.T * 1e6,
            "eta_numeric_khz_per_sqrthz": curve.eta / 1e3,
        },
    }
    nuclei = ",".join(t.nucleus_label for _, t in model.rp.hyperfines)
    summary = {
        "nuclei": nuclei,
        "k_eff_mhz": fit.k_eff / 1e6,
        "eta_op_khz_per_sqrthz": curve.eta_op / 1e3,
        "T_op_us": curve.T_op * 1e6,
        "phi_modulation_mhz": float((keffs.max() - keffs.min()) / 1e6),
    }
    return tables, summary


def _run_depth_sweep(model: SensorModel, opts: dict, seed: int) -> tuple[dict, dict]:
    k = opts["k_mhz"] * 1e6
    depths = np.asarray(opts["d1_nm_grid"], dtype=float) * 1e-9
    rows = {"d1_nm": [], "e_perp_mv_per_m": [], "eta_op_khz_per_sqrthz": [],
            "T_op_us": []}
    for d1 in depths:
        m = replace(model, geometry=replace(model.geometry, d1=d1))
        curve = _numeric_sensitivity(m, k, opts["n_t"], 1e-3,
                                     opts["reduced_register"])
        rows["d1_nm"].append(d1 * 1e9)
        rows["e_perp_mv_per_m"].append(m.e_perp() / 1e6)
        rows["eta_op_khz_per_sqrthz"].append(curve.eta_op / 1e3)
        rows["T_op_us"].append(curve.T_op * 1e6)
    table = {key: np.array(val) for key, val in rows.items()}
    summary = {
        "eta_op_range_khz_per_sqrthz": [float(min(rows["eta_op_khz_per_sqrthz"])),
                                        float(max(rows["eta_op_khz_per_sqrthz"]))],
    }
    return {"depth-sweep": table}, summary


def _run_dipolar_sweep(model: SensorModel, opts: dict, seed: int) -> tuple[dict, dict]:
    t_max = opts["t_max_us"] * 1e-6
    depths = np.asarray(opts["d1_nm_grid"], dtype=float) * 1e-9
    k0s, k1s = [], []
    for d1 in depths:
        base = replace(model, geometry=replace(model.geometry, d1=d1),
                       include_dipolar=False)
        with_dd = replace(base, include_dipolar=True)
        k0s.append(_keff_of_model(base, t_max, opts["n_points"]).k_eff)
        k1s.append(_keff_of_model(with_dd, t_max, opts["n_points"]).k_eff)
    k0s = np.array(k0s)
    k1s = np.array(k1s)
    rel = np.abs(k1s - k0s) / k0s
    table = {
        "d1_nm": depths * 1e9,
        "keff_mhz": k0s / 1e6,
        "keff_dipolar_mhz": k1s / 1e6,
        "rel_change_percent": rel * 100,
    }
    summary = {
        "max_rel_change_percent": float(rel.max() * 100),
        "rel_change_at_first_depth_percent": float(rel[0] * 100),
    }
    return {"dipolar-sweep": table}, summary


def _run_efield_permittivity(model: SensorModel, opts: dict, seed: int) -> tuple[dict, dict]:
    eps_grid = np.asarray(opts["eps_r1_grid"], dtype=float)
    e_perp = []
    for eps in eps_grid:
        g = replace(model.geometry, eps_r1=float(eps))
        e_nv = lab_to_nv_frame(image_charge_field(g), g)
        e_perp.append(transverse_component(e_nv)[0])
    e_perp = np.array(e_perp)
    table = {"eps_r1": eps_grid, "e_perp_mv_per_m": e_perp / 1e6}
    summary = {
        "e_perp_at_default_mv_per_m": float(model.e_perp() / 1e6),
        "monotone_decreasing": bool(np.all(np.diff(e_perp) < 0)),
    }
    return {"efield-permittivity": table}, summary


def _run_pulses(model: SensorModel, opts: dict, seed: int) -> tuple[dict, dict]:
    taus = np.logspace(np.log10(opts["tau_min_ns"]), np.log10(opts["tau_max_ns"]),
                       opts["n_tau"]) * 1e-9
    sx, sy, sz = spin_matrices(1.0)
    ident = np.eye(3, dtype=complex)
    b = model.bfield.vector().components
    e = model.efield_nv().components
    nv = model.nv
    h_full = (nv.D + nv.k_par * e[2]) * (sz @ sz - (2 / 3) * ident) \
        + nv.gyro * (b[0] * sx + b[1] * sy + b[2] * sz) \
        - nv.k_perp * e[0] * (sx @ sx - sy @ sy) \
        + nv.k_perp * e[1] * (sx @ sy + sy @ sx)
    # interaction frame of the zero-field term: the (Sz^2 - 2/3) offset is
    # removed from both the sequence Hamiltonian and the comparison target,
    # which is the regime where the small-tau cancellation is visible at
    # nanosecond pulse spacings (with D present the transverse term is
    # already non-secular and the residual oscillates instead of shrinking).
    h_rot = h_full - (nv.D + nv.k_par * e[2]) * (sz @ sz - (2 / 3) * ident)
    err_rot, slope_rot = pulses.error_scaling(h_rot, taus)
    err_lab, slope_lab = pulses.error_scaling(h_full, taus)
    table = {
        "tau_ns": taus * 1e9,
        "err_rotframe": err_rot,
        "err_labframe": err_lab,
    }
    summary = {
        "slope_rotframe": slope_rot,
        "slope_labframe": slope_lab,
        "b_transverse_mt": float(np.hypot(b[0], b[1]) * 1e3),
    }
    return {"pulses": table}, summary


def _run_montecarlo(model: SensorModel, opts: dict, seed: int) -> tuple[dict, dict]:
    k = opts["k_mhz"] * 1e6
    omega = model.omega()
    t_single = opts["t_m_single_us"] * 1e-6
    cfg = montecarlo.ShotConfig(
        t_m=t_single,
        n_repetitions=opts["n_repetitions"],
        n_events=opts["n_example_events"],
        rates=((k, 1.0),),
        omega=omega,
        seed=seed,
    )
    events = montecarlo.sample_events(cfg)
    events_table = {
        "event_index": np.arange(len(events)),
        "t_rec_us": np.array([e.t_rec * 1e6 for e in events]),
        "estimate": np.array([e.readout_estimate for e in events]),
        "error_bar": np.array([e.error_bar for e in events]),
    }
    grid = np.linspace(opts["t_m_max_us"] * 1e-6 / opts["n_t_m"],
                       opts["t_m_max_us"] * 1e-6, opts["n_t_m"])
    avg_cfg = replace(cfg, n_events=opts["m_events"], seed=seed + 1)
    result = montecarlo.ensemble_average(avg_cfg, grid)
    avg_table = {
        "t_m_us": grid * 1e6,
        "p_mc": result.mean,
        "p_stderr": result.std_error,
        "p_closed_form": result.closed_form,
    }
    frac_cfg = replace(cfg, n_events=opts["m_events"], seed=seed + 2)
    frac_events = montecarlo.sample_events(frac_cfg)
    frac = np.mean([e.t_rec < t_single for e in frac_events])
    summary = {
        "k_mhz": k / 1e6,
        "event_fraction_t_rec_below_t_m": float(frac),
        "expected_fraction": float(1 - np.exp(-k * t_single)),
        "max_dev_in_stderr": float(np.nanmax(
            np.abs(result.mean - result.closed_form)
            / np.where(result.std_error > 0, result.std_error, np.nan))),
    }
    return {"montecarlo_events": events_table, "montecarlo_average": avg_table}, summary


_RUNNERS = {
    "signal": _run_signal,
    "sensitivity": _run_sensitivity,
    "keff-phi": _run_keff_phi,
    "noise-sweep": _run_noise_sweep,
    "relaxation": _run_relaxation,
    "nucleus-variant": _run_nucleus_variant,
    "depth-sweep": _run_depth_sweep,
    "dipolar-sweep": _run_dipolar_sweep,
    "efield-permittivity": _run_efield_permittivity,
    "pulses": _run_pulses,
    "montecarlo": _run_montecarlo,
}


def run(cfg: dict, jobs: int = 1) -> ResultBundle:
    """Execute the configured experiment and return its result bundle."""
    name = cfg["experiment"]["name"]
    opts = cfg["experiment"]["options"]
    seed = cfg["experiment"]["seed"]
    model = build_model(cfg)
    try:
        if name == "keff-map":
            tables, summary = _run_keff_map(model, opts, seed, jobs=jobs)
        else:
            tables, summary = _RUNNERS[name](model, opts, seed)
    except (analytics.FitFailureError, analytics.OutOfRegimeError) as exc:
        raise ExperimentError(str(exc)) from exc
    summary = json.loads(canonical_json(_jsonify(summary)))
    return ResultBundle(experiment=name, tables=tables, summary=summary, config=cfg)


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
