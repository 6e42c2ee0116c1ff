"""Experiment configuration: schema, defaults, validation, hashing.

The config is a JSON document with three sections (model, experiment,
output). Every field carries its unit in the key name; unknown keys are
rejected with the offending JSON path. The merged (defaults + user)
document is hashed and echoed into every output file so a result can be
traced back to its exact inputs.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

import numpy as np

from .geometry import Geometry
from .hamiltonian import HyperfineTensor, NVParams, RateParams, RPParams
from .model import BFieldSpec, SensorModel

CODE_VERSION = "0.1.0"

EXPERIMENTS = (
    "signal", "sensitivity", "keff-map", "keff-phi", "noise-sweep",
    "relaxation", "nucleus-variant", "depth-sweep", "dipolar-sweep",
    "efield-permittivity", "pulses", "montecarlo",
)


class ConfigError(ValueError):
    """Configuration file is malformed; message carries the field path."""


def default_config() -> dict:
    """Reference parameter set (the main-figure model)."""
    return {
        "model": {
            "nv": {
                "d_ghz": 2.87,
                "k_par_hz_m_per_v": 0.0035,
                "k_perp_hz_m_per_v": 0.17,
                "gyro_ghz_per_t": 28.024,
            },
            "field": {
                "b0_mt": 0.05,
                "theta_rad": np.pi / 2,
                "phi_rad": 2.0,
            },
            "rates": {
                "k_s_mhz": 0.02,
                "k_t_mhz": 0.2,
                "dephasing_mhz": 0.0,
                "relaxation_mhz": 0.0,
            },
            "geometry": {
                "d1_nm": 5.0,
                "d2_nm": 2.0,
                "d3_nm": 4.0,
                "eps_r1": 1.0,
                "eps_r2": 5.7,
                "dipole_azimuth_rad": np.pi / 2,
                "nv_tilt_toward_pair": False,
            },
            "hyperfines": [
                {
                    "nucleus": "H6",
                    "electron": 1,
                    "spin": 0.5,
                    "principal_values_mt": [-0.218, -0.202, -0.054],
                    "principal_axes": [
                        [-0.0362, 0.2937, 0.9552],
                        [0.7948, 0.5879, -0.1507],
                        [-0.6059, 0.7537, -0.2546],
                    ],
                }
            ],
            "include_dipolar": False,
        },
        "experiment": {
            "name": "signal",
            "seed": 20230817,
            "options": {},
        },
        "output": {
            "directory": "results",
            "formats": ["csv", "json"],
        },
    }


# Per-experiment option defaults; user options are validated against these.
EXPERIMENT_OPTION_DEFAULTS: dict[str, dict[str, Any]] = {
    "signal": {
        "t_max_us": 3.0, "n_points": 601, "method": "dense",
        "krylov_m": 30, "krylov_tol": 1e-8,
        "fit_t_max_us": 25.0, "fit_n_points": 1000,
    },
    "sensitivity": {
        "n_t": 2000, "delta_k_rel": 1e-3, "k_mhz": None,
        "fit_t_max_us": 25.0, "fit_n_points": 1000, "reduced_register": False,
    },
    "keff-map": {
        "n_theta": 13, "n_phi": 25, "t_max_us": 25.0, "n_points": 800,
    },
    "keff-phi": {
        "n_phi": 25, "t_max_us": 25.0, "n_points": 800,
    },
    "noise-sweep": {
        "gammas_mhz": [0.0, 0.5, 1.0, 1.5, 2.0], "n_t": 2000,
        "k_mhz": None, "fit_t_max_us": 25.0, "fit_n_points": 1000,
        "reduced_register": True,
    },
    "relaxation": {
        "relaxation_mhz": 0.1, "n_phi": 25, "t_max_us": 25.0, "n_points": 800,
        "n_t": 2000, "reduced_register": True,
    },
    "nucleus-variant": {
        "n_phi": 25, "t_max_us": 25.0, "n_points": 800, "n_t": 2000,
        "t_max_us_signal": 3.0, "n_points_signal": 601,
        "reduced_register": True,
    },
    "depth-sweep": {
        "d1_nm_grid": [5.0, 6.0, 7.0, 8.0, 9.0, 10.0], "n_t": 2000,
        "k_mhz": 0.1425, "reduced_register": True,
    },
    "dipolar-sweep": {
        "d1_nm_grid": [5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
        "t_max_us": 25.0, "n_points": 2000,
    },
    "efield-permittivity": {
        "eps_r1_grid": [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5,
                        6.0, 6.5, 7.0, 7.5, 8.0, 8.5, 9.0, 9.5, 10.0],
    },
    "pulses": {
        "tau_min_ns": 0.1, "tau_max_ns": 1.0, "n_tau": 13,
    },
    "montecarlo": {
        "m_events": 5000, "n_repetitions": 500, "t_m_max_us": 3.0,
        "n_t_m": 20, "k_mhz": 0.1425, "n_example_events": 100,
        "t_m_single_us": 0.7,
    },
}


def _check_keys(user: dict, allowed, path: str) -> None:
    for key in user:
        if key not in allowed:
            raise ConfigError(f"unknown key {path}.{key}" if path else f"unknown key {key}")


def _merge_section(defaults: dict, user: Any, path: str) -> dict:
    if not isinstance(user, dict):
        raise ConfigError(f"{path or 'config'} must be an object")
    _check_keys(user, defaults.keys(), path)
    merged = {}
    for key, dval in defaults.items():
        if key not in user:
            merged[key] = dval
        elif isinstance(dval, dict):
            merged[key] = _merge_section(dval, user[key], f"{path}.{key}" if path else key)
        else:
            merged[key] = user[key]
    return merged


def merge_config(user: dict | None) -> dict:
    """Defaults overlaid with the user document; unknown keys rejected."""
    base = default_config()
    if user is None:
        user = {}
    if not isinstance(user, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(user, ("model", "experiment", "output"), "")
    merged = {
        "model": _merge_section(base["model"], user.get("model", {}), "model"),
        "experiment": dict(base["experiment"]),
        "output": _merge_section(base["output"], user.get("output", {}), "output"),
    }
    # hyperfines replace wholesale (list-valued)
    if "hyperfines" in user.get("model", {}):
        merged["model"]["hyperfines"] = user["model"]["hyperfines"]

    exp_user = user.get("experiment", {})
    if not isinstance(exp_user, dict):
        raise ConfigError("experiment must be an object")
    _check_keys(exp_user, ("name", "seed", "options"), "experiment")
    merged["experiment"]["name"] = exp_user.get("name", merged["experiment"]["name"])
    merged["experiment"]["seed"] = exp_user.get("seed", merged["experiment"]["seed"])
    name = merged["experiment"]["name"]
    if name not in EXPERIMENTS:
        raise ConfigError(
            f"experiment.name must be one of {', '.join(EXPERIMENTS)}; got {name!r}")
    opt_defaults = EXPERIMENT_OPTION_DEFAULTS[name]
    opts = exp_user.get("options", {})
    if not isinstance(opts, dict):
        raise ConfigError("experiment.options must be an object")
    _check_keys(opts, opt_defaults.keys(), "experiment.options")
    merged["experiment"]["options"] = {**opt_defaults, **opts}
    return merged


def load_config(path: str | None, experiment: str | None = None,
                seed: int | None = None) -> dict:
    """Read, merge and validate a config file (None -> pure defaults)."""
    user: dict | None = None
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config file {path} is not valid JSON "
                f"(line {exc.lineno}, column {exc.colno}): {exc.msg}") from exc
    if experiment is not None:
        user = dict(user or {})
        user.setdefault("experiment", {})
        user["experiment"] = {**user["experiment"], "name": experiment}
    cfg = merge_config(user)
    if seed is not None:
        cfg["experiment"]["seed"] = int(seed)
    validate_types(cfg)
    return cfg


def validate_types(cfg: dict) -> None:
    """Basic range/type checks with field-level messages."""
    def positive(path, value):
        if not isinstance(value, (int, float)) or value <= 0:
            raise ConfigError(f"{path} must be a positive number, got {value!r}")

    def nonneg(path, value):
        if not isinstance(value, (int, float)) or value < 0:
            raise ConfigError(f"{path} must be a non-negative number, got {value!r}")

    m = cfg["model"]
    positive("model.nv.d_ghz", m["nv"]["d_ghz"])
    positive("model.nv.gyro_ghz_per_t", m["nv"]["gyro_ghz_per_t"])
    nonneg("model.field.b0_mt", m["field"]["b0_mt"])
    for key in ("k_s_mhz", "k_t_mhz", "dephasing_mhz", "relaxation_mhz"):
        nonneg(f"model.rates.{key}", m["rates"][key])
    g = m["geometry"]
    positive("model.geometry.d1_nm", g["d1_nm"])
    positive("model.geometry.d3_nm", g["d3_nm"])
    nonneg("model.geometry.d2_nm", g["d2_nm"])
    for key in ("eps_r1", "eps_r2"):
        if g[key] < 1:
            raise ConfigError(f"model.geometry.{key} must be >= 1, got {g[key]!r}")
    if not isinstance(m["hyperfines"], list):
        raise ConfigError("model.hyperfines must be a list")
    for i, hf in enumerate(m["hyperfines"]):
        if not isinstance(hf, dict):
            raise ConfigError(f"model.hyperfines[{i}] must be an object")
        _check_keys(hf, ("nucleus", "electron", "spin", "principal_values_mt",
                         "principal_axes"), f"model.hyperfines[{i}]")
        for req in ("nucleus", "principal_values_mt", "principal_axes"):
            if req not in hf:
                raise ConfigError(f"model.hyperfines[{i}].{req} is required")
        if hf.get("electron", 1) not in (1, 2):
            raise ConfigError(f"model.hyperfines[{i}].electron must be 1 or 2")
        vals = hf["principal_values_mt"]
        if not (isinstance(vals, list) and len(vals) == 3):
            raise ConfigError(
                f"model.hyperfines[{i}].principal_values_mt needs 3 entries")
        axes = hf["principal_axes"]
        if not (isinstance(axes, list) and len(axes) == 3
                and all(isinstance(r, list) and len(r) == 3 for r in axes)):
            raise ConfigError(f"model.hyperfines[{i}].principal_axes must be 3x3")
    if not isinstance(cfg["experiment"]["seed"], int):
        raise ConfigError("experiment.seed must be an integer")
    formats = cfg["output"]["formats"]
    if not isinstance(formats, list) or not set(formats) <= {"csv", "json"}:
        raise ConfigError("output.formats must be a list drawn from ['csv', 'json']")


def build_model(cfg: dict) -> SensorModel:
    """Instantiate the physics model from a merged config."""
    from .constants import TWO_PI

    m = cfg["model"]
    nv = NVParams(
        D=TWO_PI * m["nv"]["d_ghz"] * 1e9,
        k_par=TWO_PI * m["nv"]["k_par_hz_m_per_v"],
        k_perp=TWO_PI * m["nv"]["k_perp_hz_m_per_v"],
        gyro=TWO_PI * m["nv"]["gyro_ghz_per_t"] * 1e9,
    )
    try:
        hyperfines = tuple(
            (hf.get("electron", 1), HyperfineTensor(
                nucleus_label=hf["nucleus"],
                principal_values=tuple(hf["principal_values_mt"]),
                principal_axes=np.array(hf["principal_axes"], dtype=float),
                spin=hf.get("spin", 0.5),
            ))
            for hf in m["hyperfines"]
        )
    except ValueError as exc:
        raise ConfigError(f"model.hyperfines: {exc}") from exc
    rates = RateParams(
        k_s=m["rates"]["k_s_mhz"] * 1e6,
        k_t=m["rates"]["k_t_mhz"] * 1e6,
        gamma=m["rates"]["dephasing_mhz"] * 1e6,
        Gamma=m["rates"]["relaxation_mhz"] * 1e6,
    )
    g = m["geometry"]
    geometry = Geometry(
        d1=g["d1_nm"] * 1e-9,
        d2=g["d2_nm"] * 1e-9,
        d3=g["d3_nm"] * 1e-9,
        eps_r1=g["eps_r1"],
        eps_r2=g["eps_r2"],
        dipole_azimuth=g["dipole_azimuth_rad"],
        nv_tilt_toward_pair=bool(g["nv_tilt_toward_pair"]),
    )
    bfield = BFieldSpec(
        b0=m["field"]["b0_mt"] * 1e-3,
        theta=m["field"]["theta_rad"],
        phi=m["field"]["phi_rad"],
    )
    return SensorModel(nv=nv, rp=RPParams(hyperfines=hyperfines, gyro=nv.gyro),
                       rates=rates, geometry=geometry, bfield=bfield,
                       include_dipolar=bool(m["include_dipolar"]))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode("utf-8")).hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def regime_warnings(cfg: dict) -> list[str]:
    """Warn when the closed-form approximations leave their regime.

    Checks g_e mu_B B0 << D, k << k_perp E_perp and gamma << k_perp E_perp
    (overdamped when gamma >= 2 k_perp E_perp).
    """
    model = build_model(cfg)
    warnings = []
    zeeman = model.nv.gyro * model.bfield.b0
    if zeeman > 0.1 * model.nv.D:
        warnings.append(
            f"Zeeman energy g_e mu_B B0 = {zeeman:.3e} rad/s is not small against "
            f"the zero-field splitting D = {model.nv.D:.3e} rad/s; the two-level "
            "signal model is unreliable")
    kpe = model.nv.k_perp * model.e_perp()
    k_max = max(model.rates.k_s, model.rates.k_t)
    if k_max > 0.3 * kpe:
        warnings.append(
            f"recombination rate {k_max:.3e} /s is not small against "
            f"k_perp E_perp = {kpe:.3e} /s; analytic signal forms degrade")
    gamma = model.rates.gamma
    if gamma >= 2 * kpe:
        warnings.append(
            f"dephasing gamma = {gamma:.3e} /s >= 2 k_perp E_perp = {2 * kpe:.3e} /s: "
            "overdamped regime, outside the general analytic solution's "
            "underdamped precondition")
    elif gamma > 0.3 * kpe:
        warnings.append(
            f"dephasing gamma = {gamma:.3e} /s is not small against "
            f"k_perp E_perp = {kpe:.3e} /s; weak-dephasing forms degrade")
    return warnings
