import os

import numpy as np
import pytest

from rpnvplots.figures import (EmptyTableError, FigureSpec, MissingColumnError,
                               RENDERERS, recognized_outputs, render)

HASH_LINE = "# config_sha256=deadbeef\n"


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(HASH_LINE)
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format(v, ".8g") for v in row) + "\n")
    return str(path)


def synth_tables(dirpath):
    """Schema-true miniature tables for every recognized experiment."""
    t = np.linspace(0, 3, 40)
    phi = np.linspace(0, 2 * np.pi, 9)
    write_csv(dirpath / "signal.csv",
              ["t_us", "P_numeric", "P_analytic", "P_E", "P_G",
               "P_E_tworate", "P_E_fit"],
              [(x, 0.5 + 0.5 * np.cos(6 * x) * np.exp(-x),
                0.5 + 0.5 * np.cos(6 * x) * np.exp(-x),
                np.exp(-0.14 * x), 1 - np.exp(-0.14 * x),
                np.exp(-0.15 * x), np.exp(-0.14 * x)) for x in t])
    big_t = np.linspace(0.02, 35, 120)
    write_csv(dirpath / "sensitivity.csv",
              ["T_us", "eta_numeric_khz_per_sqrthz", "eta_analytic_khz_per_sqrthz"],
              [(x, 0.54 + (x - 0.46) ** 2, 0.55 + (x - 0.46) ** 2) for x in big_t])
    rows = [(th, ph, 0.14 + 0.01 * np.sin(th) * np.cos(ph), 1.0)
            for th in np.linspace(0, np.pi, 7) for ph in phi]
    write_csv(dirpath / "keff-map.csv",
              ["theta_rad", "phi_rad", "keff_mhz", "fit_ok"], rows)
    write_csv(dirpath / "keff-phi.csv", ["phi_rad", "keff_mhz"],
              [(p, 0.14 + 0.008 * np.cos(p)) for p in phi])
    write_csv(dirpath / "noise-sweep.csv",
              ["gamma_mhz", "eta_op_khz_per_sqrthz", "T_op_us"],
              [(g, 0.54 + 0.3 * g, 0.46) for g in (0, 0.5, 1, 1.5, 2)])
    write_csv(dirpath / "relaxation.csv",
              ["phi_rad", "keff_mhz_gamma0", "keff_mhz_relaxed"],
              [(p, 0.14 + 0.008 * np.cos(p), 0.15 + 0.002 * np.cos(p)) for p in phi])
    write_csv(dirpath / "nucleus-variant.csv", ["phi_rad", "keff_mhz"],
              [(p, 0.14 + 0.008 * np.cos(p)) for p in phi])
    write_csv(dirpath / "nucleus-variant_signal.csv",
              ["t_us", "P_numeric", "P_E", "P_E_tworate"],
              [(x, 0.5 + 0.5 * np.cos(6 * x) * np.exp(-x), np.exp(-0.14 * x),
                np.exp(-0.15 * x)) for x in t])
    write_csv(dirpath / "nucleus-variant_sensitivity.csv",
              ["T_us", "eta_numeric_khz_per_sqrthz"],
              [(x, 0.54 + (x - 0.46) ** 2) for x in big_t])
    write_csv(dirpath / "depth-sweep.csv",
              ["d1_nm", "e_perp_mv_per_m", "eta_op_khz_per_sqrthz", "T_op_us"],
              [(d, 3.15 * (5 / d) ** 3, 0.54 + 0.005 * d, 0.46 * (d / 5) ** 3)
               for d in (5, 6, 7, 8, 9, 10)])
    write_csv(dirpath / "dipolar-sweep.csv",
              ["d1_nm", "keff_mhz", "keff_dipolar_mhz", "rel_change_percent"],
              [(d, 0.1424, 0.1424 * (1 + 0.03 * (5 / d) ** 3), 3.0 * (5 / d) ** 3)
               for d in (5, 6, 7, 8, 9, 10)])
    write_csv(dirpath / "efield-permittivity.csv", ["eps_r1", "e_perp_mv_per_m"],
              [(e, 3.15 * 6.7 / (e + 5.7)) for e in np.linspace(1, 10, 10)])
    taus = np.geomspace(0.1, 1.0, 9)
    write_csv(dirpath / "pulses.csv", ["tau_ns", "err_rotframe", "err_labframe"],
              [(x, 2.7e-7 * x**3, 2e-3) for x in taus])
    write_csv(dirpath / "montecarlo_average.csv",
              ["t_m_us", "p_mc", "p_stderr", "p_closed_form"],
              [(x, 0.5 + 0.5 * np.cos(6 * x) * np.exp(-0.14 * x), 0.01,
                0.5 + 0.5 * np.cos(6 * x) * np.exp(-0.14 * x)) for x in t[1:]])
    write_csv(dirpath / "montecarlo_events.csv",
              ["event_index", "t_rec_us", "estimate", "error_bar"],
              [(i, 5.0 / (i + 1), 0.4 + 0.01 * i, 0.02) for i in range(30)])


@pytest.fixture
def results_dir(tmp_path):
    synth_tables(tmp_path)
    return tmp_path


def test_one_png_per_recognized_experiment(results_dir):
    specs = recognized_outputs(str(results_dir))
    assert len(specs) == len(RENDERERS)
    for spec in specs:
        path = render(spec)
        assert os.path.exists(path)
        assert os.path.getsize(path) > 1000
        with open(path, "rb") as fh:
            assert fh.read(8) == b"\x89PNG\r\n\x1a\n"


def test_missing_column_names_the_column(results_dir, tmp_path):
    bad = tmp_path / "broken"
    bad.mkdir()
    write_csv(bad / "signal.csv", ["t_us", "P_numeric", "P_E", "P_G"],
              [(0.0, 1.0, 1.0, 0.0), (1.0, 0.6, 0.9, 0.1)])
    spec = FigureSpec("signal", (str(bad / "signal.csv"),),
                      str(bad / "signal.png"))
    with pytest.raises(MissingColumnError, match="P_analytic"):
        render(spec)
    assert not os.path.exists(bad / "signal.png")


def test_empty_grid_is_an_error_and_no_image(tmp_path):
    write_csv(tmp_path / "keff-map.csv",
              ["theta_rad", "phi_rad", "keff_mhz", "fit_ok"], [])
    spec = FigureSpec("keff-map", (str(tmp_path / "keff-map.csv"),),
                      str(tmp_path / "keff-map.png"))
    with pytest.raises(EmptyTableError):
        render(spec)
    assert not os.path.exists(tmp_path / "keff-map.png")


def test_unknown_experiment_rejected(tmp_path):
    spec = FigureSpec("mystery", (str(tmp_path / "x.csv"),), str(tmp_path / "x.png"))
    with pytest.raises(ValueError, match="mystery"):
        render(spec)


def test_recognized_outputs_skips_unknown_files(tmp_path):
    write_csv(tmp_path / "keff-phi.csv", ["phi_rad", "keff_mhz"],
              [(0.0, 0.14), (1.0, 0.15)])
    (tmp_path / "unrelated.csv").write_text("a,b\n1,2\n")
    (tmp_path / "notes.txt").write_text("hello")
    specs = recognized_outputs(str(tmp_path))
    assert [s.experiment for s in specs] == ["keff-phi"]
