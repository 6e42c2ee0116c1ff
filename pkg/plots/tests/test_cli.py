import os
import shutil
import subprocess
import sys

import pytest

from rpnvplots.cli import main

from test_figures import synth_tables, write_csv


def test_cli_renders_directory(tmp_path, capsys):
    synth_tables(tmp_path)
    assert main([str(tmp_path)]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 12  # one PNG per experiment (montecarlo pair -> one)
    assert os.path.exists(tmp_path / "signal.png")
    assert os.path.exists(tmp_path / "montecarlo.png")


def test_cli_empty_directory_exit_code(tmp_path, capsys):
    assert main([str(tmp_path)]) == 2
    assert "no recognized" in capsys.readouterr().err


def test_cli_reports_failures_with_named_column(tmp_path, capsys):
    write_csv(tmp_path / "signal.csv", ["t_us", "P_numeric"],
              [(0.0, 1.0), (1.0, 0.5)])
    assert main([str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "P_analytic" in err
    assert not os.path.exists(tmp_path / "signal.png")


@pytest.mark.skipif(shutil.which("rpnvsim") is None,
                    reason="primary CLI not on PATH")
def test_end_to_end_with_primary_outputs(tmp_path):
    """Drive the primary only through its CLI, then render its real files."""
    out = tmp_path / "results"
    for experiment in ("efield-permittivity", "pulses", "keff-phi",
                       "dipolar-sweep", "montecarlo"):
        proc = subprocess.run(
            ["rpnvsim", experiment, "--out", str(out), "--seed", "5"],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
    assert main([str(out)]) == 0
    for name in ("efield-permittivity", "pulses", "keff-phi",
                 "dipolar-sweep", "montecarlo"):
        assert os.path.exists(out / f"{name}.png")
