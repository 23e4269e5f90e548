import subprocess
import sys

import numpy as np
import pytest

from rabisim.cli import main
from rabisim.model import DriveParams, p1_two_level_damped
from rabisim.output import read_csv
from rabisim.units import khz_to_angular

SIMULATE_YAML = """\
name: homogeneous-check
command: simulate
seed: 5
output: {basename: homog}
drive: {omega0_khz: 9.0, delta_khz: 4.0}
distribution: {kind: gaussian, sigma_khz: 0.0}
atom_model: {kind: analytic_two_level, gamma_khz: 1.0}
time_grid: {t_max_ms: 1.0, dt_ms: 0.008}
"""


def _write(tmp_path, text, name="scenario.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_version_flag(capsys):
    assert main(["--version"]) == 0
    assert "rabisim" in capsys.readouterr().out


def test_simulate_matches_closed_form(tmp_path, capsys):
    config = _write(tmp_path, SIMULATE_YAML)
    assert main(["simulate", "--config", str(config), "--out", str(tmp_path)]) == 0
    meta, cols, rows = read_csv(tmp_path / "homog.csv")
    assert cols == ["t_ms", "signal"]
    assert meta["seed"] == "5"
    assert len(meta["scenario_hash"]) == 64
    t = np.array([float(r[0]) for r in rows])
    signal = np.array([float(r[1]) for r in rows])
    drive = DriveParams(omega0=khz_to_angular(9.0), delta=khz_to_angular(4.0))
    expected = p1_two_level_damped(drive, 0.0, t, khz_to_angular(1.0))
    assert np.max(np.abs(signal - expected)) < 1e-9


def test_rerun_is_byte_identical(tmp_path):
    config = _write(tmp_path, SIMULATE_YAML)
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    for out in (out1, out2):
        out.mkdir()
        assert main(["simulate", "--config", str(config), "--out", str(out)]) == 0
    assert (out1 / "homog.csv").read_bytes() == (out2 / "homog.csv").read_bytes()


def test_seed_override_changes_metadata_only(tmp_path):
    config = _write(tmp_path, SIMULATE_YAML)
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    out1.mkdir(), out2.mkdir()
    main(["simulate", "--config", str(config), "--out", str(out1)])
    main(["simulate", "--config", str(config), "--out", str(out2), "--seed", "99"])
    m1, _, r1 = read_csv(out1 / "homog.csv")
    m2, _, r2 = read_csv(out2 / "homog.csv")
    assert m1["seed"] == "5" and m2["seed"] == "99"
    assert m1["scenario_hash"] != m2["scenario_hash"]
    assert r1 == r2


def test_svg_flag_writes_plot(tmp_path):
    config = _write(tmp_path, SIMULATE_YAML)
    main(["simulate", "--config", str(config), "--out", str(tmp_path), "--svg"])
    svg = (tmp_path / "homog.svg").read_text()
    assert svg.startswith("<svg")


def test_scenario_error_exits_2(tmp_path, capsys):
    bad = SIMULATE_YAML.replace("sigma_khz: 0.0", "sigma_khz: -3.0")
    config = _write(tmp_path, bad)
    assert main(["simulate", "--config", str(config), "--out", str(tmp_path)]) == 2
    assert "sigma_khz" in capsys.readouterr().err


def test_missing_config_names_path(tmp_path, capsys):
    missing = tmp_path / "nope.yaml"
    assert main(["simulate", "--config", str(missing), "--out", str(tmp_path)]) == 2
    assert "nope.yaml" in capsys.readouterr().err


def test_unknown_preset_exits_2(tmp_path, capsys):
    assert main(["reproduce", "fig99", "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "fig99" in err


def test_command_mismatch_exits_2(tmp_path, capsys):
    config = _write(tmp_path, SIMULATE_YAML)
    assert main(["scan", "--config", str(config), "--out", str(tmp_path)]) == 2
    assert "simulate" in capsys.readouterr().err


def test_scan_output_columns(tmp_path):
    yaml_text = """\
name: tiny-scan
command: scan
seed: 0
output: {basename: tiny}
drive: {omega0_khz: 9.0, delta_list_khz: [0.0, 9.0]}
distribution: {kind: gaussian, sigma_khz: 0.0}
atom_model: {kind: analytic_two_level, gamma_khz: 0.0}
time_grid: {t_max_ms: 1.0, dt_ms: 0.004}
analysis: {kind: single, window_ms: [0.01, 0.6]}
"""
    config = _write(tmp_path, yaml_text)
    assert main(["scan", "--config", str(config), "--out", str(tmp_path)]) == 0
    meta, cols, rows = read_csv(tmp_path / "tiny.csv")
    assert cols[:4] == ["omega0_khz", "sigma_khz", "detuning_khz", "frequency_khz"]
    assert len(rows) == 2
    resonant = dict(zip(cols, rows[0]))
    detuned = dict(zip(cols, rows[1]))
    assert float(resonant["frequency_khz"]) == pytest.approx(9.0, rel=1e-3)
    assert float(detuned["frequency_khz"]) == pytest.approx(np.hypot(9.0, 9.0), rel=1e-2)
    assert float(detuned["homogeneous_khz"]) == pytest.approx(np.hypot(9.0, 9.0), rel=1e-9)


def test_spectrum_outputs_with_track(tmp_path):
    yaml_text = """\
name: tiny-spectrum
command: spectrum
seed: 0
output: {basename: spec}
drive: {omega0_khz: 9.0, delta_list_khz: [-6.0]}
distribution: {kind: gaussian, sigma_khz: 8.0}
atom_model: {kind: analytic_two_level, gamma_khz: 1.0}
time_grid: {t_max_ms: 2.0, dt_ms: 0.008}
analysis:
  kind: fft
  track: {window_ms: 0.4, hop_ms: 0.4, t_stop_ms: 1.2}
"""
    config = _write(tmp_path, yaml_text)
    assert main(["spectrum", "--config", str(config), "--out", str(tmp_path)]) == 0
    _, spec_cols, spec_rows = read_csv(tmp_path / "spec_spectra.csv")
    assert spec_cols == ["detuning_khz", "frequency_khz", "power"]
    assert len(spec_rows) > 100
    _, peak_cols, peak_rows = read_csv(tmp_path / "spec_peaks.csv")
    assert peak_cols == ["detuning_khz", "rank", "peak_frequency_khz", "peak_height"]
    assert len(peak_rows) >= 1
    _, track_cols, track_rows = read_csv(tmp_path / "spec_track.csv")
    assert track_cols == ["detuning_khz", "t_center_ms", "frequency_khz", "ci95_khz"]
    assert len(track_rows) >= 2


def test_field_dist_outputs(tmp_path):
    yaml_text = """\
name: tiny-field
command: field-dist
seed: 0
output: {basename: field}
fieldmap:
  b_set_khz: 18167.0
  signs: [1, -1]
  beam: {profile: flat_top, diameter_mm: 12.0}
  n_bins: 40
  profiles:
    b1z: {kind: piecewise_linear, nodes: [[-20.0, -1.0], [0.0, 4.0], [20.0, 0.5]]}
"""
    config = _write(tmp_path, yaml_text)
    assert main(["field-dist", "--config", str(config), "--out", str(tmp_path)]) == 0
    meta, cols, rows = read_csv(tmp_path / "field.csv")
    assert cols == ["current_sign", "bin_center_khz", "weight"]
    signs = {r[0] for r in rows}
    assert signs == {"1", "-1"}
    m_plus = float(meta["sign_+1_third_moment"])
    m_minus = float(meta["sign_-1_third_moment"])
    assert m_plus * m_minus < 0


def test_module_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "rabisim", "--version"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "rabisim" in proc.stdout
