import math

import numpy as np
import pytest

from rabisim.ensemble import AtomModel, DetuningDistribution, EnsembleConfig
from rabisim.model import DriveParams
from rabisim.scans import scan_detuning
from rabisim.units import angular_to_khz, khz_to_angular

OMEGA0 = khz_to_angular(9.0)


def _config(sigma_khz, skew=0.0, gamma_khz=0.0):
    kind = "skewed_gaussian" if skew != 0.0 else "gaussian"
    return EnsembleConfig(
        drive=DriveParams(omega0=OMEGA0),
        distribution=DetuningDistribution(kind=kind, sigma=khz_to_angular(sigma_khz), skew=skew),
        atom_model=AtomModel(gamma=khz_to_angular(gamma_khz)),
    )


def test_narrow_distribution_follows_generalized_rabi():
    detunings = khz_to_angular(np.array([0.0, 4.5, 9.0, -13.5, 27.0]))
    rows = scan_detuning(_config(0.0), detunings)
    assert [r.detuning_khz for r in rows] == pytest.approx(angular_to_khz(detunings))
    for row in rows:
        assert row.error == ""
        expected = math.hypot(9.0, row.detuning_khz)
        assert row.frequency_khz == pytest.approx(expected, rel=1e-2)
        lorentzian = 0.5 / (1.0 + (row.detuning_khz / 9.0) ** 2)
        assert row.amplitude == pytest.approx(lorentzian, rel=2e-2)
        assert row.r_squared > 0.999


def test_broad_distribution_pins_frequency():
    detunings = khz_to_angular(np.array([-18.0, -9.0, 0.0, 9.0, 18.0]))
    rows = scan_detuning(_config(18.0, gamma_khz=1.0), detunings)
    for row in rows:
        assert row.error == ""
        assert abs(row.frequency_khz - 9.0) < 0.15 * 9.0


def test_failed_point_records_error_and_continues():
    detunings = khz_to_angular(np.array([0.0, 9.0]))
    times = np.arange(0.0, 0.5, 0.004)
    rows = scan_detuning(_config(0.0), detunings, times=times, window=(0.01, 2.0))
    assert len(rows) == 2
    for row in rows:
        assert row.error != ""
        assert math.isnan(row.frequency_khz)


def test_two_frequency_analysis_columns():
    detunings = khz_to_angular(np.array([0.0, 18.0]))
    rows = scan_detuning(_config(9.0), detunings, analysis="two")
    resonant, detuned = rows
    assert resonant.error == "" and detuned.error == ""
    assert detuned.omega_bar_khz >= 9.0
    assert 0.0 <= detuned.fraction_a <= 1.0
    assert detuned.fraction_a < resonant.fraction_a


def test_fft_analysis_reports_peaks():
    detunings = khz_to_angular(np.array([0.0]))
    rows = scan_detuning(_config(0.0), detunings, analysis="fft")
    assert rows[0].peaks_khz
    assert abs(rows[0].peaks_khz[0] - 9.0) < 0.2


def test_thread_fanout_matches_serial():
    detunings = khz_to_angular(np.linspace(-10.0, 10.0, 5))
    serial = scan_detuning(_config(8.0, gamma_khz=1.0), detunings, max_workers=1)
    threaded = scan_detuning(_config(8.0, gamma_khz=1.0), detunings, max_workers=2)
    for a, b in zip(serial, threaded):
        assert a == b


def test_scan_validation():
    with pytest.raises(ValueError):
        scan_detuning(_config(0.0), [])
    with pytest.raises(ValueError):
        scan_detuning(_config(0.0), [0.0], analysis="wavelet")
