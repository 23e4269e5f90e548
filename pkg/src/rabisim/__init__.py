"""Driven two-level ensembles with inhomogeneous broadening.

Simulation and analysis of resonantly driven transitions averaged over a
spread of local detunings: closed-form and quadrature ensemble signals, a
five-level check model, damped-cosine and two-frequency fitting, FFT
spectra, detuning scans, and a spatial field model that generates the
detuning distributions.
"""

__version__ = "0.1.0"

from .ensemble import (AtomModel, DetuningDistribution, EnsembleConfig,
                       ensemble_signal, load_empirical_distribution,
                       monte_carlo_signal)
from .fieldmap import (AxisProfile, FieldGridModel, FieldHistogram, ProbeBeam,
                       field_magnitude_histogram, histogram_to_distribution)
from .fitting import (FitFailure, SingleFreqFit, TwoFreqFit,
                      fit_single_frequency, fit_two_frequency)
from .model import (DriveParams, OscillationTrace, analytic_small_sigma_signal,
                    generalized_rabi, p1_two_level, p1_two_level_damped)
from .multilevel import (DensityMatrix, LevelSystem, build_f2_system, evolve,
                         evolve_density, p1_multilevel)
from .scans import ScanRow, scan_detuning
from .spectrum import (FrequencyTrackPoint, SpectrumResult, fft_spectrum,
                       sliding_window_frequency)
from .units import (GYROMAGNETIC_KHZ_PER_MG, TWO_PI, angular_to_khz,
                    field_mg_to_khz, khz_to_angular)

__all__ = [
    "AtomModel", "AxisProfile", "DensityMatrix", "DetuningDistribution",
    "DriveParams", "EnsembleConfig", "FieldGridModel", "FieldHistogram",
    "FitFailure", "FrequencyTrackPoint", "GYROMAGNETIC_KHZ_PER_MG",
    "LevelSystem", "OscillationTrace", "ProbeBeam", "ScanRow",
    "SingleFreqFit", "SpectrumResult", "TwoFreqFit", "TWO_PI",
    "analytic_small_sigma_signal", "angular_to_khz", "build_f2_system",
    "ensemble_signal", "evolve", "evolve_density", "fft_spectrum",
    "field_magnitude_histogram", "field_mg_to_khz", "fit_single_frequency",
    "fit_two_frequency", "generalized_rabi", "histogram_to_distribution",
    "khz_to_angular", "load_empirical_distribution", "monte_carlo_signal",
    "p1_multilevel", "p1_two_level", "p1_two_level_damped", "scan_detuning",
    "sliding_window_frequency",
]
