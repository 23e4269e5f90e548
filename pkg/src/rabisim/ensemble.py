"""Ensemble averaging over a distribution of static detunings.

Each atom sees the drive with its own local detuning, drawn from a
distribution of Zeeman shifts; the measured signal is the
distribution-weighted average of the per-atom population. The quadrature
here is the reference implementation and the Monte Carlo estimator is its
independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erf

from .model import DriveParams, OscillationTrace
from .units import khz_to_angular

_SQRT2PI = math.sqrt(2.0 * math.pi)

PARAMETRIC_KINDS = ("gaussian", "skewed_gaussian")
VALID_KINDS = PARAMETRIC_KINDS + ("empirical",)


class QuadratureSupportError(ValueError):
    """The quadrature support misses a non-negligible part of the distribution."""


def _skew_normal_params(sigma, skew):
    """Location xi and scale w of a skew-normal with mean 0, std sigma, shape skew."""
    alpha = float(skew)
    d = alpha / math.sqrt(1.0 + alpha * alpha)
    w = sigma / math.sqrt(1.0 - 2.0 * d * d / math.pi)
    xi = -w * d * math.sqrt(2.0 / math.pi)
    return xi, w, alpha


def skewed_gaussian_density(sigma, skew, x):
    """Skew-normal density with mean 0 and standard deviation sigma.

    The shape parameter is the skew-normal alpha, taken directly from
    `skew`. skew = 0 reduces exactly to the symmetric Gaussian; negative
    skew puts the long tail on the negative side (third moment < 0).
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    x = np.asarray(x, dtype=float)
    xi, w, alpha = _skew_normal_params(sigma, skew)
    z = (x - xi) / w
    phi = np.exp(-0.5 * z * z) / _SQRT2PI
    cdf = 0.5 * (1.0 + erf(alpha * z / math.sqrt(2.0)))
    return (2.0 / w) * phi * cdf


@dataclass(frozen=True)
class DetuningDistribution:
    """Distribution of local detuning shifts around the ensemble center.

    kind is one of gaussian, skewed_gaussian, empirical. sigma is the
    spectral width (angular, rad/ms) of the parametric kinds and skew their
    shape parameter (skew-normal alpha, 0 for symmetric). Parametric kinds
    are centered so the mean shift is zero; empirical kinds carry explicit
    (shift, weight) support and keep whatever reference their data came
    with. Weights are normalized to 1 on construction.
    """

    kind: str
    sigma: float = 0.0
    skew: float = 0.0
    shifts: np.ndarray | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in VALID_KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind in PARAMETRIC_KINDS:
            if self.sigma < 0:
                raise ValueError("sigma must be >= 0")
            if self.kind == "gaussian" and self.skew != 0.0:
                raise ValueError("the gaussian kind takes skew = 0")
            if self.shifts is not None or self.weights is not None:
                raise ValueError("parametric kinds take no explicit support")
            return
        if self.shifts is None or self.weights is None:
            raise ValueError("the empirical kind needs shifts and weights")
        shifts = np.asarray(self.shifts, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if shifts.ndim != 1 or shifts.shape != weights.shape or shifts.size == 0:
            raise ValueError("shifts and weights must be equal-length 1-d arrays")
        if not (np.all(np.isfinite(shifts)) and np.all(np.isfinite(weights))):
            raise ValueError("shifts and weights must be finite")
        if np.any(weights < 0):
            raise ValueError("empirical weights must be non-negative")
        total = float(weights.sum())
        if total <= 0:
            raise ValueError("empirical weights sum to zero")
        object.__setattr__(self, "shifts", shifts)
        object.__setattr__(self, "weights", weights / total)

    @property
    def is_parametric(self) -> bool:
        return self.kind in PARAMETRIC_KINDS

    def mean_shift(self) -> float:
        if self.is_parametric:
            return 0.0
        return float(self.shifts @ self.weights)

    def std_shift(self) -> float:
        if self.is_parametric:
            return self.sigma
        m = self.mean_shift()
        return float(math.sqrt(((self.shifts - m) ** 2) @ self.weights))


@dataclass(frozen=True)
class AtomModel:
    """Which per-atom kernel the ensemble average uses.

    analytic_two_level evaluates the closed-form two-level population, with
    an optional homogeneous dephasing envelope exp(-gamma t / 2) on the
    oscillating part. multilevel runs the five-level density-matrix model,
    where gamma is the master-equation dephasing rate and quadratic_shift
    the isolation of the neighboring transition. gamma and quadratic_shift
    are angular (rad/ms).
    """

    kind: str = "analytic_two_level"
    gamma: float = 0.0
    quadratic_shift: float = khz_to_angular(100.0)

    def __post_init__(self):
        if self.kind not in ("analytic_two_level", "multilevel"):
            raise ValueError(f"unknown atom model kind {self.kind!r}")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")


@dataclass(frozen=True)
class EnsembleConfig:
    """Drive, distribution, per-atom kernel, and quadrature settings.

    quadrature_nodes and support_half_width (in units of sigma) control the
    Gauss-Legendre rule used for parametric distributions; empirical
    distributions are summed over their explicit support instead.
    """

    drive: DriveParams
    distribution: DetuningDistribution
    atom_model: AtomModel = AtomModel()
    quadrature_nodes: int = 2001
    support_half_width: float = 8.0

    def __post_init__(self):
        if self.distribution.is_parametric:
            if self.quadrature_nodes < 201:
                raise ValueError("parametric distributions need at least 201 quadrature nodes")
            if self.support_half_width < 5.0:
                raise ValueError("quadrature support half-width must be at least 5 sigma")


def _density(dist: DetuningDistribution, x):
    if dist.kind == "gaussian":
        z = x / dist.sigma
        return np.exp(-0.5 * z * z) / (_SQRT2PI * dist.sigma)
    return skewed_gaussian_density(dist.sigma, dist.skew, x)


@lru_cache(maxsize=8)
def _leggauss_cached(n):
    # leggauss is O(n^2)-ish and the node count rarely changes across calls.
    x, w = leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _quadrature(config) -> tuple[np.ndarray, np.ndarray]:
    """Shifts and weights of the distribution average.

    For parametric kinds this is a Gauss-Legendre rule over
    [-h sigma, +h sigma] around the (zero) mean shift; the total captured
    mass must account for the whole distribution to within 1e-6 or the
    support is judged too small.
    """
    dist = config.distribution
    if not dist.is_parametric:
        return dist.shifts, dist.weights
    if dist.sigma == 0.0:
        return np.zeros(1), np.ones(1)
    half = config.support_half_width * dist.sigma
    x, w = _leggauss_cached(int(config.quadrature_nodes))
    shifts = half * x
    weights = (half * w) * _density(dist, shifts)
    mass = float(weights.sum())
    if abs(1.0 - mass) > 1e-6:
        raise QuadratureSupportError(
            f"distribution mass outside the quadrature support is {abs(1.0 - mass):.2e} "
            f"(> 1e-6); widen support_half_width"
        )
    return shifts, weights / mass


def _analytic_average(drive: DriveParams, shifts, weights, gamma, times):
    omega_r = np.hypot(drive.omega0, drive.delta + shifts)[:, None]
    amp = (drive.omega0 / omega_r) ** 2
    envelope = np.exp(-0.5 * gamma * times)[None, :] if gamma > 0 else 1.0
    per_atom = 0.5 * amp * (1.0 - envelope * np.cos(omega_r * times[None, :]))
    return weights @ per_atom


def ensemble_signal(config: EnsembleConfig, times) -> OscillationTrace:
    """Distribution-averaged population signal on a uniform time grid."""
    times = np.asarray(times, dtype=float)
    shifts, weights = _quadrature(config)
    model = config.atom_model
    if model.kind == "analytic_two_level":
        values = _analytic_average(config.drive, shifts, weights, model.gamma, times)
    else:
        from .multilevel import p1_multilevel

        values = np.zeros_like(times)
        for shift, weight in zip(shifts, weights):
            trace = p1_multilevel(config.drive, shift, model.quadratic_shift,
                                  model.gamma, times)
            values += weight * trace.values
    return OscillationTrace.from_times(times, values)


def _sample_shifts(dist: DetuningDistribution, n, rng):
    if dist.kind == "gaussian":
        if dist.sigma == 0.0:
            return np.zeros(n)
        return rng.normal(0.0, dist.sigma, size=n)
    if dist.kind == "skewed_gaussian":
        if dist.sigma == 0.0:
            return np.zeros(n)
        xi, w, alpha = _skew_normal_params(dist.sigma, dist.skew)
        d = alpha / math.sqrt(1.0 + alpha * alpha)
        z0 = rng.normal(size=n)
        z1 = rng.normal(size=n)
        x = d * np.abs(z0) + math.sqrt(1.0 - d * d) * z1
        return xi + w * x
    # Empirical: inverse CDF over the discrete support.
    cdf = np.cumsum(dist.weights)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    return dist.shifts[np.clip(idx, 0, dist.shifts.size - 1)]


def monte_carlo_signal(config: EnsembleConfig, times, n_samples, seed=0) -> OscillationTrace:
    """Monte Carlo estimate of ensemble_signal.

    Unbiased and bit-deterministic for a fixed seed (fixed chunking keeps
    the summation order independent of n_samples' factorization). Only the
    analytic atom model is supported; the density-matrix kernel would make
    sampling noise the least of the costs.
    """
    n_samples = int(n_samples)
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    if config.atom_model.kind != "analytic_two_level":
        raise ValueError("monte_carlo_signal supports the analytic_two_level atom model only")
    times = np.asarray(times, dtype=float)
    rng = np.random.default_rng(seed)
    samples = _sample_shifts(config.distribution, n_samples, rng)
    drive = config.drive
    gamma = config.atom_model.gamma
    envelope = np.exp(-0.5 * gamma * times)[None, :] if gamma > 0 else 1.0
    acc = np.zeros_like(times)
    chunk = 20000
    for start in range(0, n_samples, chunk):
        part = samples[start:start + chunk]
        omega_r = np.hypot(drive.omega0, drive.delta + part)[:, None]
        amp = (drive.omega0 / omega_r) ** 2
        acc += (0.5 * amp * (1.0 - envelope * np.cos(omega_r * times[None, :]))).sum(axis=0)
    return OscillationTrace.from_times(times, acc / n_samples)


def load_empirical_distribution(path) -> DetuningDistribution:
    """Read an empirical distribution from a two-column text file.

    Columns are shift_kHz and weight, whitespace or comma separated; '#'
    starts a comment. Weights need not be pre-normalized.
    """
    shifts_khz = []
    weights = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{line_no}: expected two columns, got {len(parts)}")
            try:
                shifts_khz.append(float(parts[0]))
                weights.append(float(parts[1]))
            except ValueError as exc:
                raise ValueError(f"{path}:{line_no}: {exc}") from None
    if not shifts_khz:
        raise ValueError(f"{path}: no data rows")
    return DetuningDistribution(
        kind="empirical",
        shifts=khz_to_angular(np.asarray(shifts_khz)),
        weights=np.asarray(weights),
    )
