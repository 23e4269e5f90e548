"""Spatial model of the static field over the cell and the probe-beam weighting.

The field is a nominal bias along z plus six small deviation profiles, each
varying along one axis only: a steady part (b0x, b0y, b0z) and a part that
flips with the coil current direction (b1x, b1y, b1z). All deviations are
expressed in kHz of equivalent Zeeman shift, so the magnitude

    |B_tot| = sqrt(dx^2 + dy^2 + (b_set + dz)^2),   d_j = b0_j + sign * b1_j

and the binned deviation |B_tot| - b_set feed straight into a detuning
distribution (a larger field means a lower detuning).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ensemble import DetuningDistribution
from .units import khz_to_angular

PROFILE_KEYS = ("b0x", "b0y", "b0z", "b1x", "b1y", "b1z")


@dataclass(frozen=True)
class AxisProfile:
    """Scalar deviation profile along one axis, in kHz versus mm.

    kind "constant" uses value; "piecewise_linear" interpolates nodes of
    (position_mm, value_khz) pairs; "polynomial" evaluates coefficients in
    ascending order of power of the position.
    """

    kind: str
    value: float = 0.0
    nodes: tuple = ()
    coefficients: tuple = ()

    def __post_init__(self):
        if self.kind not in ("constant", "piecewise_linear", "polynomial"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "piecewise_linear":
            nodes = tuple((float(p), float(v)) for p, v in self.nodes)
            if len(nodes) < 2:
                raise ValueError("piecewise_linear profile needs at least 2 nodes")
            positions = [p for p, _ in nodes]
            if any(b <= a for a, b in zip(positions, positions[1:])):
                raise ValueError("profile node positions must be strictly increasing")
            object.__setattr__(self, "nodes", nodes)
        if self.kind == "polynomial":
            coeffs = tuple(float(c) for c in self.coefficients)
            if not coeffs:
                raise ValueError("polynomial profile needs at least one coefficient")
            object.__setattr__(self, "coefficients", coeffs)

    def __call__(self, positions):
        positions = np.asarray(positions, dtype=float)
        if self.kind == "constant":
            return np.full_like(positions, self.value)
        if self.kind == "piecewise_linear":
            xs = np.array([p for p, _ in self.nodes])
            ys = np.array([v for _, v in self.nodes])
            return np.interp(positions, xs, ys)
        return np.polynomial.polynomial.polyval(positions, self.coefficients)


@dataclass(frozen=True)
class FieldGridModel:
    """Grid of field deviations over the cell volume.

    b_set is the nominal field magnitude in kHz; profiles maps the six
    component names (b0x, b0y, b0z, b1x, b1y, b1z) to AxisProfile
    deviations, missing entries meaning zero. current_sign selects the
    coil current direction. Bounds are mm, spacing is the grid step in mm
    (spacing_z overrides it along z when finer axial sampling is needed).
    max_deviation_khz, when set, bounds every profile's magnitude over its
    axis grid at construction time.
    """

    b_set: float
    profiles: dict = field(default_factory=dict)
    current_sign: int = 1
    bounds_xy: tuple = (-8.0, 8.0)
    bounds_z: tuple = (-20.0, 20.0)
    spacing: float = 0.5
    spacing_z: float | None = None
    max_deviation_khz: float | None = None

    def __post_init__(self):
        if not self.b_set > 0:
            raise ValueError("b_set must be positive")
        if self.current_sign not in (1, -1):
            raise ValueError("current_sign must be +1 or -1")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if self.spacing_z is not None and not self.spacing_z > 0:
            raise ValueError("spacing_z must be positive")
        for bounds, label in ((self.bounds_xy, "bounds_xy"), (self.bounds_z, "bounds_z")):
            if len(bounds) != 2 or not bounds[1] > bounds[0]:
                raise ValueError(f"{label} must be an ordered (low, high) pair")
        unknown = set(self.profiles) - set(PROFILE_KEYS)
        if unknown:
            raise ValueError(f"unknown profile keys: {sorted(unknown)}")
        for key, profile in self.profiles.items():
            if not isinstance(profile, AxisProfile):
                raise ValueError(f"profile {key!r} must be an AxisProfile")
        if self.max_deviation_khz is not None:
            bound = float(self.max_deviation_khz)
            for key, profile in self.profiles.items():
                axis = self.axis_grid("z" if key.endswith("z") else "xy")
                worst = float(np.abs(profile(axis)).max())
                if worst > bound + 1e-9:
                    raise ValueError(
                        f"profile {key!r} reaches {worst:.3g} kHz, beyond the "
                        f"{bound:.3g} kHz deviation bound"
                    )

    def axis_grid(self, which):
        if which == "xy":
            low, high = self.bounds_xy
            step = self.spacing
        else:
            low, high = self.bounds_z
            step = self.spacing if self.spacing_z is None else self.spacing_z
        n = int(round((high - low) / step))
        return low + step * np.arange(n + 1)

    def component(self, key, positions):
        """Evaluate one deviation component (kHz) along its axis."""
        profile = self.profiles.get(key)
        positions = np.asarray(positions, dtype=float)
        if profile is None:
            return np.zeros_like(positions)
        return profile(positions)


@dataclass(frozen=True)
class ProbeBeam:
    """Transverse weighting of the detection beam, propagating along z.

    flat_top weights every point inside the diameter equally; gaussian
    uses intensity exp(-2 r^2 / w0^2) with waist w0 = diameter / 2.
    """

    profile: str = "flat_top"
    diameter: float = 12.0
    axis: str = "z"

    def __post_init__(self):
        if self.profile not in ("flat_top", "gaussian"):
            raise ValueError(f"unknown beam profile {self.profile!r}")
        if not self.diameter > 0:
            raise ValueError("beam diameter must be positive")
        if self.axis != "z":
            raise ValueError("only z-axis beams are supported")

    def weight_xy(self, x, y):
        """Unnormalized weight on the transverse grid, shape (len(x), len(y))."""
        r2 = np.asarray(x, dtype=float)[:, None] ** 2 + np.asarray(y, dtype=float)[None, :] ** 2
        if self.profile == "flat_top":
            return (r2 <= (0.5 * self.diameter) ** 2).astype(float)
        w0 = 0.5 * self.diameter
        return np.exp(-2.0 * r2 / w0**2)


@dataclass(frozen=True)
class FieldHistogram:
    """Weighted histogram of |B_tot| - b_set in kHz, with moment summaries.

    Statistics are computed from the bins themselves (not the raw grid), so
    they respond to binning exactly the way the exported histogram does.
    fraction_below and fraction_above split the weight about the mean.
    """

    bin_centers_khz: np.ndarray
    weights: np.ndarray
    mean_khz: float
    std_khz: float
    fraction_below: float
    fraction_above: float
    third_moment: float
    b_set: float
    current_sign: int

    def __post_init__(self):
        centers = np.asarray(self.bin_centers_khz, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if centers.shape != weights.shape or centers.ndim != 1 or centers.size == 0:
            raise ValueError("bin centers and weights must be equal-length 1-d arrays")
        if np.any(weights < 0):
            raise ValueError("histogram weights must be non-negative")
        object.__setattr__(self, "bin_centers_khz", centers)
        object.__setattr__(self, "weights", weights)


def _bin_statistics(centers, weights):
    mean = float(np.sum(weights * centers))
    var = float(np.sum(weights * (centers - mean) ** 2))
    std = math.sqrt(max(var, 0.0))
    below = float(np.sum(weights[centers < mean]))
    third = 0.0
    if std > 0:
        third = float(np.sum(weights * (centers - mean) ** 3)) / std**3
    return mean, std, below, 1.0 - below, third


def field_magnitude_histogram(model: FieldGridModel, beam: ProbeBeam,
                              n_bins=120) -> FieldHistogram:
    """Histogram of the field-magnitude deviation over the beam-weighted cell.

    Evaluates |B_0 + sign * B_1| - b_set on the full grid, weights each
    point by the beam's transverse profile (uniform along z), and bins the
    deviations. Weights are normalized to unit total.
    """
    n_bins = int(n_bins)
    if n_bins < 1:
        raise ValueError("n_bins must be at least 1")
    xy = model.axis_grid("xy")
    z = model.axis_grid("z")
    sign = model.current_sign
    dx = model.component("b0x", xy) + sign * model.component("b1x", xy)
    dy = model.component("b0y", xy) + sign * model.component("b1y", xy)
    dz = model.component("b0z", z) + sign * model.component("b1z", z)

    magnitude = np.sqrt(dx[:, None, None] ** 2 + dy[None, :, None] ** 2
                        + (model.b_set + dz[None, None, :]) ** 2)
    deviation = magnitude - model.b_set

    w_xy = beam.weight_xy(xy, xy)
    total = float(w_xy.sum()) * z.size
    if total <= 0:
        raise ValueError("beam weight vanishes on the entire grid")
    weight = np.broadcast_to(w_xy[:, :, None] / total, deviation.shape)

    counts, edges = np.histogram(deviation.ravel(), bins=n_bins,
                                 weights=weight.ravel())
    centers = 0.5 * (edges[:-1] + edges[1:])
    weights = counts / counts.sum()
    mean, std, below, above, third = _bin_statistics(centers, weights)
    return FieldHistogram(bin_centers_khz=centers, weights=weights,
                          mean_khz=mean, std_khz=std, fraction_below=below,
                          fraction_above=above, third_moment=third,
                          b_set=model.b_set, current_sign=sign)


def histogram_to_distribution(hist: FieldHistogram, b_set=None) -> DetuningDistribution:
    """Convert a field-deviation histogram into an empirical detuning distribution.

    A positive field deviation lowers the detuning (the drive frequency sits
    fixed while the atomic splitting grows), so shifts are the negated bin
    centers, converted to angular units. Zero-weight bins are dropped.
    b_set is informational only; deviations are already relative to it.
    """
    del b_set
    keep = hist.weights > 0
    if not np.any(keep):
        raise ValueError("histogram has no weight")
    shifts = khz_to_angular(-hist.bin_centers_khz[keep])
    weights = hist.weights[keep]
    order = np.argsort(shifts)
    return DetuningDistribution(kind="empirical", shifts=tuple(shifts[order]),
                                weights=tuple(weights[order]))
