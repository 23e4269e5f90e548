"""Damped-cosine fits of oscillation traces.

Two model families. The single-frequency model

    A exp(-gamma t) cos(omega t + phi) + B t + C

(or its Gaussian-decay variant exp(-gamma^2 t^2 / 2)) is the short-window
workhorse for frequency, amplitude, and decay extraction. The two-frequency
model

    A cos(Omega0 t + phi_a) + B exp(-gamma_b^2 t^2 / 2) cos(omega_bar t + phi_b) + offset

pins one component at the known bare Rabi frequency and lets the other move;
the amplitude ratio |A| / (|A| + |B|) is the pinned fraction of the signal.
Both are least-squares fits with analytic Jacobians, seeded from the FFT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lsq import ci95_half_widths, levenberg_marquardt
from .model import OscillationTrace


class FitFailure(RuntimeError):
    """No fit start converged; carries the best (non-converged) iterate."""

    def __init__(self, message, last_fit=None):
        super().__init__(message)
        self.last_fit = last_fit


@dataclass(frozen=True)
class SingleFreqFit:
    """Parameters of the single damped cosine with linear drift.

    gamma is 1/ms (exponential decay) or the Gaussian rate (also 1/ms) when
    decay is "gauss". ci95 maps parameter names to 95% half-widths; inf
    where the fit carries no information.
    """

    A: float
    gamma: float
    omega: float
    phi: float
    B: float
    C: float
    r_squared: float
    ci95: dict = field(default_factory=dict)
    decay: str = "exp"
    converged: bool = True
    flat: bool = False
    ssr: float = 0.0
    n_iter: int = 0

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("omega must be non-negative")
        object.__setattr__(self, "r_squared", float(np.clip(self.r_squared, 0.0, 1.0)))


@dataclass(frozen=True)
class TwoFreqFit:
    """Parameters of the pinned-plus-moving two-frequency model.

    The slow component oscillates at the supplied omega0 with Gaussian rate
    gamma_a (fixed at zero by default); the fast one at omega_bar >= omega0
    with rate gamma_b. fraction_a = |A| / (|A| + |B_amp|). indistinguishable
    marks fits where omega_bar collapses onto omega0 within its own CI;
    fraction_ci_wide marks fits whose full fraction CI width exceeds 25%
    of the fraction itself (the unreliable, dashed regime).
    """

    A: float
    phi_a: float
    gamma_a: float
    B_amp: float
    omega_bar: float
    phi_b: float
    gamma_b: float
    offset: float
    omega0: float
    r_squared: float
    fraction_a: float
    ci95: dict = field(default_factory=dict)
    indistinguishable: bool = False
    fraction_ci_wide: bool = False
    converged: bool = True
    ssr: float = 0.0
    n_iter: int = 0

    def __post_init__(self):
        if not (self.gamma_b >= self.gamma_a >= 0):
            raise ValueError("decay rates must satisfy gamma_b >= gamma_a >= 0")
        if self.omega_bar < self.omega0:
            raise ValueError("omega_bar must not fall below omega0")
        object.__setattr__(self, "r_squared", float(np.clip(self.r_squared, 0.0, 1.0)))


def _window_slice(trace: OscillationTrace, window):
    t_min, t_max = float(window[0]), float(window[1])
    if not t_max > t_min:
        raise ValueError("fit window must have t_max > t_min")
    t = trace.times
    eps = 0.5 * trace.dt
    if t_min < t[0] - eps or t_max > t[-1] + eps:
        raise ValueError(
            f"fit window [{t_min}, {t_max}] falls outside the trace "
            f"[{t[0]:.6g}, {t[-1]:.6g}]"
        )
    mask = (t >= t_min - 1e-12) & (t <= t_max + 1e-12)
    if int(mask.sum()) < 30:
        raise ValueError("fit window must contain at least 30 samples")
    return t[mask], trace.values[mask]


def _fft_peak_frequencies(t, y, n_peaks):
    """Angular frequencies of the strongest spectral peaks of y (detrended)."""
    from scipy.signal import find_peaks

    n = y.size
    nfft = 4 * n
    power = np.abs(np.fft.rfft(y * np.hanning(n), n=nfft))
    freqs = np.fft.rfftfreq(nfft, d=t[1] - t[0])
    floor = 0.5 / (t[-1] - t[0])  # stay clear of the DC leakage
    idx, _ = find_peaks(power, prominence=0.05 * power.max()) if power.max() > 0 else ([], None)
    idx = [i for i in idx if freqs[i] > floor]
    idx.sort(key=lambda i: -power[i])
    out = [2.0 * math.pi * freqs[i] for i in idx[:n_peaks]]
    if not out:
        best = int(np.argmax(np.where(freqs > floor, power, -1.0)))
        out = [2.0 * math.pi * freqs[best]]
    return out


def _detrend_line(t, y):
    a = np.column_stack([t, np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    return coef[0], coef[1]


def _env_exp(gamma, t):
    # Clamp the exponent so a wildly negative trial gamma yields a huge
    # finite residual (rejected step) instead of an overflow warning.
    return np.exp(np.minimum(-gamma * t, 50.0))


def _single_model(p, t, decay):
    a, gamma, omega, phi, b, c = p
    env = _env_exp(gamma, t) if decay == "exp" else np.exp(-0.5 * (gamma * t) ** 2)
    return a * env * np.cos(omega * t + phi) + b * t + c


def _single_jacobian(p, t, decay):
    a, gamma, omega, phi, b, c = p
    if decay == "exp":
        env = _env_exp(gamma, t)
        denv = -t * env
    else:
        env = np.exp(-0.5 * (gamma * t) ** 2)
        denv = -gamma * t * t * env
    cos_part = np.cos(omega * t + phi)
    sin_part = np.sin(omega * t + phi)
    jac = np.empty((t.size, 6))
    jac[:, 0] = env * cos_part
    jac[:, 1] = a * denv * cos_part
    jac[:, 2] = -a * env * t * sin_part
    jac[:, 3] = -a * env * sin_part
    jac[:, 4] = t
    jac[:, 5] = 1.0
    return jac


def _r_squared(y, ssr):
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot <= 0:
        return 0.0
    return 1.0 - ssr / ss_tot


_SINGLE_PARAM_NAMES = ("A", "gamma", "omega", "phi", "B", "C")


def fit_single_frequency(trace: OscillationTrace, window=(0.01, 0.6), *,
                         decay="exp", max_iter=200, n_starts=5,
                         gamma_guesses=None) -> SingleFreqFit:
    """Fit the single damped cosine with drift on the given time window.

    Initial guesses come from the FFT peaks of the detrended window (up to
    n_starts of them), a quadrature demodulation for amplitude and phase,
    and a straight line for the drift. gamma_guesses extends the built-in
    decay-rate starts with caller knowledge (a known spread, say). A flat
    window returns an A ~ 0 fit with infinite CIs rather than raising;
    FitFailure is raised only when no start converges within max_iter.
    """
    if decay not in ("exp", "gauss"):
        raise ValueError(f"unknown decay model {decay!r}")
    t, y = _window_slice(trace, window)
    span = t[-1] - t[0]
    scale = float(np.ptp(y))
    if scale < 1e-14 * max(1.0, abs(float(y.mean()))) or scale == 0.0:
        ci = {name: math.inf for name in _SINGLE_PARAM_NAMES}
        return SingleFreqFit(A=0.0, gamma=0.0, omega=0.0, phi=0.0, B=0.0,
                             C=float(y.mean()), r_squared=0.0, ci95=ci,
                             decay=decay, converged=True, flat=True)

    b0, c0 = _detrend_line(t, y)
    resid = y - (b0 * t + c0)
    omega_starts = _fft_peak_frequencies(t, resid, n_starts)
    rate_starts = [0.1 / span, 1.0 / span, 3.0 / span]
    if gamma_guesses is not None:
        rate_starts += [float(g) for g in gamma_guesses if g > 0]

    def residual_fn(p):
        return _single_model(p, t, decay) - y

    def jacobian_fn(p):
        return _single_jacobian(p, t, decay)

    best = None
    best_converged = None
    for omega_guess in omega_starts:
        demod = np.sum(resid * np.exp(-1j * omega_guess * t))
        phi_guess = float(np.angle(demod))
        a_guess = max(scale / 2.0, 1e-12)
        for rate in rate_starts:
            p0 = np.array([a_guess, rate, omega_guess, phi_guess, b0, c0])
            res = levenberg_marquardt(residual_fn, jacobian_fn, p0, max_iter=max_iter)
            if best is None or res.ssr < best.ssr:
                best = res
            if res.converged and (best_converged is None or res.ssr < best_converged.ssr):
                best_converged = res
        if best_converged is not None and _r_squared(y, best_converged.ssr) > 0.9999:
            break

    chosen = best_converged if best_converged is not None else best
    fit = _package_single(chosen, y, decay)
    if best_converged is None:
        raise FitFailure(
            f"single-frequency fit did not converge within {max_iter} iterations",
            last_fit=fit,
        )
    return fit


def _package_single(res, y, decay) -> SingleFreqFit:
    a, gamma, omega, phi, b, c = res.params
    # Canonical orientation: omega >= 0, A >= 0, phi in (-pi, pi].
    if omega < 0:
        omega, phi = -omega, -phi
    if a < 0:
        a, phi = -a, phi + math.pi
    phi = math.remainder(phi, 2.0 * math.pi)
    if decay == "gauss":
        # the Gaussian envelope is even in gamma, so the sign carries nothing
        gamma = abs(gamma)
    ci_arr = ci95_half_widths(res.cov, y.size - 6)
    if ci_arr is None:
        ci = {name: math.inf for name in _SINGLE_PARAM_NAMES}
    else:
        ci = dict(zip(_SINGLE_PARAM_NAMES, (float(v) for v in ci_arr)))
    return SingleFreqFit(A=float(a), gamma=float(gamma), omega=float(omega),
                         phi=float(phi), B=float(b), C=float(c),
                         r_squared=_r_squared(y, res.ssr), ci95=ci, decay=decay,
                         converged=res.converged, ssr=res.ssr, n_iter=res.n_iter)


def _two_freq_design(t, omega0, omega_bar, gamma_b):
    env = np.exp(-0.5 * (gamma_b * t) ** 2)
    return np.column_stack([
        np.cos(omega0 * t),
        np.sin(omega0 * t),
        env * np.cos(omega_bar * t),
        env * np.sin(omega_bar * t),
        np.ones_like(t),
    ])


def _two_freq_model(p, t, omega0):
    a1, a2, b1, b2, c, du, gb = p
    omega_bar = omega0 + abs(du)
    env = np.exp(-0.5 * (abs(gb) * t) ** 2)
    return (a1 * np.cos(omega0 * t) + a2 * np.sin(omega0 * t)
            + env * (b1 * np.cos(omega_bar * t) + b2 * np.sin(omega_bar * t)) + c)


def _two_freq_jacobian(p, t, omega0):
    a1, a2, b1, b2, c, du, gb = p
    omega_bar = omega0 + abs(du)
    gb_abs = abs(gb)
    env = np.exp(-0.5 * (gb_abs * t) ** 2)
    cos_bar = np.cos(omega_bar * t)
    sin_bar = np.sin(omega_bar * t)
    fast = b1 * cos_bar + b2 * sin_bar
    jac = np.empty((t.size, 7))
    jac[:, 0] = np.cos(omega0 * t)
    jac[:, 1] = np.sin(omega0 * t)
    jac[:, 2] = env * cos_bar
    jac[:, 3] = env * sin_bar
    jac[:, 4] = 1.0
    jac[:, 5] = math.copysign(1.0, du) * env * t * (-b1 * sin_bar + b2 * cos_bar)
    jac[:, 6] = math.copysign(1.0, gb) * (-gb_abs * t * t) * env * fast
    return jac


def fit_two_frequency(trace: OscillationTrace, omega0, window=None, *,
                      max_iter=200) -> TwoFreqFit:
    """Fit the pinned-plus-moving two-frequency model.

    omega0 is the known bare Rabi frequency (a model input, never fitted);
    the default window is ten bare periods from the start of the trace,
    clipped to its end. The slow component's decay is fixed at zero.
    Initialization scans a coarse (omega_bar, gamma_b) grid where the
    amplitudes and offset are linear and solved exactly, then polishes the
    best candidates with the full nonlinear fit.
    """
    omega0 = float(omega0)
    if omega0 <= 0:
        raise ValueError("omega0 must be positive")
    if window is None:
        t_start = trace.t0
        t_end = trace.t0 + trace.dt * (len(trace) - 1)
        window = (t_start, min(t_start + 10.0 * 2.0 * math.pi / omega0, t_end))
    t, y = _window_slice(trace, window)

    scale = float(np.ptp(y))
    if scale == 0.0:
        ci = {name: math.inf for name in _TWO_PARAM_NAMES}
        return TwoFreqFit(A=0.0, phi_a=0.0, gamma_a=0.0, B_amp=0.0,
                          omega_bar=omega0, phi_b=0.0, gamma_b=0.0,
                          offset=float(y.mean()), omega0=omega0, r_squared=0.0,
                          fraction_a=0.0, ci95=ci, indistinguishable=True,
                          fraction_ci_wide=True, converged=True)

    # Coarse variable-projection scan.
    omega_bar_grid = omega0 * np.linspace(1.0, 4.0, 24)
    gamma_b_grid = omega0 * np.linspace(0.02, 2.0, 16)
    candidates = []
    for omega_bar in omega_bar_grid:
        for gamma_b in gamma_b_grid:
            design = _two_freq_design(t, omega0, omega_bar, gamma_b)
            coef, res_ss, rank, _ = np.linalg.lstsq(design, y, rcond=None)
            if res_ss.size and rank == design.shape[1]:
                ssr = float(res_ss[0])
            else:
                diff = design @ coef - y
                ssr = float(diff @ diff)
            candidates.append((ssr, omega_bar, gamma_b, coef))
    candidates.sort(key=lambda c: c[0])

    def residual_fn(p):
        return _two_freq_model(p, t, omega0) - y

    def jacobian_fn(p):
        return _two_freq_jacobian(p, t, omega0)

    # Polish the best node and the best node from a different grid region.
    starts = [candidates[0]]
    for cand in candidates[1:]:
        if (abs(cand[1] - starts[0][1]) > 0.25 * omega0
                or abs(cand[2] - starts[0][2]) > 0.25 * omega0):
            starts.append(cand)
            break
    best = None
    best_converged = None
    for _ssr, omega_bar, gamma_b, coef in starts:
        p0 = np.array([coef[0], coef[1], coef[2], coef[3], coef[4],
                       max(omega_bar - omega0, 1e-6), gamma_b])
        res = levenberg_marquardt(residual_fn, jacobian_fn, p0, max_iter=max_iter)
        if best is None or res.ssr < best.ssr:
            best = res
        if res.converged and (best_converged is None or res.ssr < best_converged.ssr):
            best_converged = res

    chosen = best_converged if best_converged is not None else best
    fit = _package_two(chosen, t, y, omega0)
    if best_converged is None:
        raise FitFailure(
            f"two-frequency fit did not converge within {max_iter} iterations",
            last_fit=fit,
        )
    return fit


_TWO_PARAM_NAMES = ("A", "phi_a", "B_amp", "omega_bar", "phi_b", "gamma_b",
                    "offset", "fraction_a")


def _package_two(res, t, y, omega0) -> TwoFreqFit:
    a1, a2, b1, b2, c, du, gb = res.params
    amp_a = math.hypot(a1, a2)
    amp_b = math.hypot(b1, b2)
    phi_a = math.atan2(-a2, a1)
    phi_b = math.atan2(-b2, b1)
    omega_bar = omega0 + abs(du)
    gamma_b = abs(gb)
    total = amp_a + amp_b
    fraction = amp_a / total if total > 0 else 0.0

    ci = {name: math.inf for name in _TWO_PARAM_NAMES}
    if res.cov is not None and y.size > 7:
        # Delta method through the amplitude and fraction transforms.
        grads = {}
        if amp_a > 0:
            grads["A"] = np.array([a1 / amp_a, a2 / amp_a, 0, 0, 0, 0, 0])
            grads["phi_a"] = np.array([a2 / amp_a**2, -a1 / amp_a**2, 0, 0, 0, 0, 0])
        if amp_b > 0:
            grads["B_amp"] = np.array([0, 0, b1 / amp_b, b2 / amp_b, 0, 0, 0])
            grads["phi_b"] = np.array([0, 0, b2 / amp_b**2, -b1 / amp_b**2, 0, 0, 0])
        grads["omega_bar"] = np.array([0, 0, 0, 0, 0, math.copysign(1.0, du), 0])
        grads["gamma_b"] = np.array([0, 0, 0, 0, 0, 0, math.copysign(1.0, gb)])
        grads["offset"] = np.array([0, 0, 0, 0, 1.0, 0, 0])
        if total > 0 and amp_a > 0 and amp_b > 0:
            d_a = (amp_b / total**2) * np.array([a1 / amp_a, a2 / amp_a, 0, 0, 0, 0, 0])
            d_b = (amp_a / total**2) * np.array([0, 0, b1 / amp_b, b2 / amp_b, 0, 0, 0])
            grads["fraction_a"] = d_a - d_b
        elif total > 0 and amp_b > 0:
            grads["fraction_a"] = (1.0 / amp_b) * np.array([1.0, 1.0, 0, 0, 0, 0, 0])
        from scipy.stats import t as _student_t

        tq = float(_student_t.ppf(0.975, y.size - 7))
        for name, grad in grads.items():
            var = float(grad @ res.cov @ grad)
            ci[name] = tq * math.sqrt(max(var, 0.0))

    ci_omega_bar = ci.get("omega_bar", math.inf)
    indistinguishable = (omega_bar - omega0) < ci_omega_bar
    fraction_ci_wide = (2.0 * ci.get("fraction_a", math.inf)) > 0.25 * fraction
    return TwoFreqFit(A=amp_a, phi_a=phi_a, gamma_a=0.0, B_amp=amp_b,
                      omega_bar=omega_bar, phi_b=phi_b, gamma_b=gamma_b,
                      offset=float(c), omega0=omega0,
                      r_squared=_r_squared(y, res.ssr), fraction_a=fraction,
                      ci95=ci, indistinguishable=bool(indistinguishable),
                      fraction_ci_wide=bool(fraction_ci_wide),
                      converged=res.converged, ssr=res.ssr, n_iter=res.n_iter)
