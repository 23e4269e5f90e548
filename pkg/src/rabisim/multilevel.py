"""Density-matrix evolution of the driven five-level F=2 manifold.

Levels are indexed 0..4 for m = +2..-2. The RF drive couples adjacent m
with the F=2 ladder matrix elements, normalized so the (m=2 <-> m=1)
element equals the bare Rabi frequency exactly. A quadratic Zeeman term
pushes the neighboring transitions out of resonance, which is what isolates
the measured pair; decoherence is pure dephasing at rate gamma, with an
optional population-relaxation rate that defaults to off.

The master equation drho/dt = -i [H, rho] + D(rho) is linear, so it is
integrated as a fixed 25x25 superoperator acting on the flattened density
matrix, either with an adaptive high-order method or with a fixed-step
classical Runge-Kutta loop kept for step-size convergence checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .model import DriveParams, OscillationTrace
from .units import khz_to_angular

# Ladder couplings (1/2) sqrt(F(F+1) - m(m+-1)) relative to the 2<->1 element.
_LADDER = np.array([1.0, np.sqrt(6.0) / 2.0, np.sqrt(6.0) / 2.0, 1.0])

M_VALUES = np.array([2.0, 1.0, 0.0, -1.0, -2.0])

DEFAULT_QUADRATIC_SHIFT = khz_to_angular(100.0)


class IntegrationFailure(RuntimeError):
    """The integrator could not meet its error tolerances."""


class InvariantViolation(RuntimeError):
    """Trace or Hermiticity of the density matrix drifted beyond 1e-6."""


@dataclass(frozen=True)
class LevelSystem:
    """Rotating-frame level shifts, drive couplings, and decoherence rates.

    level_shifts is the (5,) diagonal of the rotating-frame Hamiltonian and
    coupling the symmetric (5,5) matrix of drive strengths, nonzero only
    between adjacent m. All angular (rad/ms).
    """

    n_levels: int
    level_shifts: np.ndarray
    coupling: np.ndarray
    gamma: float
    population_relaxation: float = 0.0

    def __post_init__(self):
        if self.n_levels != 5:
            raise ValueError("only the five-level F=2 manifold is supported")
        shifts = np.asarray(self.level_shifts, dtype=float)
        coupling = np.asarray(self.coupling, dtype=float)
        if shifts.shape != (5,):
            raise ValueError("level_shifts must have shape (5,)")
        if coupling.shape != (5, 5):
            raise ValueError("coupling must have shape (5, 5)")
        if not np.allclose(coupling, coupling.T, atol=0.0, rtol=0.0):
            raise ValueError("coupling must be symmetric")
        adjacency = np.abs(np.subtract.outer(np.arange(5), np.arange(5)))
        if np.any(coupling[adjacency != 1] != 0.0):
            raise ValueError("couplings are allowed between adjacent levels only")
        if self.gamma < 0 or self.population_relaxation < 0:
            raise ValueError("decoherence rates must be non-negative")
        object.__setattr__(self, "level_shifts", shifts)
        object.__setattr__(self, "coupling", coupling)

    def hamiltonian(self) -> np.ndarray:
        return np.diag(self.level_shifts).astype(complex) + 0.5 * self.coupling


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite state carrier."""

    elements: np.ndarray

    def __post_init__(self):
        el = np.asarray(self.elements, dtype=complex)
        if el.ndim != 2 or el.shape[0] != el.shape[1]:
            raise ValueError("density matrix must be square")
        if not np.allclose(el, el.conj().T, atol=1e-9, rtol=0.0):
            raise ValueError("density matrix must be Hermitian")
        trace = complex(np.trace(el))
        if abs(trace - 1.0) > 1e-9:
            raise ValueError(f"density matrix trace must be 1, got {trace}")
        smallest = float(np.linalg.eigvalsh(0.5 * (el + el.conj().T)).min())
        if smallest < -1e-6:
            raise ValueError(
                f"density matrix must be positive semidefinite, smallest eigenvalue {smallest:.2e}"
            )
        object.__setattr__(self, "elements", el)

    @classmethod
    def pure(cls, level: int, n_levels: int = 5) -> "DensityMatrix":
        el = np.zeros((n_levels, n_levels), dtype=complex)
        el[level, level] = 1.0
        return cls(el)


def build_f2_system(drive: DriveParams, local_shift=0.0,
                    quadratic_shift=DEFAULT_QUADRATIC_SHIFT, gamma=0.0,
                    n_levels=5, population_relaxation=0.0) -> LevelSystem:
    """Construct the rotating-frame five-level system.

    The 2<->1 transition is detuned by delta = drive.delta + local_shift;
    the 1<->0 transition sits an extra quadratic_shift away, and the
    remaining two at twice and three times that, the ladder signature of an
    m^2 level shift.
    """
    if n_levels != 5:
        raise ValueError("only the five-level F=2 manifold is supported")
    if quadratic_shift < 0:
        raise ValueError("quadratic_shift must be non-negative")
    delta = drive.delta + local_shift
    q = 0.5 * quadratic_shift
    m = M_VALUES
    shifts = q * (m - 1.0) * (m - 2.0) + (m - 2.0) * delta
    coupling = np.zeros((5, 5))
    for i, rel in enumerate(_LADDER):
        coupling[i, i + 1] = coupling[i + 1, i] = drive.omega0 * rel
    return LevelSystem(n_levels=5, level_shifts=shifts, coupling=coupling,
                       gamma=gamma, population_relaxation=population_relaxation)


def _liouvillian(system: LevelSystem) -> np.ndarray:
    """Superoperator L with d vec(rho)/dt = L vec(rho), row-major flattening."""
    h = system.hamiltonian()
    n = h.shape[0]
    eye = np.eye(n)
    lv = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    off_diagonal = (np.ones((n, n)) - np.eye(n)).ravel()
    lv += np.diag(-system.gamma * off_diagonal)
    rate = system.population_relaxation
    if rate > 0:
        # Populations relax toward the maximally mixed diagonal; coherences
        # pick up the usual half-rate on top of the pure dephasing.
        diag_idx = np.arange(n) * (n + 1)
        relax = np.zeros((n * n, n * n))
        for i in diag_idx:
            relax[i, i] -= rate
            relax[i, diag_idx] += rate / n
        relax -= 0.5 * rate * np.diag(off_diagonal)
        lv += relax
    return lv


def _rk4(lv, y0, times, step):
    """Fixed-step classical Runge-Kutta between the requested samples."""
    if not step > 0:
        raise ValueError("rk4 step must be positive")
    out = np.empty((times.size, y0.size), dtype=complex)
    out[0] = y0
    y = y0.copy()
    for k in range(times.size - 1):
        span = times[k + 1] - times[k]
        n_sub = max(1, int(np.ceil(span / step)))
        h = span / n_sub
        for _ in range(n_sub):
            k1 = lv @ y
            k2 = lv @ (y + 0.5 * h * k1)
            k3 = lv @ (y + 0.5 * h * k2)
            k4 = lv @ (y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = y
    return out


def _check_invariants(rhos):
    trace_drift = float(np.abs(np.einsum("tii->t", rhos) - 1.0).max())
    herm_drift = float(np.abs(rhos - np.conj(np.swapaxes(rhos, 1, 2))).max())
    if trace_drift > 1e-6 or herm_drift > 1e-6:
        raise InvariantViolation(
            f"trace drift {trace_drift:.2e}, hermiticity drift {herm_drift:.2e}"
        )


def evolve_density(system: LevelSystem, rho0: DensityMatrix, times, *,
                   method="adaptive", rtol=1e-10, atol=1e-12,
                   rk4_step=2.5e-5) -> np.ndarray:
    """Integrate the master equation; returns the (n_times, 5, 5) state stack.

    method "adaptive" is a high-order adaptive integrator evaluated at the
    requested samples; "rk4" a fixed-step path with step rk4_step (ms) used
    by the step-halving convergence checks. Raises IntegrationFailure when
    the adaptive solver gives up and InvariantViolation when trace or
    Hermiticity drifts beyond 1e-6.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise ValueError("need at least two sample times")
    lv = _liouvillian(system)
    y0 = rho0.elements.ravel().astype(complex)
    if method == "adaptive":
        sol = solve_ivp(lambda _t, y: lv @ y, (times[0], times[-1]), y0,
                        t_eval=times, method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise IntegrationFailure(sol.message)
        ys = sol.y.T
    elif method == "rk4":
        ys = _rk4(lv, y0, times, rk4_step)
    else:
        raise ValueError(f"unknown integration method {method!r}")
    rhos = ys.reshape(times.size, 5, 5)
    _check_invariants(rhos)
    return rhos


def evolve(system: LevelSystem, rho0: DensityMatrix, times, **kwargs) -> OscillationTrace:
    """Master-equation evolution reduced to the m=1 population trace."""
    rhos = evolve_density(system, rho0, times, **kwargs)
    return OscillationTrace.from_times(np.asarray(times, dtype=float),
                                       rhos[:, 1, 1].real)


def p1_multilevel(drive: DriveParams, local_shift=0.0,
                  quadratic_shift=DEFAULT_QUADRATIC_SHIFT, gamma=0.0,
                  times=None, **kwargs) -> OscillationTrace:
    """build_f2_system + evolve from all population in m=2."""
    system = build_f2_system(drive, local_shift, quadratic_shift, gamma)
    return evolve(system, DensityMatrix.pure(0), times, **kwargs)
