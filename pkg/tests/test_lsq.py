import numpy as np
import pytest

from rabisim.lsq import LsqResult, ci95_half_widths, covariance, levenberg_marquardt


def _linear_problem(slope=2.0, intercept=-1.0, noise=None):
    t = np.linspace(0.0, 1.0, 50)
    y = slope * t + intercept
    if noise is not None:
        y = y + noise

    def residual(p):
        return p[0] * t + p[1] - y

    def jacobian(p):
        return np.column_stack([t, np.ones_like(t)])

    return residual, jacobian


def test_linear_problem_exact():
    residual, jacobian = _linear_problem()
    res = levenberg_marquardt(residual, jacobian, np.array([0.0, 0.0]))
    assert res.converged
    assert res.params == pytest.approx([2.0, -1.0], abs=1e-8)
    assert res.ssr == pytest.approx(0.0, abs=1e-16)


def test_rosenbrock_valley():
    # classic curved valley, global minimum at (1, 1)
    def residual(p):
        return np.array([10.0 * (p[1] - p[0] ** 2), 1.0 - p[0]])

    def jacobian(p):
        return np.array([[-20.0 * p[0], 10.0], [-1.0, 0.0]])

    res = levenberg_marquardt(residual, jacobian, np.array([-1.2, 1.0]), max_iter=500)
    assert res.converged
    assert res.params == pytest.approx([1.0, 1.0], abs=1e-6)


def test_exponential_decay_recovery():
    t = np.linspace(0.0, 2.0, 80)
    y = 3.0 * np.exp(-1.7 * t)

    def residual(p):
        return p[0] * np.exp(-p[1] * t) - y

    def jacobian(p):
        e = np.exp(-p[1] * t)
        return np.column_stack([e, -p[0] * t * e])

    res = levenberg_marquardt(residual, jacobian, np.array([1.0, 0.5]))
    assert res.converged
    assert res.params == pytest.approx([3.0, 1.7], rel=1e-7)


def test_max_iter_exhaustion_reports_not_converged():
    t = np.linspace(0.0, 2.0, 80)
    y = 3.0 * np.exp(-1.7 * t)

    def residual(p):
        return p[0] * np.exp(-p[1] * t) - y

    def jacobian(p):
        e = np.exp(-p[1] * t)
        return np.column_stack([e, -p[0] * t * e])

    res = levenberg_marquardt(residual, jacobian, np.array([50.0, 30.0]), max_iter=1)
    assert isinstance(res, LsqResult)
    assert not res.converged


def test_covariance_matches_known_variance():
    rng = np.random.default_rng(7)
    noise = 0.05 * rng.standard_normal(50)
    residual, jacobian = _linear_problem(noise=noise)
    res = levenberg_marquardt(residual, jacobian, np.array([0.0, 0.0]))
    assert res.cov is not None
    # residual variance estimate should be near the injected 0.05^2
    jac = jacobian(res.params)
    s2 = res.ssr / (jac.shape[0] - jac.shape[1])
    assert s2 == pytest.approx(0.05**2, rel=0.5)
    half = ci95_half_widths(res.cov, jac.shape[0] - jac.shape[1])
    assert half is not None
    assert np.all(half > 0)
    # the fitted slope should sit inside its own 95% interval of the truth
    assert abs(res.params[0] - 2.0) < 3.0 * half[0]


def test_covariance_none_when_underdetermined():
    jac = np.ones((2, 3))
    assert covariance(jac, 1.0) is None
    assert ci95_half_widths(None, 10) is None
    assert ci95_half_widths(np.eye(2), 0) is None
