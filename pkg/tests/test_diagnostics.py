import math

import numpy as np
import pytest

from relaxed_dynamics import (
    DegenerateFitError,
    IntegratorConfig,
    ParameterDomainError,
    PreconditionError,
    QUAD_C,
    QUAD_Q,
    RangeError,
    RateReport,
    Trajectory,
    cocoercive_system,
    constant_schedule,
    energy_a5,
    ergodic_average,
    ergodic_averages,
    exponential_schedule,
    fejer_limit_check,
    fit_tail_slope,
    gradient_system,
    integrate,
    l2_integrals,
    lyapunov_a1,
    prox_gradient_system,
    quadratic_function,
    quadratic_gradient_field,
    rate_bound,
    rate_report,
    zero_function,
)

R1 = (-3.0 + math.sqrt(5.0)) / 2.0
R2 = (-3.0 - math.sqrt(5.0)) / 2.0
C1 = -R2 / (R1 - R2)
C2 = R1 / (R1 - R2)
ID1 = quadratic_gradient_field(np.eye(1))
OSC = constant_schedule(1.0, 3.0)


@pytest.fixture(scope="module")
def osc40():
    return integrate(cocoercive_system(ID1), OSC, [1.0], [0.0],
                     IntegratorConfig(step=1e-3, horizon=40.0))


def stationary(x_star, n=101, horizon=10.0):
    t = np.linspace(0.0, horizon, n)
    X = np.tile(np.asarray(x_star, float), (n, 1))
    Z = np.zeros_like(X)
    return Trajectory(t, X, Z, Z, Z)


# ----------------------------------------------------------------- Lyapunov

def test_lyapunov_stationary_is_zero():
    tr = stationary([1.0, 2.0])
    F = quadratic_gradient_field(np.eye(2), [-1.0, -2.0])
    lt = lyapunov_a1(tr, constant_schedule(1.0, 2.0), 1.0, [1.0, 2.0], field=F)
    assert np.all(lt.values == 0.0) and lt.max_uptick == 0.0


def test_lyapunov_damped_oscillator_oracle(osc40):
    lt = lyapunov_a1(osc40, OSC, 1.0, [0.0])
    assert lt.values[0] == pytest.approx(1.5, abs=1e-15)
    # closed form: V = x x' + 1.5 x^2 + 3 x'^2
    t = osc40.times
    x = C1 * np.exp(R1 * t) + C2 * np.exp(R2 * t)
    v = C1 * R1 * np.exp(R1 * t) + C2 * R2 * np.exp(R2 * t)
    V = x * v + 1.5 * x * x + 3.0 * v * v
    assert np.all(np.diff(V) < 0)
    np.testing.assert_allclose(lt.values, V, atol=1e-10)
    assert lt.max_uptick == 0.0


def test_lyapunov_zero_field_any_x_star():
    F = quadratic_gradient_field(np.zeros((2, 2)))
    tr = integrate(cocoercive_system(F), constant_schedule(1.0, 2.0), [1.0, 0.0], [1.0, 1.0],
                   IntegratorConfig(step=1e-3, horizon=5.0))
    for xs in ([0.0, 0.0], [3.0, -7.0]):
        # beta is infinite for a constant field; any finite beta is admissible
        lt = lyapunov_a1(tr, constant_schedule(1.0, 2.0), 1.0, xs)
        assert lt.max_uptick <= 1e-12


def test_lyapunov_preconditions(osc40):
    with pytest.raises(PreconditionError):
        lyapunov_a1(osc40, OSC, 1.0, [0.5])
    with pytest.raises(ParameterDomainError):
        lyapunov_a1(osc40, OSC, math.inf, [0.0])
    with pytest.raises(ParameterDomainError):
        lyapunov_a1(stationary([0.0]), OSC, None, [0.0])


# ----------------------------------------------------------------- energy (A5)

def test_energy_a5_stationary():
    g = quadratic_function(QUAD_Q, QUAD_C)
    tr = stationary(g.minimizer)
    lt = energy_a5(tr, constant_schedule(1.0, 2.0), 0.5, g, g.minimizer, zero_function(2))
    np.testing.assert_allclose(lt.values, 0.0, atol=1e-15)


def test_energy_a5_quadratic_decreasing():
    g = quadratic_function(QUAD_Q, QUAD_C)
    beta = 1.0 / np.linalg.eigvalsh(QUAD_Q)[-1]
    s = constant_schedule(1.0, 2.0)
    spec = prox_gradient_system(zero_function(2), g, beta)
    tr = integrate(spec, s, [2.0, -1.0], [0.0, 1.0], IntegratorConfig(step=1e-3, horizon=30.0))
    lt = energy_a5(tr, s, beta, g, g.minimizer)
    assert lt.max_uptick <= 1e-12
    assert np.all(lt.aux["q"] >= -1e-12)
    assert lt.values[-1] < 1e-4 * lt.values[0]


def test_energy_a5_preconditions():
    g = quadratic_function(QUAD_Q, QUAD_C)
    tr = stationary(g.minimizer)
    with pytest.raises(PreconditionError):
        energy_a5(tr, constant_schedule(1.0, 2.0), 0.5, g, [0.0, 0.0], zero_function(2))
    with pytest.raises(ParameterDomainError):
        energy_a5(tr, constant_schedule(1.0, 2.0), 0.0, g, g.minimizer, zero_function(2))


# ----------------------------------------------------------------- ergodic averages

def test_ergodic_average_constant_and_ramp():
    tr = stationary([1.5, -2.0])
    for T in (0.5, 3.3, 10.0):
        np.testing.assert_allclose(ergodic_average(tr, T), [1.5, -2.0], rtol=1e-15)
    t = np.linspace(0.0, 2.0, 11)
    X = np.column_stack([t, np.zeros_like(t)])
    ramp = Trajectory(t, X, np.zeros_like(X), np.zeros_like(X), np.zeros_like(X))
    np.testing.assert_allclose(ergodic_average(ramp, 2.0), [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(ergodic_average(ramp, 1.1), [0.55, 0.0], atol=1e-15)


def test_ergodic_average_damped_closed_form(osc40):
    T = 20.0
    exact = (C1 / R1 * (math.exp(R1 * T) - 1) + C2 / R2 * (math.exp(R2 * T) - 1)) / T
    assert ergodic_average(osc40, T)[0] == pytest.approx(exact, abs=1e-8)


def test_ergodic_average_range(osc40):
    with pytest.raises(RangeError):
        ergodic_average(osc40, 41.0)
    with pytest.raises(ParameterDomainError):
        ergodic_averages(osc40, [0.0, 1.0])


# ----------------------------------------------------------------- rate bound

def test_rate_bound_examples():
    s = constant_schedule(0.5, 2.0)
    T = np.array([1.0, 2.0, 7.0])
    np.testing.assert_allclose(rate_bound(s, 1.0, 1.0, [1, 0], [0, 0], [0, 0], T), 2.25 / T,
                               rtol=1e-15)
    assert rate_bound(s, 1.0, 1.0, [1, 0], [0, 0], [1, 0], 3.0) == 0.0
    s = exponential_schedule(1.0, 0.5, 1.0, 1.0, 0.5, 2.0)
    assert rate_bound(s, 1.0, 0.5, [1.0], [0.0], [0.0], 10.0) == pytest.approx(1.0, rel=1e-15)


def test_rate_bound_scaling_and_domain():
    s = constant_schedule(0.5, 2.0)
    b1 = rate_bound(s, 1.0, 1.0, [1, 0], [0.3, 0], [0, 0], 3.0)
    b2 = rate_bound(s, 1.0, 1.0, [1, 0], [0.3, 0], [0, 0], 6.0)
    assert b1 == 2 * b2
    with pytest.raises(ParameterDomainError):
        rate_bound(s, 1.0, 0.0, [1], [0], [0], 1.0)
    with pytest.raises(ParameterDomainError):
        rate_bound(s, 1.0, 1.5, [1], [0], [0], 1.0, zeta_star=1.0)
    with pytest.raises(ParameterDomainError):
        rate_bound(s, 1.0, 1.0, [1], [0], [0], 0.0)


def test_fit_tail_slope_power_laws():
    T = np.linspace(1.0, 50.0, 40)
    for p in (1.0, 2.0):
        rep = RateReport(T, 3.0 / T ** p, 3.0 / T, math.nan)
        assert fit_tail_slope(rep) == pytest.approx(-p, abs=1e-6)
    with pytest.raises(DegenerateFitError):
        fit_tail_slope(RateReport(T, np.zeros_like(T), T, math.nan))
    with pytest.raises(ParameterDomainError):
        fit_tail_slope(RateReport(T, 1 / T, T, math.nan), 1.0)


def test_rate_report_quadratic():
    g = quadratic_function(QUAD_Q, QUAD_C)
    s = constant_schedule(1.0, 2.0)
    tr = integrate(gradient_system(g), s, [1.0, 1.0], [0.0, 0.0],
                   IntegratorConfig(step=1e-3, horizon=50.0))
    rep = rate_report(tr, g, s, g.beta, 2.0, g.minimizer, np.linspace(1, 50, 50))
    assert np.all(rep.dominated)
    assert np.all(rep.ergodic_gap >= -1e-10)
    assert rep.slope <= -0.9


# ----------------------------------------------------------------- Fejer limit

def test_fejer_stationary():
    assert fejer_limit_check(stationary([1.0, 1.0]), [1.0, 1.0], 2.0) == (0.0, 0.0)


def test_fejer_damped(osc40):
    fj = fejer_limit_check(osc40, [0.0], 5.0)
    assert fj.limit_estimate <= 1e-6
    with pytest.raises(ParameterDomainError):
        fejer_limit_check(osc40, [0.0], 30.0)


def test_fejer_line_of_zeros():
    # B = diag(1, 0): zeros are the x2 axis; x2(t) = u2 + v2 (1 - e^{-gam t}) / gam
    F = quadratic_gradient_field(np.diag([1.0, 0.0]))
    gam = 3.0
    u0, v0 = np.array([1.0, 1.0]), np.array([0.0, 3.0])
    tr = integrate(cocoercive_system(F), constant_schedule(1.0, gam), u0, v0,
                   IntegratorConfig(step=1e-3, horizon=40.0))
    x_bar = np.array([0.0, u0[1] + v0[1] / gam])
    x_star = np.array([0.0, 5.0])
    fj = fejer_limit_check(tr, x_star, 5.0)
    assert fj.limit_estimate == pytest.approx(np.linalg.norm(x_bar - x_star), abs=1e-6)
    assert fj.tail_oscillation <= 1e-6
    # B is constant (zero) on its zero set, the multi-zero case
    np.testing.assert_array_equal(F(np.array([0.0, 2.0])), F(np.array([0.0, -4.0])))


def test_l2_integrals(osc40):
    out = l2_integrals(osc40)
    t = np.linspace(0, 40, 400001)
    x = C1 * np.exp(R1 * t) + C2 * np.exp(R2 * t)
    # field = x for B = Id; integral of x^2 by a fine trapezoid
    assert out["field"] == pytest.approx(np.trapezoid(x * x, t) if hasattr(np, "trapezoid")
                                         else np.trapz(x * x, t), rel=1e-6)
    assert set(out) == {"v", "a", "field"}
