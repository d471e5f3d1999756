import math

import numpy as np
import pytest

from relaxed_dynamics import (
    CapabilityError,
    InvalidScheduleError,
    ParameterDomainError,
    check_derivatives,
    constant_schedule,
    custom_schedule,
    default_grid,
    exponential_schedule,
    validate,
    validate_a1,
    validate_a2,
    validate_a3,
    validate_a4,
    validate_a5,
    validate_a6,
)

GRID = default_grid(50.0)
EXP = dict(a=1.0, rho=0.5, b=1.0, a2=1.0, rho2=0.5, b2=2.0)


def exp_family(**kw):
    p = dict(EXP, **kw)
    return exponential_schedule(p["a"], p["rho"], p["b"], p["a2"], p["rho2"], p["b2"])


def linear_lambda(gam, slope=1.0):
    return custom_schedule(
        lambda t: 1.0 + slope * np.asarray(t, float),
        lambda t: gam + 0.0 * np.asarray(t, float),
        lambda t: slope + 0.0 * np.asarray(t, float),
        lambda t: 0.0 * np.asarray(t, float),
        lambda t: 0.0 * np.asarray(t, float),
    )


# ----------------------------------------------------------------- families

def test_exponential_values():
    s = exponential_schedule(0.0, 0.5, 1.0, 0.0, 0.5, 2.0)
    t = np.linspace(0, 10, 5)
    np.testing.assert_array_equal(s.lam(t), 1.0)
    np.testing.assert_array_equal(s.gam(t), 2.0)
    s = exp_family()
    assert s.lam(0.0) == 0.5
    assert s.lam(200.0) == pytest.approx(1.0, abs=1e-15)
    assert s.gam(0.0) == 3.0
    assert s.dgam(0.0) == -0.5
    assert s.limits[:2] == (1.0, 2.0)


def test_exponential_domain():
    with pytest.raises(ParameterDomainError):
        exponential_schedule(-1, 0.5, 1, 1, 0.5, 2)
    with pytest.raises(ParameterDomainError):
        exponential_schedule(1, 0.5, 0.0, 1, 0.5, 2)
    with pytest.raises(ParameterDomainError):
        constant_schedule(0.0, 1.0)


def test_derivatives_match_central_differences():
    grid = np.linspace(0.0, 50.0, 1000)
    for s in (exp_family(), exp_family(rho=2.0, rho2=0.1), constant_schedule(0.5, 2.0)):
        assert check_derivatives(s, grid, h=1e-5) <= 1e-6


def test_check_derivatives_catches_wrong_derivative():
    s = custom_schedule(lambda t: 1 + np.asarray(t, float), lambda t: 2 + 0 * np.asarray(t, float),
                        lambda t: 2 + 0 * np.asarray(t, float), lambda t: 0 * np.asarray(t, float))
    assert check_derivatives(s, np.linspace(0, 5, 1000)) > 0.5


def test_scaled_schedule():
    s = exp_family().scaled(0.5)
    assert s.lam(0.0) == 0.25
    assert s.dlam(1.0) == pytest.approx(0.5 * exp_family().dlam(1.0))
    assert s.gam(0.0) == 3.0


# ----------------------------------------------------------------- A1

def test_a1_examples():
    r = validate_a1(constant_schedule(1.0, 2.0), 1.0, GRID)
    assert r.feasible and r.theta_star == 3.0
    r = validate_a1(exp_family(), 1.0, GRID)
    assert r.feasible and r.theta_star == pytest.approx(3.0, abs=1e-12)
    assert r.witness_t == math.inf
    r = validate_a1(constant_schedule(1.0, 1.0), 1.0, GRID)
    assert not r.feasible and r.witness_t == 0.0
    assert "theta" in r.violated


def test_a1_infimum_is_the_tail_limit():
    # beta gam^2/lam = (2 + e^{-t/2})^2 (1 + e^{-t/2}) decreases to b2^2 b
    s = exp_family()
    vals = (s.gam(GRID) ** 2 / s.lam(GRID))
    assert np.all(np.diff(vals) < 0)
    assert vals.min() - 1 > 3.0


def test_a1_sign_violation():
    s = custom_schedule(lambda t: 1 + 0 * np.asarray(t, float), lambda t: 2 + np.asarray(t, float),
                        lambda t: 0 * np.asarray(t, float), lambda t: 1 + 0 * np.asarray(t, float))
    r = validate_a1(s, 1.0, GRID)
    assert not r.feasible
    assert r.margin <= 0
    assert "gam'" in r.violated


# ----------------------------------------------------------------- A2..A5

def test_a2_examples():
    r = validate_a2(constant_schedule(1.0, 2.0), GRID)
    assert r.feasible and r.theta_star == 1.0
    g = 1.7
    r = validate_a2(constant_schedule(1.0, g), GRID)
    assert r.theta_star == pytest.approx((g * g - 2) / 2, rel=1e-15)
    r = validate_a2(constant_schedule(1.0, math.sqrt(2.0)), GRID)
    assert not r.feasible


def test_a3_examples():
    r = validate_a3(constant_schedule(1.0, math.sqrt(2.0)), 0.5, GRID)
    assert r.feasible and r.theta_star == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(ParameterDomainError):
        validate_a3(constant_schedule(1.0, 2.0), 1.0, GRID)
    r = validate_a3(constant_schedule(1.0, 2.0), 0.75, GRID)
    assert r.theta_star == pytest.approx(5.0 / 3.0, rel=1e-15)


def test_a4_examples():
    r = validate_a4(constant_schedule(1.0, 2.0), 1.0, 1.0, GRID)
    assert r.params["delta"] == 1.5
    assert r.theta_star == pytest.approx(2.0, rel=1e-15)
    for s in (constant_schedule(1.0, 2.0), exp_family(), constant_schedule(1.0, 1.2)):
        r4 = validate_a4(s, 1.0, 2.0, GRID)
        r2 = validate_a2(s, GRID)
        assert (r4.feasible, r4.margin, r4.witness_t) == (r2.feasible, r2.margin, r2.witness_t)
    with pytest.raises(ParameterDomainError):
        validate_a4(constant_schedule(1.0, 2.0), 1.0, 2.5, GRID)


def test_a5_examples():
    for g, feasible in [(1.5, True), (1.4, False), (3.0, True)]:
        r = validate_a5(constant_schedule(1.0, g), 1.0, 1.0, GRID)
        assert r.feasible == (g * g > 2.0)
    r = validate_a5(constant_schedule(1.0, 3.0), 1.0, 3.0, GRID)
    assert r.theta_star == pytest.approx(5.0 / 3.0, rel=1e-15)
    r = validate_a5(constant_schedule(1.0, math.sqrt(2.0)), 1.0, 1.0, GRID)
    assert not r.feasible


# ----------------------------------------------------------------- A6

def test_a6_examples():
    r = validate_a6(constant_schedule(0.5, 2.0), GRID)
    assert r.feasible and r.zeta_star == 1.0
    r = validate_a6(exp_family(), GRID)
    assert r.feasible and r.zeta_star >= 0.5 - 1e-6


def test_a6_growing_lambda_oracle():
    # gam lam - lam' = 0.5 (1 + t) - 1 = 0.5 t - 0.5 is negative on [0, 1)
    s = linear_lambda(0.5)
    r = validate_a6(s, GRID)
    margins = 0.5 * (1 + GRID) - 1.0
    assert not r.feasible
    assert r.witness_t == 0.0
    assert r.margin == pytest.approx(margins.min(), abs=1e-15) == -0.5


def test_a6_needs_second_derivative():
    s = custom_schedule(lambda t: 1 + 0 * t, lambda t: 2 + 0 * t, lambda t: 0 * t, lambda t: 0 * t)
    with pytest.raises(CapabilityError):
        validate_a6(s, GRID)


def test_a1_and_a6_both_hold_on_exponential_family():
    for beta in (1.0, 0.5, 0.3):
        s = exp_family()
        assert EXP["b2"] ** 2 * EXP["b"] * beta > 1
        assert validate_a1(s, beta, GRID).feasible
        assert validate_a6(s, GRID).feasible


# ----------------------------------------------------------------- report details

def test_report_bounds_bracket_samples():
    s = exp_family()
    r = validate_a1(s, 1.0, GRID)
    lam_lo, lam_hi, gam_lo, gam_hi = r.bounds
    assert lam_lo <= s.lam(GRID).min() and s.lam(GRID).max() <= lam_hi
    assert gam_lo <= s.gam(GRID).min() and s.gam(GRID).max() <= gam_hi


def test_grid_validation():
    with pytest.raises(ParameterDomainError):
        validate_a1(constant_schedule(1.0, 2.0), 1.0, np.linspace(0, 1, 10))
    assert default_grid(20.0).shape == (2000,)
    assert default_grid(20.0)[-1] == 20.0


def test_nonpositive_schedule_rejected():
    s = custom_schedule(lambda t: 1 - np.asarray(t, float), lambda t: 2 + 0 * np.asarray(t, float),
                        lambda t: -1 + 0 * np.asarray(t, float), lambda t: 0 * np.asarray(t, float))
    with pytest.raises(InvalidScheduleError):
        validate_a2(s, GRID)


def test_describe_and_dispatch():
    s = constant_schedule(1.0, 2.0)
    r = validate("A1", s, GRID, beta=1.0)
    assert r.describe().startswith("feasible A1 theta_star=3")
    assert validate("a6", s, GRID).describe().startswith("feasible A6 zeta_star=2")
    with pytest.raises(ValueError):
        validate("a7", s, GRID)
