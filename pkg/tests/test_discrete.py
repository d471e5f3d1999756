import numpy as np
import pytest

from relaxed_dynamics import (
    IntegratorConfig,
    InertialFBConfig,
    ParameterDomainError,
    compare_discrete_continuous,
    constant_schedule,
    inertial_fb_step,
    integrate,
    lasso_desk_instance,
    prox_gradient_system,
    quadratic_function,
    read_history_csv,
    run_inertial_fb,
    write_history_csv,
)
from relaxed_dynamics.discrete import IterateHistory


@pytest.fixture(scope="module")
def lasso():
    return lasso_desk_instance()


def half_sq(dim=1):
    return quadratic_function(np.eye(dim))


def zero_g(dim=1):
    return quadratic_function(np.zeros((dim, dim)))


# ----------------------------------------------------------------- single step

def test_step_examples():
    cfg = InertialFBConfig(eta=1.0, lambda_seq=1.0, gamma_seq=1.0)
    assert inertial_fb_step(None, zero_g(), cfg, [0.0], [1.0], 1).tolist() == [1.5]
    assert inertial_fb_step(None, half_sq(), cfg, [2.0], [2.0], 1).tolist() == [1.0]
    with pytest.raises(ParameterDomainError):
        inertial_fb_step(None, zero_g(), cfg, [0.0], [1.0], 0)


def test_step_stationary_at_solution(lasso):
    cfg = InertialFBConfig(eta=lasso.beta)
    xs = lasso.x_star
    for n in (1, 5, 100):
        nxt = inertial_fb_step(lasso.f, lasso.g, cfg, xs, xs, n)
        assert np.linalg.norm(nxt - xs) <= 1e-10


def test_non_inertial_consistency(lasso, rng):
    # feeding x_prev = x_cur removes momentum: relaxed forward-backward step
    f, g, eta = lasso.f, lasso.g, lasso.beta
    cfg = InertialFBConfig(eta=eta, lambda_seq=0.7, gamma_seq=1.3)
    c = 0.7 / 2.3
    for _ in range(50):
        x = rng.normal(size=g.dim) * 3
        fb = f.prox(eta, x - eta * g.grad(x))
        expected = (1 - c) * x + c * fb
        np.testing.assert_allclose(inertial_fb_step(f, g, cfg, x, x, 3), expected,
                                   atol=1e-14, rtol=0)


# ----------------------------------------------------------------- runs

def test_lasso_reaches_oracle(lasso):
    cfg = InertialFBConfig(eta=lasso.beta, lambda_seq=1.0, gamma_seq=2.0, max_iter=5000,
                           stop_residual=1e-8)
    hist = run_inertial_fb(lasso.f, lasso.g, cfg, np.zeros(lasso.dim), np.zeros(lasso.dim))
    assert hist.converged and hist.residuals[-1] <= 1e-8
    assert np.linalg.norm(hist.final - lasso.x_star) <= 1e-6
    assert hist.violations == []
    np.testing.assert_array_equal(hist.iterates[0], np.zeros(lasso.dim))


def companion_radius(eta, c):
    # g = |x|^2 / 2, f = 0: x_{n+1} = (1 + c - c eta) x_n - c x_{n-1}
    C = np.array([[1 + c - c * eta, -c], [1.0, 0.0]])
    return np.max(np.abs(np.linalg.eigvals(C))), np.linalg.eigvals(C)


def test_quadratic_geometric_decay_matches_companion_matrix():
    c = 1.0 / 3.0
    rho, eig = companion_radius(0.5, c)
    assert np.all(np.isreal(eig)) and rho == pytest.approx(2.0 / 3.0, rel=1e-12)
    cfg = InertialFBConfig(eta=0.5, lambda_seq=1.0, gamma_seq=2.0, max_iter=60,
                           stop_residual=1e-12)
    hist = run_inertial_fb(None, half_sq(), cfg, [1.0], [1.0])
    norms = np.abs(hist.iterates[:, 0])
    assert np.all(np.diff(norms[1:]) < 0)
    ratios = norms[2:] / norms[1:-1]
    assert ratios[-1] == pytest.approx(rho, rel=1e-6)


def test_quadratic_unit_step_has_complex_modes():
    # with eta = beta = 1 the recurrence is x_{n+1} = x_n - x_{n-1}/3: radius 3^{-1/2}
    rho, eig = companion_radius(1.0, 1.0 / 3.0)
    assert not np.all(np.isreal(eig)) and rho == pytest.approx(3 ** -0.5, rel=1e-12)
    cfg = InertialFBConfig(eta=1.0, lambda_seq=1.0, gamma_seq=2.0, max_iter=200,
                           stop_residual=1e-300)
    hist = run_inertial_fb(None, half_sq(), cfg, [1.0], [1.0])
    x = hist.iterates[:, 0]
    np.testing.assert_allclose(x[:6], [1.0, 1.0, 2 / 3, 1 / 3, 1 / 9, 0.0], atol=1e-15)
    # envelope decays like rho^n even though |x_n| is not monotone
    assert np.max(np.abs(x[2:40]) / rho ** np.arange(2, 40)) <= 2.0 * (1 + 1e-12)


def test_constant_history_at_solution(lasso):
    cfg = InertialFBConfig(eta=lasso.beta, max_iter=20, stop_residual=1e-300)
    hist = run_inertial_fb(lasso.f, lasso.g, cfg, lasso.x_star, lasso.x_star)
    assert np.max(np.linalg.norm(hist.iterates - lasso.x_star, axis=1)) <= 1e-10


def test_coefficient_violations_reported():
    cfg = InertialFBConfig(eta=1.0, lambda_seq=3.0, gamma_seq=1.0, max_iter=10)
    assert cfg.coefficient_violations() == list(range(1, 11))
    seq = InertialFBConfig(eta=1.0, lambda_seq=lambda n: 4.0 if n == 4 else 1.0, max_iter=10)
    assert seq.coefficient_violations() == [4]


def test_divergence_guard():
    # c = 1.5: x_{n+1} = x_n - 1.5 x_{n-1}, spectral radius sqrt(1.5) > 1
    cfg = InertialFBConfig(eta=1.0, lambda_seq=3.0, gamma_seq=1.0, max_iter=5000)
    hist = run_inertial_fb(None, half_sq(), cfg, [1.0], [1.0])
    assert hist.diverged
    assert np.abs(hist.final[0]) > 1e8
    assert hist.violations


def test_config_validation():
    for kw in (dict(eta=0.0), dict(eta=1.0, max_iter=0), dict(eta=1.0, stop_residual=0.0)):
        with pytest.raises(ParameterDomainError):
            InertialFBConfig(**kw)


# ----------------------------------------------------------------- comparison

def test_compare_at_solution(lasso):
    s = constant_schedule(1.0, 2.0)
    spec = prox_gradient_system(lasso.f, lasso.g, lasso.beta)
    tr = integrate(spec, s, lasso.x_star, np.zeros(lasso.dim),
                   IntegratorConfig(step=1e-2, horizon=1.0))
    hist = run_inertial_fb(lasso.f, lasso.g, InertialFBConfig(eta=lasso.beta, max_iter=3),
                           lasso.x_star, lasso.x_star)
    cmp = compare_discrete_continuous(hist, tr)
    assert cmp.final_gap <= 1e-10 and cmp.same_limit


def test_compare_early_stop_and_mismatch(lasso):
    s = constant_schedule(1.0, 2.0)
    spec = prox_gradient_system(lasso.f, lasso.g, lasso.beta)
    tr = integrate(spec, s, lasso.x_star, np.zeros(lasso.dim),
                   IntegratorConfig(step=1e-2, horizon=1.0))
    hist = run_inertial_fb(lasso.f, lasso.g, InertialFBConfig(eta=lasso.beta, max_iter=2),
                           np.zeros(lasso.dim), np.zeros(lasso.dim))
    assert not compare_discrete_continuous(hist, tr).same_limit
    short = IterateHistory(np.zeros((3, 2)), np.zeros(3))
    with pytest.raises(ValueError):
        compare_discrete_continuous(short, tr)


def test_history_csv_round_trip(tmp_path, lasso):
    cfg = InertialFBConfig(eta=lasso.beta, max_iter=30)
    hist = run_inertial_fb(lasso.f, lasso.g, cfg, np.zeros(lasso.dim), np.ones(lasso.dim))
    path = write_history_csv(hist, tmp_path / "history.csv")
    header = path.read_text().splitlines()[0].split(",")
    assert header == ["n"] + [f"x_{i}" for i in range(lasso.dim)] + ["residual"]
    back = read_history_csv(path)
    np.testing.assert_array_equal(back.iterates, hist.iterates)
    np.testing.assert_array_equal(back.residuals, hist.residuals)
