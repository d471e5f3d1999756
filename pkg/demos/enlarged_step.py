"""Step size eta = 3 beta, beyond the range where the residual is cocoercive.

The modified energy still decreases, and the trajectory reaches the lasso
solution as long as gam^2 exceeds eta * theta + eta / beta + 1.
"""

import numpy as np

from relaxed_dynamics import (
    IntegratorConfig,
    ParameterDomainError,
    constant_schedule,
    default_grid,
    energy_a5,
    integrate,
    lasso_desk_instance,
    prox_gradient_system,
    validate_a4,
    validate_a5,
)

prob = lasso_desk_instance(seed=0)
eta = 3.0 * prob.beta
sched = constant_schedule(2.0, 3.0)
grid = default_grid(50.0)

try:
    validate_a4(sched, prob.beta, eta, grid)
except ParameterDomainError as exc:
    print("cocoercive regime rejects eta = 3 beta:", exc)
print(validate_a5(sched, prob.beta, eta, grid).describe())

spec = prox_gradient_system(prob.f, prob.g, eta)
tr = integrate(spec, sched, np.zeros(prob.dim), np.zeros(prob.dim),
               IntegratorConfig(step=2e-3, horizon=50.0, record_every=0.1))
en = energy_a5(tr, sched, eta, prob.g, prob.x_star, prob.f)
print(f"energy {en.values[0]:.3e} -> {en.values[-1]:.3e}, max increase {en.max_uptick:.1e}")
print(f"distance to x*: {np.linalg.norm(tr.x[-1] - prob.x_star):.2e}")
