"""Forward-backward dynamics on the seeded 20 x 10 lasso instance.

Integrates with step sizes eta = beta and eta = 2 beta, then reports the
terminal residual and the distance to the proximal-gradient reference x*.
"""

import numpy as np

from relaxed_dynamics import (
    IntegratorConfig,
    constant_schedule,
    default_grid,
    fb_residual_norm,
    integrate,
    lasso_desk_instance,
    prox_gradient_system,
    validate_a4,
)

prob = lasso_desk_instance(seed=0)
sched = constant_schedule(9.0, 5.0)
cfg = IntegratorConfig(step=2e-3, horizon=50.0, record_every=0.1)
print(f"beta = {prob.beta:.4f}, |x*|_0 = {np.count_nonzero(np.abs(prob.x_star) > 1e-10)}")

for ratio in (1.0, 2.0):
    eta = ratio * prob.beta
    rep = validate_a4(sched, prob.beta, eta, default_grid(50.0))
    spec = prox_gradient_system(prob.f, prob.g, eta)
    tr = integrate(spec, sched, np.zeros(prob.dim), np.zeros(prob.dim), cfg)
    x = tr.x[-1]
    print(f"eta = {ratio:g} beta: {rep.describe()}")
    print(f"   residual {fb_residual_norm(prob.f, prob.g, eta, x):.2e}, "
          f"distance to x* {np.linalg.norm(x - prob.x_star):.2e}")
