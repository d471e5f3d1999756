"""Ergodic rate for g(x) = |x|^2 / 2 with constant gam = 2, lam = 0.5.

The gap of the running average stays under the bound c / T and its tail
slope on a log-log scale is about -2 here, better than the guaranteed -1.
"""

import numpy as np

from relaxed_dynamics import (
    IntegratorConfig,
    constant_schedule,
    default_grid,
    fit_tail_slope,
    gradient_system,
    integrate,
    quadratic_function,
    rate_report,
    validate_a6,
)

g = quadratic_function(np.eye(2))
sched = constant_schedule(0.5, 2.0)
print(validate_a6(sched, default_grid(50.0)).describe())

tr = integrate(gradient_system(g), sched, [1.0, 0.0], [0.0, 0.0],
               IntegratorConfig(step=1e-3, horizon=50.0))
T = np.linspace(1.0, 50.0, 50)
rep = rate_report(tr, g, sched, 1.0, 1.0, np.zeros(2), T)

print("     T        gap      bound")
for k in (0, 4, 9, 24, 49):
    print(f"{T[k]:6.1f}  {rep.ergodic_gap[k]:.3e}  {rep.bound[k]:.3e}")
print(f"bound holds everywhere: {bool(np.all(rep.dominated))}")
print(f"tail slope: {fit_tail_slope(rep):.3f}")
