"""Damped oscillator x'' + 3x' + x = 0 against its closed form.

Shows the RK4 error at two step sizes and the Lyapunov function along the
trajectory.  Run with ``python3 demos/damped_oscillator.py``.
"""

import math

import numpy as np

from relaxed_dynamics import (
    IntegratorConfig,
    cocoercive_system,
    constant_schedule,
    integrate,
    lyapunov_a1,
    quadratic_gradient_field,
)

r1 = (-3.0 + math.sqrt(5.0)) / 2.0
r2 = (-3.0 - math.sqrt(5.0)) / 2.0
c1, c2 = -r2 / (r1 - r2), r1 / (r1 - r2)

spec = cocoercive_system(quadratic_gradient_field(np.eye(1)))
sched = constant_schedule(1.0, 3.0)

errors = []
for h in (2e-3, 1e-3):
    tr = integrate(spec, sched, [1.0], [0.0], IntegratorConfig(step=h, horizon=20.0))
    exact = c1 * np.exp(r1 * tr.times) + c2 * np.exp(r2 * tr.times)
    errors.append(np.max(np.abs(tr.x[:, 0] - exact)))
    print(f"step {h:.0e}: max error {errors[-1]:.3e}")
print(f"ratio {errors[0] / errors[1]:.2f} (fourth order gives 16)")

lt = lyapunov_a1(tr, sched, 1.0, [0.0])
for t in (0.0, 5.0, 10.0, 20.0):
    i = int(np.searchsorted(tr.times, t))
    print(f"V({t:4.1f}) = {lt.values[i]:.6e}")
print(f"largest increase of V: {lt.max_uptick:.1e}")
