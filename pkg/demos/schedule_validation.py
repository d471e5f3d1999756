"""Checking relaxation/damping schedules before a run.

The exponential family approaches its limits (b, b2) from below and above;
the validators report the admissible margin and where it is tightest.
"""

import numpy as np

from relaxed_dynamics import (
    constant_schedule,
    default_grid,
    exponential_schedule,
    validate_a1,
    validate_a4,
    validate_a5,
    validate_a6,
)

grid = default_grid(50.0)
exp_family = exponential_schedule(1.0, 0.5, 1.0, 1.0, 0.5, 2.0)

print("exponential family, beta = 1")
print("  ", validate_a1(exp_family, 1.0, grid).describe())
print("  ", validate_a6(exp_family, grid).describe())

print("constant gam = 1, lam = 1 (the margin closes at t = 0)")
rep = validate_a1(constant_schedule(1.0, 1.0), 1.0, grid)
print("  ", rep.describe())

print("forward-backward step sizes for gam = 3, lam = 2, beta = 1")
sched = constant_schedule(2.0, 3.0)
for eta in (1.0, 2.0, 3.0):
    if eta <= 2.0:
        print(f"   eta = {eta}:", validate_a4(sched, 1.0, eta, grid).describe())
    print(f"   eta = {eta}:", validate_a5(sched, 1.0, eta, grid).describe())

lam = exp_family.lam(np.array([0.0, 1.0, 10.0]))
print("lam at t = 0, 1, 10:", np.round(lam, 6))
