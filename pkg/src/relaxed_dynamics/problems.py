"""Desk-scale test problems and the reference solver used as the x* oracle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .operators import (
    ProxFunction,
    SmoothConvex,
    as_vector,
    box_indicator,
    l1_norm,
    least_squares,
    quadratic_function,
)

__all__ = [
    "Problem",
    "prox_gradient_solve",
    "quadratic_problem",
    "box_qp_problem",
    "lasso_problem",
    "lasso_desk_instance",
    "rotation",
    "QUAD_Q",
    "QUAD_C",
]

# default 2-D quadratic; eigenvalues 1.5 -/+ sqrt(0.5)
QUAD_Q = np.array([[2.0, 0.5], [0.5, 1.0]])
QUAD_C = np.array([1.0, -1.0])


@dataclass(frozen=True)
class Problem:
    """``min f(x) + g(x)`` with a precomputed minimizer ``x_star``."""

    name: str
    g: SmoothConvex
    f: Optional[ProxFunction]
    x_star: np.ndarray
    data: dict

    @property
    def beta(self) -> float:
        return self.g.beta

    @property
    def dim(self) -> int:
        return self.g.dim

    def objective(self, x) -> float:
        return self.g.value(x) + (0.0 if self.f is None else self.f.value(x))


def prox_gradient_solve(f: Optional[ProxFunction], g: SmoothConvex, step: Optional[float] = None,
                        x0=None, tol: float = 1e-12, max_iter: int = 1_000_000):
    """Plain proximal-gradient iteration run until the FB residual is <= ``tol``.

    Returns ``(x, residual, iterations)``. The default step is ``g.beta``.
    """
    step = g.beta if step is None else step
    x = np.zeros(g.dim) if x0 is None else as_vector(x0, g.dim)
    res = np.inf
    for k in range(1, max_iter + 1):
        y = x - step * g.grad(x)
        p = y if f is None else f.prox(step, y)
        res = float(np.linalg.norm(x - p))
        x = p
        if res <= tol:
            return x, res, k
    return x, res, max_iter


def quadratic_problem(Q=QUAD_Q, c=QUAD_C) -> Problem:
    g = quadratic_function(Q, c)
    if g.minimizer is not None:
        x_star = g.minimizer
    else:
        x_star = np.linalg.lstsq(np.asarray(Q, float), -np.asarray(c, float), rcond=None)[0]
    return Problem("quadratic", g, None, x_star, {"Q": np.asarray(Q, float), "c": np.asarray(c, float)})


def box_qp_problem(Q, c, lo, hi, tol: float = 1e-13) -> Problem:
    g = quadratic_function(Q, c)
    f = box_indicator(lo, hi)
    x_star, _, _ = prox_gradient_solve(f, g, tol=tol)
    return Problem("box_qp", g, f, x_star,
                   {"Q": np.asarray(Q, float), "c": np.asarray(c, float),
                    "lo": np.asarray(lo, float), "hi": np.asarray(hi, float)})


def lasso_problem(M, y, w: float, tol: float = 1e-13) -> Problem:
    g = least_squares(M, y)
    f = l1_norm(w, g.dim)
    x_star, _, _ = prox_gradient_solve(f, g, tol=tol)
    return Problem("lasso", g, f, x_star, {"M": np.asarray(M, float), "y": np.asarray(y, float), "w": w})


def lasso_desk_instance(seed: int = 0, rows: int = 20, cols: int = 10, sparsity: int = 3,
                        w: float = 0.1, noise: float = 0.01) -> Problem:
    """Seeded ``rows x cols`` lasso with a ``sparsity``-sparse ground truth.

    ``M`` has uniform(-1, 1) entries and ``y = M x_true + noise * N(0, 1)``.
    """
    rng = np.random.default_rng(seed)
    M = rng.uniform(-1.0, 1.0, size=(rows, cols))
    x_true = np.zeros(cols)
    support = rng.choice(cols, size=sparsity, replace=False)
    x_true[support] = rng.choice([-1.0, 1.0], size=sparsity) * rng.uniform(1.0, 2.0, size=sparsity)
    y = M @ x_true + noise * rng.standard_normal(rows)
    prob = lasso_problem(M, y, w)
    prob.data.update({"x_true": x_true, "seed": seed})
    return prob


def rotation(angle: float) -> Callable[[np.ndarray], np.ndarray]:
    """Planar rotation; an isometry, hence nonexpansive, fixing only the origin."""
    c, s = np.cos(angle), np.sin(angle)
    R = np.array([[c, -s], [s, c]])
    return lambda x: R @ x
