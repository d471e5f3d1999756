"""Inertial relaxed forward-backward iteration (unit time step).

Explicit discretization of the prox-gradient dynamics with ``h_n = 1``:

    x_{n+1} = (1 - c_n) x_n + c_n prox_{eta f}(x_n - eta grad g(x_n)) + c_n (x_n - x_{n-1}),

with ``c_n = lam_n / (1 + gam_n)``, started from ``x_0 = u0`` and ``x_1 = v0``.
Note that ``v0`` is taken literally as the second point, not as a velocity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .csvio import read_csv, write_csv
from .exceptions import ParameterDomainError
from .operators import ProxFunction, SmoothConvex, as_vector

__all__ = [
    "InertialFBConfig",
    "IterateHistory",
    "Comparison",
    "inertial_fb_step",
    "run_inertial_fb",
    "compare_discrete_continuous",
    "write_history_csv",
    "read_history_csv",
]

DIVERGENCE_NORM = 1e8

Seq = Union[float, Callable[[int], float]]


def _as_seq(value: Seq) -> Callable[[int], float]:
    if callable(value):
        return value
    c = float(value)
    return lambda n: c


@dataclass(frozen=True)
class InertialFBConfig:
    """Step size, relaxation/damping sequences and stopping rule.

    ``lambda_seq`` and ``gamma_seq`` are constants or callables of ``n``.
    """

    eta: float
    lambda_seq: Seq = 1.0
    gamma_seq: Seq = 2.0
    max_iter: int = 5000
    stop_residual: float = 1e-8

    def __post_init__(self):
        if not self.eta > 0:
            raise ParameterDomainError(f"eta must be positive, got {self.eta!r}")
        if self.max_iter < 1:
            raise ParameterDomainError("max_iter must be >= 1")
        if not self.stop_residual > 0:
            raise ParameterDomainError("stop_residual must be positive")

    def lam(self, n: int) -> float:
        return float(_as_seq(self.lambda_seq)(n))

    def gam(self, n: int) -> float:
        return float(_as_seq(self.gamma_seq)(n))

    def coefficient(self, n: int) -> float:
        return self.lam(n) / (1.0 + self.gam(n))

    def coefficient_violations(self) -> list:
        """Indices ``n`` where ``lam_n / (1 + gam_n)`` leaves ``(0, 1]``."""
        bad = []
        for n in range(1, self.max_iter + 1):
            c = self.coefficient(n)
            if not 0.0 < c <= 1.0:
                bad.append(n)
        return bad


@dataclass(frozen=True)
class IterateHistory:
    iterates: np.ndarray
    residuals: np.ndarray
    status: str = "max_iter"
    violations: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def diverged(self) -> bool:
        return self.status == "diverged"

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    def __len__(self):
        return self.iterates.shape[0]


def _fb_point(f, g, eta, x):
    y = x - eta * g.grad(x)
    return y if f is None else f.prox(eta, y)


def inertial_fb_step(f: Optional[ProxFunction], g: SmoothConvex, cfg: InertialFBConfig,
                     x_prev, x_cur, n: int) -> np.ndarray:
    """One update ``x_n -> x_{n+1}`` (``f = None`` means f = 0)."""
    if n < 1:
        raise ParameterDomainError(f"iteration index must be >= 1, got {n}")
    x_prev = np.asarray(x_prev, dtype=float)
    x_cur = np.asarray(x_cur, dtype=float)
    c = cfg.coefficient(n)
    p = _fb_point(f, g, cfg.eta, x_cur)
    return (1.0 - c) * x_cur + c * p + c * (x_cur - x_prev)


def run_inertial_fb(f: Optional[ProxFunction], g: SmoothConvex, cfg: InertialFBConfig,
                    u0, v0) -> IterateHistory:
    """Iterate until the FB residual drops to ``stop_residual`` or ``max_iter``.

    ``residuals[k]`` is ``|x_k - prox_{eta f}(x_k - eta grad g(x_k))|``. A run
    whose iterates exceed norm 1e8 stops with status ``"diverged"``.
    """
    x0 = as_vector(u0, g.dim)
    x1 = as_vector(v0, g.dim)
    eta = cfg.eta
    p = _fb_point(f, g, eta, x1)
    iters = [x0, x1]
    res = [float(np.linalg.norm(x0 - _fb_point(f, g, eta, x0))),
           float(np.linalg.norm(x1 - p))]
    status = "max_iter"
    if res[-1] <= cfg.stop_residual:
        status = "converged"
    else:
        x_prev, x_cur = x0, x1
        for n in range(1, cfg.max_iter + 1):
            c = cfg.coefficient(n)
            x_next = (1.0 - c) * x_cur + c * p + c * (x_cur - x_prev)
            iters.append(x_next)
            p = _fb_point(f, g, eta, x_next)
            r = float(np.linalg.norm(x_next - p))
            res.append(r)
            if not np.all(np.isfinite(x_next)) or np.linalg.norm(x_next) > DIVERGENCE_NORM:
                status = "diverged"
                break
            if r <= cfg.stop_residual:
                status = "converged"
                break
            x_prev, x_cur = x_cur, x_next
    return IterateHistory(np.array(iters), np.array(res), status,
                          cfg.coefficient_violations())


class Comparison(NamedTuple):
    final_gap: float
    same_limit: bool


def compare_discrete_continuous(hist: IterateHistory, traj, tol: float = 1e-4) -> Comparison:
    """Distance between the last iterate and the trajectory's final point."""
    xd = hist.final
    xc = traj.x[-1]
    if xd.shape != xc.shape:
        raise ValueError(f"dimension mismatch: {xd.shape} vs {xc.shape}")
    gap = float(np.linalg.norm(xd - xc))
    return Comparison(gap, gap <= tol)


def write_history_csv(hist: IterateHistory, path):
    n = hist.iterates.shape[1]
    header = ["n"] + [f"x_{i}" for i in range(n)] + ["residual"]
    rows = np.column_stack([np.arange(len(hist)), hist.iterates, hist.residuals])
    return write_csv(path, header, rows)


def read_history_csv(path) -> IterateHistory:
    header, data = read_csv(path)
    return IterateHistory(data[:, 1:-1], data[:, -1], "loaded")
