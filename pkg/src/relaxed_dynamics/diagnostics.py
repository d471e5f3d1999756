"""Convergence certificates computed along recorded trajectories.

- :func:`lyapunov_a1` traces ``h' + gam h + beta (gam/lam) |x'|^2`` with
  ``h = |x - x*|^2 / 2``; under the cocoercive-field assumption this is
  nonincreasing.
- :func:`energy_a5` traces the modified energy used for enlarged steps.
- :func:`ergodic_average`, :func:`rate_bound`, :func:`rate_report` and
  :func:`fit_tail_slope` check the O(1/T) rate of ``g`` along the running
  average of ``x``.
- :func:`fejer_limit_check` estimates ``lim |x(t) - x*|`` over a trailing window.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .exceptions import (
    DegenerateFitError,
    ParameterDomainError,
    PreconditionError,
    RangeError,
)
from .operators import ProxFunction, SmoothConvex, as_vector
from .schedules import Schedule

__all__ = [
    "LyapunovTrace",
    "RateReport",
    "FejerCheck",
    "lyapunov_a1",
    "energy_a5",
    "ergodic_average",
    "ergodic_averages",
    "rate_bound",
    "rate_report",
    "fit_tail_slope",
    "fejer_limit_check",
    "l2_integrals",
    "fb_residual_norm",
]

ZERO_TOL = 1e-8


@dataclass(frozen=True)
class LyapunovTrace:
    times: np.ndarray
    values: np.ndarray
    max_uptick: float
    aux: Optional[dict] = None

    @classmethod
    def from_values(cls, times, values, aux=None):
        values = np.asarray(values, dtype=float)
        inc = np.diff(values)
        up = float(max(inc.max(initial=0.0), 0.0))
        return cls(np.asarray(times, dtype=float), values, up, aux)


@dataclass(frozen=True)
class RateReport:
    T_grid: np.ndarray
    ergodic_gap: np.ndarray
    bound: np.ndarray
    slope: float

    @property
    def dominated(self) -> np.ndarray:
        return self.ergodic_gap <= self.bound + 1e-9


class FejerCheck(NamedTuple):
    limit_estimate: float
    tail_oscillation: float


def _sched(traj, s):
    t = traj.times
    lam = np.broadcast_to(np.asarray(s.lam(t), dtype=float), t.shape)
    gam = np.broadcast_to(np.asarray(s.gam(t), dtype=float), t.shape)
    return lam, gam


def lyapunov_a1(traj, s: Schedule, beta: Optional[float] = None, x_star=None,
                field=None) -> LyapunovTrace:
    """``<x - x*, x'> + gam |x - x*|^2 / 2 + beta (gam/lam) |x'|^2`` per sample.

    ``field`` defaults to the trajectory's reduced field and is used to check
    that ``x_star`` is a zero; ``beta`` defaults to that field's modulus.
    """
    if field is None and traj.system is not None:
        field = traj.system.field
    if beta is None:
        beta = None if field is None else field.beta
    if beta is None or not np.isfinite(beta) or beta <= 0:
        raise ParameterDomainError(f"need a finite positive beta, got {beta!r}")
    x_star = as_vector(x_star, traj.dim)
    if field is not None:
        res = float(np.linalg.norm(field(x_star)))
        if res > ZERO_TOL:
            raise PreconditionError(f"x_star is not a zero of the field: |B x*| = {res:.3e}")
    lam, gam = _sched(traj, s)
    d = traj.x - x_star
    hdot = np.einsum("ij,ij->i", d, traj.v)
    h = 0.5 * np.einsum("ij,ij->i", d, d)
    vv = np.einsum("ij,ij->i", traj.v, traj.v)
    return LyapunovTrace.from_values(traj.times, hdot + gam * h + beta * (gam / lam) * vv)


def fb_residual_norm(f: Optional[ProxFunction], g: SmoothConvex, eta: float, x) -> float:
    """``|x - prox_{eta f}(x - eta grad g(x))|`` (``f = None`` means f = 0)."""
    y = x - eta * g.grad(x)
    p = y if f is None else f.prox(eta, y)
    return float(np.linalg.norm(x - p))


def energy_a5(traj, s: Schedule, eta: float, g: SmoothConvex, x_star,
              f: Optional[ProxFunction] = None) -> LyapunovTrace:
    """Modified energy for the enlarged-step regime.

    With ``h = |x - x*|^2/2`` and
    ``q = g(x) - g(x*) - <grad g(x*), x - x*>`` (nonnegative by convexity) the
    traced quantity is

        (h/eta + q)' + gam (h/eta + q) + (gam/lam) |x'|^2 / eta.

    ``f`` defaults to the prox function of the trajectory's system, if any.
    ``aux["q"]`` holds the q samples.
    """
    if not eta > 0:
        raise ParameterDomainError(f"eta must be positive, got {eta!r}")
    if f is None and traj.system is not None:
        f = traj.system.params.get("f")
    x_star = as_vector(x_star, traj.dim)
    res = fb_residual_norm(f, g, eta, x_star)
    if res > ZERO_TOL:
        raise PreconditionError(f"x_star does not minimize f + g: FB residual {res:.3e}")
    lam, gam = _sched(traj, s)
    d = traj.x - x_star
    gs = g.grad(x_star)
    g0 = g.value(x_star)
    gx = np.array([g.value(x) for x in traj.x])
    dg = np.array([g.grad(x) for x in traj.x]) - gs
    q = gx - g0 - d @ gs
    if np.min(q) < -1e-12:
        i = int(np.argmin(q))
        raise PreconditionError(
            f"q(t) = {q[i]:.3e} < 0 at t={traj.times[i]:.6g}; g is not convex"
        )
    h = 0.5 * np.einsum("ij,ij->i", d, d)
    hdot = np.einsum("ij,ij->i", d, traj.v)
    qdot = np.einsum("ij,ij->i", traj.v, dg)
    vv = np.einsum("ij,ij->i", traj.v, traj.v)
    vals = hdot / eta + qdot + gam * (h / eta + q) + (gam / lam) * vv / eta
    return LyapunovTrace.from_values(traj.times, vals, {"q": q})


def ergodic_averages(traj, T_grid) -> np.ndarray:
    """``(1/T) int_0^T x(t) dt`` for each ``T`` (trapezoid rule, linear in between)."""
    T_grid = np.atleast_1d(np.asarray(T_grid, dtype=float))
    t = traj.times
    if np.any(T_grid <= 0):
        raise ParameterDomainError("averaging times must be positive")
    if np.any(T_grid > t[-1] * (1 + 1e-12)):
        raise RangeError(f"T beyond the trajectory end {t[-1]:g}")
    cum = cumulative_trapezoid(traj.x, t, axis=0, initial=0.0)
    out = np.empty((T_grid.size, traj.dim))
    for k, T in enumerate(T_grid):
        i = int(np.searchsorted(t, T, side="right")) - 1
        i = min(i, t.size - 1)
        integral = cum[i].copy()
        if T > t[i]:
            # partial trapezoid up to T on the linear interpolant
            w = (T - t[i]) / (t[i + 1] - t[i])
            xT = (1 - w) * traj.x[i] + w * traj.x[i + 1]
            integral += 0.5 * (T - t[i]) * (traj.x[i] + xT)
        out[k] = integral / T
    return out


def ergodic_average(traj, T: float) -> np.ndarray:
    """``(1/T) int_0^T x(t) dt`` by the trapezoid rule on the recorded samples."""
    return ergodic_averages(traj, [T])[0]


def rate_bound(s: Schedule, beta: float, zeta: float, u0, v0, x_star, T,
               zeta_star: Optional[float] = None):
    """Right-hand side of the ergodic rate estimate

        [|v0 + gam(0)(u0 - x*)|^2 + (lam(0)/beta - gam'(0)) |u0 - x*|^2] / (2 zeta T).

    ``T`` may be an array. Pass ``zeta_star`` (from :func:`validate_a6`) to
    reject ``zeta`` values the schedule does not license.
    """
    if not zeta > 0:
        raise ParameterDomainError(f"zeta must be positive, got {zeta!r}")
    if zeta_star is not None and zeta > zeta_star * (1 + 1e-12):
        raise ParameterDomainError(f"zeta={zeta:g} exceeds the admissible {zeta_star:g}")
    if not beta > 0:
        raise ParameterDomainError(f"beta must be positive, got {beta!r}")
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0):
        raise ParameterDomainError("T must be positive")
    u0, v0, x_star = (np.asarray(a, dtype=float) for a in (u0, v0, x_star))
    e = u0 - x_star
    w = v0 + float(s.gam(0.0)) * e
    c = float(w @ w) + (float(s.lam(0.0)) / beta - float(s.dgam(0.0))) * float(e @ e)
    out = c / (2.0 * zeta * T)
    return float(out) if out.ndim == 0 else out


def fit_tail_slope(report: RateReport, tail_fraction: float = 0.5) -> float:
    """Least-squares slope of ``log gap`` against ``log T`` over the tail."""
    if not 0.0 < tail_fraction < 1.0:
        raise ParameterDomainError("tail_fraction must lie in (0, 1)")
    T = np.asarray(report.T_grid, dtype=float)
    gap = np.asarray(report.ergodic_gap, dtype=float)
    start = int(np.floor((1.0 - tail_fraction) * T.size))
    T, gap = T[start:], gap[start:]
    if T.size < 2:
        raise DegenerateFitError("tail holds fewer than two points")
    if np.any(gap <= 0):
        raise DegenerateFitError("nonpositive gap in the tail; already at the numerical floor")
    slope, _ = np.polyfit(np.log(T), np.log(gap), 1)
    return float(slope)


def rate_report(traj, g: SmoothConvex, s: Schedule, beta: float, zeta: float,
                x_star, T_grid, tail_fraction: float = 0.5,
                zeta_star: Optional[float] = None) -> RateReport:
    """Ergodic gap ``g(avg_T x) - g(x*)`` next to the rate bound on ``T_grid``."""
    T_grid = np.asarray(T_grid, dtype=float)
    x_star = as_vector(x_star, traj.dim)
    avgs = ergodic_averages(traj, T_grid)
    g_star = g.value(x_star)
    gap = np.array([g.value(a) - g_star for a in avgs])
    bound = rate_bound(s, beta, zeta, traj.x[0], traj.v[0], x_star, T_grid, zeta_star)
    partial = RateReport(T_grid, gap, np.atleast_1d(bound), np.nan)
    try:
        slope = fit_tail_slope(partial, tail_fraction)
    except DegenerateFitError:
        slope = np.nan
    return RateReport(T_grid, gap, np.atleast_1d(bound), slope)


def fejer_limit_check(traj, x_star, window: float) -> FejerCheck:
    """Mean and spread of ``|x(t) - x*|`` over the final ``window`` of time."""
    if not window > 0:
        raise ParameterDomainError("window must be positive")
    if traj.final_time - traj.times[0] < 2.0 * window:
        raise ParameterDomainError("trajectory must span at least two windows")
    x_star = as_vector(x_star, traj.dim)
    mask = traj.times >= traj.final_time - window
    dist = np.linalg.norm(traj.x[mask] - x_star, axis=1)
    return FejerCheck(float(dist.mean()), float(dist.max() - dist.min()))


def l2_integrals(traj) -> dict:
    """``int_0^T |.|^2 dt`` of velocity, acceleration and field up to the horizon."""
    t = traj.times

    def sq(a):
        return float(trapezoid(np.einsum("ij,ij->i", a, a), t))

    return {"v": sq(traj.v), "a": sq(traj.a), "field": sq(traj.field_values)}
