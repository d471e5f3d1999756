"""Relaxation/damping schedules and validators for the convergence assumptions.

A :class:`Schedule` bundles ``lam(t)`` (relaxation) and ``gam(t)`` (damping)
with their analytic derivatives. Each ``validate_*`` function evaluates one
assumption on a time grid and returns a :class:`ValidationReport` whose
margin is the largest admissible ``theta`` (or ``zeta``). Built-in families
also contribute their closed-form ``t -> inf`` limit so that the reported
margin is the infimum over ``[0, inf)``, not merely over the grid.

The assumptions, for a field of cocoercivity ``beta``:

====  ==========================================================
A1    gam' <= 0 <= lam',  gam^2/lam >= (1 + theta)/beta
A2    gam' <= 0 <= lam',  gam^2/lam >= 2 (1 + theta)
A3    gam' <= 0 <= lam',  gam^2/lam >= 2 alpha (1 + theta)
A4    gam' <= 0 <= lam',  gam^2/lam >= 2 (1 + theta)/delta
A5    gam' <= 0 <= lam',  gam^2/lam >= eta theta + eta/beta + 1
A6    gam' <= 0,  2 gam' gam - gam'' <= 0,  gam lam - lam' >= zeta > 0
====  ==========================================================
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import CapabilityError, InvalidScheduleError, ParameterDomainError
from .operators import fb_delta

__all__ = [
    "Schedule",
    "ValidationReport",
    "constant_schedule",
    "exponential_schedule",
    "custom_schedule",
    "default_grid",
    "check_derivatives",
    "validate_a1",
    "validate_a2",
    "validate_a3",
    "validate_a4",
    "validate_a5",
    "validate_a6",
    "validate",
    "MARGIN_TOL",
    "SIGN_TOL",
]

# margins at or below this count as "no theta > 0"
MARGIN_TOL = 1e-12
# |gam'| <= SIGN_TOL counts as gam' <= 0 (and likewise for lam')
SIGN_TOL = 1e-12
MIN_GRID_POINTS = 1000


@dataclass(frozen=True)
class Schedule:
    """A relaxation/damping pair with analytic derivatives.

    All callables accept scalars or numpy arrays. ``ddgam`` may be ``None``
    for custom schedules, in which case :func:`validate_a6` refuses to run.
    ``limits`` holds ``(lam, gam, dlam, dgam, ddgam)`` as ``t -> inf`` when
    the family admits an exact tail.
    """

    lam: Callable
    gam: Callable
    dlam: Callable
    dgam: Callable
    ddgam: Optional[Callable] = None
    family: str = "custom"
    params: dict = field(default_factory=dict)
    limits: Optional[tuple] = None

    def scaled(self, factor: float) -> "Schedule":
        """Same damping, relaxation multiplied by ``factor``."""
        lim = self.limits
        if lim is not None:
            lim = (factor * lim[0], lim[1], factor * lim[2], lim[3], lim[4])
        return Schedule(
            lambda t: factor * self.lam(t),
            self.gam,
            lambda t: factor * self.dlam(t),
            self.dgam,
            self.ddgam,
            self.family,
            {**self.params, "relaxation_scale": factor},
            lim,
        )


def constant_schedule(lam: float, gam: float) -> Schedule:
    if not (lam > 0 and gam > 0):
        raise ParameterDomainError("constant schedule needs lam > 0 and gam > 0")
    lam, gam = float(lam), float(gam)

    def const(c):
        return lambda t: c + 0.0 * np.asarray(t, dtype=float)

    zero = const(0.0)
    return Schedule(const(lam), const(gam), zero, zero, zero, "constant",
                    {"lam": lam, "gam": gam}, (lam, gam, 0.0, 0.0, 0.0))


def exponential_schedule(a, rho, b, a2, rho2, b2) -> Schedule:
    """``lam(t) = 1/(a e^{-rho t} + b)``, ``gam(t) = a2 e^{-rho2 t} + b2``.

    ``a2, rho2, b2`` are the damping-side parameters.
    """
    if min(a, rho, a2, rho2) < 0:
        raise ParameterDomainError("a, rho, a2, rho2 must be nonnegative")
    if not (b > 0 and b2 > 0):
        raise ParameterDomainError("b and b2 must be positive")
    a, rho, b, a2, rho2, b2 = map(float, (a, rho, b, a2, rho2, b2))

    def lam(t):
        return 1.0 / (a * np.exp(-rho * np.asarray(t, dtype=float)) + b)

    def dlam(t):
        e = a * np.exp(-rho * np.asarray(t, dtype=float))
        return rho * e / (e + b) ** 2

    def gam(t):
        return a2 * np.exp(-rho2 * np.asarray(t, dtype=float)) + b2

    def dgam(t):
        return -a2 * rho2 * np.exp(-rho2 * np.asarray(t, dtype=float))

    def ddgam(t):
        return a2 * rho2 ** 2 * np.exp(-rho2 * np.asarray(t, dtype=float))

    lam_inf = 1.0 / b if (rho > 0 or a == 0) else 1.0 / (a + b)
    gam_inf = b2 if (rho2 > 0 or a2 == 0) else a2 + b2
    return Schedule(lam, gam, dlam, dgam, ddgam, "exponential",
                    {"a": a, "rho": rho, "b": b, "a2": a2, "rho2": rho2, "b2": b2},
                    (lam_inf, gam_inf, 0.0, 0.0, 0.0))


def custom_schedule(lam, gam, dlam, dgam, ddgam=None, **params) -> Schedule:
    return Schedule(lam, gam, dlam, dgam, ddgam, "custom", params, None)


def default_grid(horizon: float = 50.0, points: int = 2000) -> np.ndarray:
    return np.linspace(0.0, float(horizon), int(points))


def check_derivatives(s: Schedule, grid, h: float = 1e-5) -> float:
    """Largest relative gap between analytic and central-difference derivatives.

    The relative error is measured against ``max(|analytic|, scale)`` where
    ``scale`` is the magnitude of the differentiated function, so derivatives
    that vanish do not blow up the ratio.
    """
    t = np.asarray(grid, dtype=float)
    t = t[t >= h]
    pairs = [(s.lam, s.dlam), (s.gam, s.dgam)]
    if s.ddgam is not None:
        pairs.append((s.dgam, s.ddgam))
    worst = 0.0
    for f, df in pairs:
        fd = (f(t + h) - f(t - h)) / (2.0 * h)
        an = df(t)
        scale = np.maximum(np.abs(an), np.abs(f(t)))
        scale = np.where(scale > 0, scale, 1.0)
        worst = max(worst, float(np.max(np.abs(fd - an) / scale)))
    return worst


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of checking one assumption on a grid.

    ``margin`` is the largest admissible ``theta`` (``zeta`` for A6) when the
    sign conditions hold; when they fail it is clipped to at most 0, since no
    positive ``theta`` is admissible. ``witness_t`` is where the worst margin
    (or the worst sign violation) occurs; ``inf`` denotes the tail limit.
    """

    assumption: str
    feasible: bool
    margin: float
    witness_t: float
    bounds: tuple
    params: dict = field(default_factory=dict)
    violated: str = ""

    @property
    def theta_star(self) -> float:
        return self.margin

    @property
    def zeta_star(self) -> float:
        return self.margin

    def describe(self) -> str:
        name = "zeta_star" if self.assumption == "A6" else "theta_star"
        head = "feasible" if self.feasible else "infeasible"
        text = f"{head} {self.assumption} {name}={self.margin:.17g} witness_t={self.witness_t:.6g}"
        if self.violated:
            text += f" violated: {self.violated}"
        return text


def _grid(grid, horizon=None):
    if grid is None:
        grid = default_grid(50.0 if horizon is None else horizon)
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or t.size < MIN_GRID_POINTS:
        raise ParameterDomainError(
            f"validation grid needs at least {MIN_GRID_POINTS} points, got {t.size}"
        )
    return t


def _sample(s: Schedule, t, need_dd=False):
    """Evaluate the schedule on ``t`` and append the tail limit if known."""
    lam = np.asarray(s.lam(t), dtype=float)
    gam = np.asarray(s.gam(t), dtype=float)
    dlam = np.asarray(s.dlam(t), dtype=float)
    dgam = np.asarray(s.dgam(t), dtype=float)
    ddgam = np.asarray(s.ddgam(t), dtype=float) if need_dd else None
    times = t
    if s.limits is not None:
        li = s.limits
        times = np.append(t, np.inf)
        lam = np.append(lam, li[0])
        gam = np.append(gam, li[1])
        dlam = np.append(dlam, li[2])
        dgam = np.append(dgam, li[3])
        if need_dd:
            ddgam = np.append(ddgam, li[4])
    bad = (lam <= 0) | (gam <= 0) | ~np.isfinite(lam) | ~np.isfinite(gam)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise InvalidScheduleError(
            f"schedule must be positive: lam={lam[i]:.3g}, gam={gam[i]:.3g} at t={times[i]:.6g}"
        )
    bounds = (float(lam.min()), float(lam.max()), float(gam.min()), float(gam.max()))
    return times, lam, gam, dlam, dgam, ddgam, bounds


def _ratio_report(name, s, grid, margin_fn, inequality, params):
    t = _grid(grid)
    times, lam, gam, dlam, dgam, _, bounds = _sample(s, t)
    margins = margin_fn(gam ** 2 / lam)
    i = int(np.argmin(margins))
    margin, witness = float(margins[i]), float(times[i])
    violated = []
    if np.any(dgam > SIGN_TOL):
        j = int(np.argmax(dgam))
        violated.append(f"gam'(t) <= 0 fails (gam'={dgam[j]:.3g})")
        witness = float(times[j])
    if np.any(dlam < -SIGN_TOL):
        j = int(np.argmin(dlam))
        violated.append(f"lam'(t) >= 0 fails (lam'={dlam[j]:.3g})")
        witness = float(times[j])
    if violated:
        margin = min(margin, 0.0)
    if margin <= MARGIN_TOL and not violated:
        violated.append(inequality)
    feasible = not violated
    return ValidationReport(name, feasible, margin, witness, bounds, params,
                            "; ".join(violated))


def validate_a1(s: Schedule, beta: float, grid=None) -> ValidationReport:
    """Cocoercive-field condition: ``theta_star = min beta gam^2/lam - 1``."""
    if not beta > 0:
        raise ParameterDomainError(f"beta must be positive, got {beta!r}")
    return _ratio_report(
        "A1", s, grid, lambda r: beta * r - 1.0,
        "gam^2/lam >= (1+theta)/beta has no theta > 0", {"beta": beta},
    )


def validate_a2(s: Schedule, grid=None) -> ValidationReport:
    """Nonexpansive-map condition: ``theta_star = min gam^2/(2 lam) - 1``."""
    return _ratio_report(
        "A2", s, grid, lambda r: r / 2.0 - 1.0,
        "gam^2/lam >= 2(1+theta) has no theta > 0", {},
    )


def validate_a3(s: Schedule, alpha: float, grid=None) -> ValidationReport:
    """Averaged-map condition: ``theta_star = min gam^2/(2 alpha lam) - 1``."""
    if not 0.0 < alpha < 1.0:
        raise ParameterDomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    return _ratio_report(
        "A3", s, grid, lambda r: r / (2.0 * alpha) - 1.0,
        "gam^2/lam >= 2 alpha (1+theta) has no theta > 0", {"alpha": alpha},
    )


def validate_a4(s: Schedule, beta: float, eta: float, grid=None) -> ValidationReport:
    """Forward-backward condition for ``0 < eta <= 2 beta``.

    ``theta_star = min delta gam^2 / (2 lam) - 1`` with
    ``delta = (4 beta - eta) / (2 beta)``.
    """
    if not beta > 0:
        raise ParameterDomainError(f"beta must be positive, got {beta!r}")
    if not 0.0 < eta <= 2.0 * beta:
        raise ParameterDomainError(f"eta must lie in (0, 2 beta] = (0, {2 * beta:g}], got {eta!r}")
    delta = fb_delta(beta, eta)
    return _ratio_report(
        "A4", s, grid, lambda r: delta * r / 2.0 - 1.0,
        "gam^2/lam >= 2(1+theta)/delta has no theta > 0",
        {"beta": beta, "eta": eta, "delta": delta},
    )


def validate_a5(s: Schedule, beta: float, eta: float, grid=None) -> ValidationReport:
    """Enlarged-step condition: ``theta_star = min (gam^2/lam - eta/beta - 1)/eta``."""
    if not beta > 0:
        raise ParameterDomainError(f"beta must be positive, got {beta!r}")
    if not eta > 0:
        raise ParameterDomainError(f"eta must be positive, got {eta!r}")
    return _ratio_report(
        "A5", s, grid, lambda r: (r - eta / beta - 1.0) / eta,
        "gam^2/lam >= eta theta + eta/beta + 1 has no theta > 0",
        {"beta": beta, "eta": eta},
    )


def validate_a6(s: Schedule, grid=None) -> ValidationReport:
    """Ergodic-rate condition: ``zeta_star = min gam lam - lam'``."""
    if s.ddgam is None:
        raise CapabilityError("A6 needs the second derivative of the damping")
    t = _grid(grid)
    times, lam, gam, dlam, dgam, ddgam, bounds = _sample(s, t, need_dd=True)
    margins = gam * lam - dlam
    i = int(np.argmin(margins))
    margin, witness = float(margins[i]), float(times[i])
    violated = []
    if np.any(dgam > SIGN_TOL):
        j = int(np.argmax(dgam))
        violated.append(f"gam'(t) <= 0 fails (gam'={dgam[j]:.3g})")
        witness = float(times[j])
    curv = 2.0 * dgam * gam - ddgam
    if np.any(curv > SIGN_TOL):
        j = int(np.argmax(curv))
        violated.append(f"2 gam' gam - gam'' <= 0 fails ({curv[j]:.3g})")
        witness = float(times[j])
    if violated:
        margin = min(margin, 0.0)
    if margin <= MARGIN_TOL and not violated:
        violated.append("gam lam - lam' >= zeta has no zeta > 0")
    return ValidationReport("A6", not violated, margin, witness, bounds, {},
                            "; ".join(violated))


def validate(assumption: str, s: Schedule, grid=None, *, beta=None, eta=None,
             alpha=None) -> ValidationReport:
    """Dispatch by assumption name (``"a1"`` ... ``"a6"``, case-insensitive)."""
    key = assumption.lower()
    if key == "a1":
        return validate_a1(s, beta, grid)
    if key == "a2":
        return validate_a2(s, grid)
    if key == "a3":
        return validate_a3(s, alpha, grid)
    if key == "a4":
        return validate_a4(s, beta, eta, grid)
    if key == "a5":
        return validate_a5(s, beta, eta, grid)
    if key == "a6":
        return validate_a6(s, grid)
    raise ValueError(f"unknown assumption {assumption!r}")
