"""Second-order relaxed dynamics and their numerical integration.

Every system kind reduces to a single operator field ``B`` and the ODE

    x'' + gam(t) x' + lam(t) B(x) = 0,   x(0) = u0, x'(0) = v0,

which is integrated in phase space ``(u, v) = (x, x')`` with right-hand side
``F(t, u, v) = (v, -gam(t) v - lam(t) B(u))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import ParameterDomainError, StiffnessError
from .operators import (
    OperatorField,
    ProxFunction,
    SmoothConvex,
    as_vector,
    fb_residual,
    gradient_field,
    residual_of_nonexpansive,
)
from .schedules import Schedule

__all__ = [
    "SystemSpec",
    "IntegratorConfig",
    "Trajectory",
    "Residuals",
    "cocoercive_system",
    "nonexpansive_system",
    "averaged_system",
    "forward_backward_system",
    "prox_gradient_system",
    "gradient_system",
    "phase_rhs",
    "integrate",
    "terminal_residuals",
]


@dataclass(frozen=True)
class SystemSpec:
    """A system kind together with the cocoercive field it reduces to."""

    kind: str
    field: OperatorField
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.field.dim


def cocoercive_system(B: OperatorField) -> SystemSpec:
    return SystemSpec("cocoercive", B, {})


def nonexpansive_system(T, dim: int) -> SystemSpec:
    """``x'' + gam x' + lam (x - T x) = 0``; the residual is 1/2-cocoercive."""
    return SystemSpec("nonexpansive", residual_of_nonexpansive(T, dim), {"T": T})


def averaged_system(T, alpha: float, dim: int) -> SystemSpec:
    """System driven by ``R = (1 - alpha) Id + alpha T``.

    ``x - R(x) = alpha (x - T(x))`` is ``1/(2 alpha)``-cocoercive, so the run
    coincides with the nonexpansive system under relaxation ``alpha * lam``.
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterDomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    base = residual_of_nonexpansive(T, dim)
    a = float(alpha)

    def func(x):
        return a * base.func(x)

    B = OperatorField(dim, func, 1.0 / (2.0 * a), "residual_of_averaged", {"alpha": a, "T": T})
    return SystemSpec("averaged", B, {"T": T, "alpha": a})


def forward_backward_system(A, B: OperatorField, eta: float) -> SystemSpec:
    """``x'' + gam x' + lam [x - J_{eta A}(x - eta B x)] = 0``."""
    F = fb_residual(A, B, eta)
    if F.beta is None:
        raise ParameterDomainError(
            f"forward-backward dynamics need eta <= 2 beta = {2 * B.beta:g}, got {eta:g}"
        )
    return SystemSpec("forward_backward", F, {"A": A, "B": B, "eta": float(eta)})


def prox_gradient_system(f: ProxFunction, g: SmoothConvex, eta: float) -> SystemSpec:
    """FB dynamics with ``A = df`` and ``B = grad g``; any ``eta > 0`` is accepted.

    Steps above ``2 beta`` leave the field without a certified modulus; their
    convergence rests on the modified-energy argument instead.
    """
    F = fb_residual(f, gradient_field(g), eta)
    return SystemSpec("prox_gradient", F, {"f": f, "g": g, "eta": float(eta)})


def gradient_system(g: SmoothConvex) -> SystemSpec:
    return SystemSpec("gradient", gradient_field(g), {"g": g})


def phase_rhs(spec: SystemSpec, s: Schedule, t: float, u, v):
    """Phase-space vector field ``(v, -gam(t) v - lam(t) B(u))``."""
    if t < 0:
        raise ParameterDomainError(f"t must be nonnegative, got {t!r}")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return v.copy(), -float(s.gam(t)) * v - float(s.lam(t)) * spec.field(u)


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration settings.

    ``step`` is the fixed RK4 step; for ``rkf45_adaptive`` it is the initial
    trial step and ``abs_tol``/``rel_tol``/``min_step``/``max_step`` govern
    step control.
    """

    method: str = "rk4_fixed"
    step: float = 1e-3
    horizon: float = 50.0
    record_every: float = 0.01
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    min_step: float = 1e-12
    max_step: float = 0.1

    def __post_init__(self):
        if self.method not in ("rk4_fixed", "rkf45_adaptive"):
            raise ParameterDomainError(f"unknown integration method {self.method!r}")
        if not (self.step > 0 and self.horizon > 0 and self.record_every > 0):
            raise ParameterDomainError("step, horizon and record_every must be positive")
        if not self.step <= self.record_every * (1 + 1e-12):
            raise ParameterDomainError("need step <= record_every")
        if not self.record_every <= self.horizon * (1 + 1e-12):
            raise ParameterDomainError("need record_every <= horizon")

    @property
    def n_records(self) -> int:
        return int(round(self.horizon / self.record_every))

    @property
    def steps_per_record(self) -> int:
        return int(np.ceil(self.record_every / self.step - 1e-9))


@dataclass(frozen=True)
class Trajectory:
    """Recorded samples of a solution.

    ``a`` holds ``x''`` evaluated from the right-hand side at each sample and
    ``field_values`` holds the unscaled ``B(x(t))``, so that
    ``a == -gam v - lam field_values`` row by row.
    """

    times: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    field_values: np.ndarray
    system: Optional[SystemSpec] = None
    schedule: Optional[Schedule] = None
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return self.times.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def final_time(self) -> float:
        return float(self.times[-1])


class Residuals(NamedTuple):
    norm_v: float
    norm_a: float
    norm_field: float


def terminal_residuals(traj: Trajectory) -> Residuals:
    """Norms of ``x'``, ``x''`` and ``B(x)`` at the last recorded sample."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    return Residuals(
        float(np.linalg.norm(traj.v[-1])),
        float(np.linalg.norm(traj.a[-1])),
        float(np.linalg.norm(traj.field_values[-1])),
    )


def integrate(spec: SystemSpec, s: Schedule, u0, v0,
              cfg: Optional[IntegratorConfig] = None) -> Trajectory:
    """Integrate the system from ``(u0, v0)`` and record every ``record_every``."""
    cfg = IntegratorConfig() if cfg is None else cfg
    u0 = as_vector(u0, spec.dim)
    v0 = as_vector(v0, spec.dim)
    if cfg.method == "rk4_fixed":
        return _rk4(spec, s, u0, v0, cfg)
    return _rkf45(spec, s, u0, v0, cfg)


def _record_arrays(n_rec, dim):
    return (np.empty(n_rec), np.empty((n_rec, dim)), np.empty((n_rec, dim)),
            np.empty((n_rec, dim)), np.empty((n_rec, dim)))


def _rk4(spec, s, u0, v0, cfg):
    B = spec.field.func
    m = cfg.steps_per_record
    n_rec = cfg.n_records
    h = cfg.record_every / m
    n_steps = n_rec * m

    # schedules are evaluated once on the full stage grid
    k = np.arange(n_steps + 1)
    t_full = k * h
    t_half = (k[:-1] + 0.5) * h
    lam_f = np.broadcast_to(np.asarray(s.lam(t_full), float), t_full.shape).tolist()
    gam_f = np.broadcast_to(np.asarray(s.gam(t_full), float), t_full.shape).tolist()
    lam_h = np.broadcast_to(np.asarray(s.lam(t_half), float), t_half.shape).tolist()
    gam_h = np.broadcast_to(np.asarray(s.gam(t_half), float), t_half.shape).tolist()
    if min(min(lam_f), min(gam_f)) <= 0:
        raise ParameterDomainError("schedule must stay positive on [0, horizon]")
    affine = spec.field.params.get("affine")
    if affine is not None:
        return _rk4_affine(spec, s, u0, v0, cfg, affine, h, m, n_rec,
                           (lam_f, gam_f, lam_h, gam_h), t_full)

    T, X, V, A, Fv = _record_arrays(n_rec + 1, spec.dim)
    n = spec.dim
    # stacked state y = (u, v); stage derivative k = (v, -gam v - lam B(u))
    y = np.concatenate([u0, v0])
    h2, h6 = 0.5 * h, h / 6.0
    # compensated (Kahan) accumulation of the state; without it rounding
    # swamps the O(h^4) truncation error below h ~ 1e-3
    comp = np.zeros_like(y)
    cat = np.concatenate
    r = 0
    for i in range(n_steps):
        u, v = y[:n], y[n:]
        Fu = B(u)
        a1 = -gam_f[i] * v - lam_f[i] * Fu
        if i % m == 0:
            T[r] = t_full[i]
            X[r], V[r], Fv[r], A[r] = u, v, Fu, a1
            r += 1
        k1 = cat((v, a1))
        y2 = y + h2 * k1
        v2 = y2[n:]
        k2 = cat((v2, -gam_h[i] * v2 - lam_h[i] * B(y2[:n])))
        y3 = y + h2 * k2
        v3 = y3[n:]
        k3 = cat((v3, -gam_h[i] * v3 - lam_h[i] * B(y3[:n])))
        y4 = y + h * k3
        v4 = y4[n:]
        k4 = cat((v4, -gam_f[i + 1] * v4 - lam_f[i + 1] * B(y4[:n])))
        dy = h6 * (k1 + k4 + 2.0 * (k2 + k3)) - comp
        yn = y + dy
        comp = (yn - y) - dy
        y = yn
    u, v = y[:n], y[n:]
    Fu = B(u)
    T[r] = t_full[n_steps]
    X[r], V[r], Fv[r] = u, v, Fu
    A[r] = -gam_f[n_steps] * v - lam_f[n_steps] * Fu
    return Trajectory(T, X, V, A, Fv, spec, s,
                      {"method": "rk4_fixed", "step": h, "steps": n_steps,
                       "rhs_evals": 4 * n_steps + n_rec + 1})


AFFINE_CHUNK = 2048


def _rk4_affine(spec, s, u0, v0, cfg, affine, h, m, n_rec, coeffs, t_full):
    """RK4 for ``B(x) = Hx + b``, where one step is the affine map
    ``y -> y + D_i y + e_i``. The stage matrices are formed in bulk; the
    arithmetic is that of :func:`_rk4` up to rounding.
    """
    H, b = (np.asarray(a, dtype=float) for a in affine)
    n = spec.dim
    N = 2 * n + 1
    lam_f, gam_f, lam_h, gam_h = (np.asarray(c, dtype=float) for c in coeffs)
    n_steps = n_rec * m
    eye = np.eye(N)

    def stage(lam, gam):
        # augmented generator of z = (u, v, 1) -> (v, -gam v - lam (Hu + b), 0)
        A = np.zeros((lam.size, N, N))
        A[:, :n, n:2 * n] = np.eye(n)
        A[:, n:2 * n, :n] = -lam[:, None, None] * H
        A[:, n:2 * n, n:2 * n] = -gam[:, None, None] * np.eye(n)
        A[:, n:2 * n, 2 * n] = -lam[:, None] * b
        return A

    y = np.concatenate([u0, v0])
    comp = np.zeros_like(y)
    h2, h6 = 0.5 * h, h / 6.0
    states = np.empty((n_rec + 1, 2 * n))
    r = 0
    for start in range(0, n_steps, AFFINE_CHUNK):
        stop = min(start + AFFINE_CHUNK, n_steps)
        A1 = stage(lam_f[start:stop], gam_f[start:stop])
        Ah = stage(lam_h[start:stop], gam_h[start:stop])
        A4 = stage(lam_f[start + 1:stop + 1], gam_f[start + 1:stop + 1])
        K2 = Ah @ (eye + h2 * A1)
        K3 = Ah @ (eye + h2 * K2)
        K4 = A4 @ (eye + h * K3)
        D = h6 * (A1 + K4 + 2.0 * (K2 + K3))
        Dm = D[:, :2 * n, :2 * n]
        e = D[:, :2 * n, 2 * n]
        for j in range(stop - start):
            if (start + j) % m == 0:
                states[r] = y
                r += 1
            dy = Dm[j] @ y + e[j] - comp
            yn = y + dy
            comp = (yn - y) - dy
            y = yn
    states[r] = y
    X, V = states[:, :n].copy(), states[:, n:].copy()
    Fv = X @ H.T + b
    rec = np.arange(n_rec + 1) * m
    A = -gam_f[rec, None] * V - lam_f[rec, None] * Fv
    return Trajectory(t_full[rec].copy(), X, V, A, Fv, spec, s,
                      {"method": "rk4_fixed", "step": h, "steps": n_steps,
                       "rhs_evals": 4 * n_steps + n_rec + 1, "affine": True})


# Fehlberg 4(5) tableau
_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)
_E = tuple(b5 - b4 for b4, b5 in zip(_B4, _B5))


def _rkf45(spec, s, u0, v0, cfg):
    B = spec.field.func
    lam, gam = s.lam, s.gam
    n = spec.dim

    def rhs(t, y):
        u, v = y[:n], y[n:]
        return np.concatenate((v, -float(gam(t)) * v - float(lam(t)) * B(u)))

    n_rec = cfg.n_records
    T, X, V, A, Fv = _record_arrays(n_rec + 1, n)
    y = np.concatenate((u0, v0))
    t = 0.0
    h = min(cfg.step, cfg.max_step)
    steps = rejected = evals = 0

    def record(r, t, y):
        u, v = y[:n], y[n:]
        Fu = B(u)
        T[r] = t
        X[r], V[r], Fv[r] = u, v, Fu
        A[r] = -float(gam(t)) * v - float(lam(t)) * Fu

    record(0, 0.0, y)
    for r in range(1, n_rec + 1):
        t_target = r * cfg.record_every
        while t < t_target:
            last = t + h >= t_target
            hs = t_target - t if last else h
            k = []
            for stage in range(6):
                yi = y.copy()
                for j, aij in enumerate(_A[stage]):
                    yi += hs * aij * k[j]
                k.append(rhs(t + _C[stage] * hs, yi))
            evals += 6
            y4 = y + hs * sum(b * ki for b, ki in zip(_B4, k))
            err_vec = hs * sum(e * ki for e, ki in zip(_E, k))
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y4))
            err = float(np.max(np.abs(err_vec) / scale))
            if err <= 1.0:
                t = t_target if last else t + hs
                y = y4
                steps += 1
            else:
                rejected += 1
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h_new = min(hs * factor, cfg.max_step)
            if last and err <= 1.0:
                # keep the untruncated step for the next interval
                h_new = max(h_new, min(h, cfg.max_step))
            h = h_new
            if h < cfg.min_step:
                raise StiffnessError(t, h, cfg.min_step)
        record(r, t, y)
    return Trajectory(T, X, V, A, Fv, spec, s,
                      {"method": "rkf45_adaptive", "steps": steps,
                       "rejected": rejected, "rhs_evals": evals})
