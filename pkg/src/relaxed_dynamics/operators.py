"""Operator and function abstractions with a small concrete catalog.

Everything here lives on R^n with the Euclidean inner product. Single-valued
maps carry a declared cocoercivity modulus ``beta``; set-valued monotone
operators are only ever touched through their resolvents.

The sampled checkers (:func:`check_cocoercivity`,
:func:`check_firm_nonexpansive`, :func:`check_nonexpansive`) replace the
universally quantified inequalities with a seeded Monte-Carlo search for the
worst pair in a ball.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import InvalidOperatorError, ParameterDomainError

__all__ = [
    "OperatorField",
    "ProxFunction",
    "SmoothConvex",
    "MonotoneOperator",
    "PairCheck",
    "as_vector",
    "soft_threshold",
    "project_box",
    "lambda_max",
    "quadratic_gradient_field",
    "gradient_field",
    "residual_of_nonexpansive",
    "fb_residual",
    "fb_delta",
    "averaged_from_nonexpansive",
    "check_cocoercivity",
    "check_firm_nonexpansive",
    "check_nonexpansive",
    "check_gradient",
    "check_prox_optimality",
    "sample_pairs",
    "l1_norm",
    "box_indicator",
    "zero_function",
    "squared_norm",
    "quadratic_function",
    "least_squares",
    "zero_smooth",
    "zero_operator",
    "subdifferential",
    "linear_operator",
]

Vector = np.ndarray


def as_vector(x, dim: Optional[int] = None) -> Vector:
    """Return ``x`` as a finite 1-D float array, optionally of length ``dim``."""
    v = np.array(x, dtype=float, ndmin=1)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"expected dimension {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite coordinates")
    return v


def _positive(name, value):
    if not value > 0:
        raise ParameterDomainError(f"{name} must be positive, got {value!r}")
    return float(value)


# ---------------------------------------------------------------------------
# Containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OperatorField:
    """Single-valued map ``B`` on R^n with a declared cocoercivity modulus.

    ``beta`` is ``None`` when no modulus is certified (the forward-backward
    residual with a step beyond ``2 * beta_B``) and ``inf`` for a constant
    field.
    """

    dim: int
    func: Callable[[Vector], Vector]
    beta: Optional[float]
    kind: str = "cocoercive"
    params: dict = field(default_factory=dict)

    def __call__(self, x) -> Vector:
        return self.func(x)

    def eval(self, x) -> Vector:
        return self.func(as_vector(x, self.dim))

    @property
    def lipschitz(self) -> Optional[float]:
        if self.beta is None:
            return None
        return 1.0 / self.beta


@dataclass(frozen=True)
class ProxFunction:
    """Proper convex lsc function given by its value and proximal map.

    ``prox(eta, x)`` returns the minimizer of ``value(y) + |y - x|^2 / (2 eta)``.
    ``subdiff_contains(p, u, tol)`` tests ``u in df(p)`` when the graph of the
    subdifferential is explicit.
    """

    dim: int
    value: Callable[[Vector], float]
    prox: Callable[[float, Vector], Vector]
    strong_convexity: float = 0.0
    name: str = "custom"
    subdiff_contains: Optional[Callable[[Vector, Vector, float], bool]] = None


@dataclass(frozen=True)
class SmoothConvex:
    """Convex differentiable function whose gradient is (1/beta)-Lipschitz.

    ``affine`` is ``(H, b)`` when the gradient is the affine map ``x -> Hx + b``
    (quadratics); integrators use it to batch their work.
    """

    dim: int
    value: Callable[[Vector], float]
    grad: Callable[[Vector], Vector]
    beta: float
    minimizer: Optional[Vector] = None
    strong_convexity: float = 0.0
    name: str = "custom"
    affine: Optional[tuple] = None


@dataclass(frozen=True)
class MonotoneOperator:
    """Maximally monotone operator, accessed through ``resolvent(eta, x)``."""

    dim: int
    resolvent: Callable[[float, Vector], Vector]
    strong_monotonicity: float = 0.0
    name: str = "custom"
    graph_contains: Optional[Callable[[Vector, Vector, float], bool]] = None


# ---------------------------------------------------------------------------
# Elementary proximal maps
# ---------------------------------------------------------------------------


def soft_threshold(eta, w, x) -> Vector:
    """Proximal map of ``eta * w * |.|_1``: ``sign(x) * max(|x| - eta*w, 0)``."""
    eta = _positive("eta", eta)
    if w < 0:
        raise ParameterDomainError(f"weight w must be nonnegative, got {w!r}")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - eta * w, 0.0)


def project_box(lo, hi, x) -> Vector:
    """Componentwise clamp of ``x`` to ``[lo, hi]``."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ParameterDomainError("box bounds require lo <= hi componentwise")
    return np.clip(np.asarray(x, dtype=float), lo, hi)


# ---------------------------------------------------------------------------
# Spectral helper
# ---------------------------------------------------------------------------


def lambda_max(Q, rtol: float = 1e-10, max_iter: int = 100_000, seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Iterates until the Rayleigh quotient changes by less than ``rtol``
    relative to its magnitude.
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    est = float(v @ Q @ v)
    for _ in range(max_iter):
        w = Q @ v
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        new = float(v @ Q @ v)
        if abs(new - est) <= rtol * max(abs(new), np.finfo(float).tiny):
            return new
        est = new
    return est


def _check_symmetric_psd(Q):
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise InvalidOperatorError(f"expected a square matrix, got shape {Q.shape}")
    if np.max(np.abs(Q - Q.T), initial=0.0) > 1e-12:
        raise InvalidOperatorError("matrix is not symmetric (tolerance 1e-12)")
    eigs = np.linalg.eigvalsh(Q)
    scale = max(1.0, float(np.max(np.abs(eigs))))
    if eigs[0] < -1e-12 * scale:
        raise InvalidOperatorError(
            f"matrix has a negative eigenvalue {eigs[0]:.3e}; not PSD"
        )
    return Q


# ---------------------------------------------------------------------------
# Operator field constructions
# ---------------------------------------------------------------------------


def quadratic_gradient_field(Q, c=None) -> OperatorField:
    """Gradient field ``x -> Qx + c`` of ``0.5 <x, Qx> + <c, x>``.

    The cocoercivity modulus is ``1 / lambda_max(Q)`` (Baillon-Haddad);
    ``Q = 0`` gives ``beta = inf``.
    """
    Q = _check_symmetric_psd(Q)
    n = Q.shape[0]
    c = np.zeros(n) if c is None else as_vector(c, n)
    lmax = lambda_max(Q)
    beta = np.inf if lmax <= 0.0 else 1.0 / lmax

    def func(x):
        return Q @ x + c

    return OperatorField(n, func, beta, "gradient",
                         {"Q": Q, "c": c, "lambda_max": lmax, "affine": (Q, c)})


def gradient_field(g: SmoothConvex) -> OperatorField:
    """The gradient of a smooth convex function as a ``beta``-cocoercive field."""
    params = {"function": g.name}
    if g.affine is not None:
        params["affine"] = g.affine
    return OperatorField(g.dim, g.grad, g.beta, "gradient", params)


def sample_pairs(dim: int, samples: int, radius: float, seed: int):
    """Two ``(samples, dim)`` arrays of points uniform in the ball of ``radius``."""
    rng = np.random.default_rng(seed)

    def draw():
        d = rng.standard_normal((samples, dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = radius * rng.uniform(size=(samples, 1)) ** (1.0 / dim)
        return d * r

    return draw(), draw()


@dataclass(frozen=True)
class PairCheck:
    """Worst sampled violation of a pairwise inequality (positive = violated)."""

    max_violation: float
    worst_pair: tuple

    def passed(self, tol: float = 1e-9) -> bool:
        return self.max_violation <= tol


def _pair_check(gap, dim, samples, radius, seed) -> PairCheck:
    if samples < 1:
        raise ParameterDomainError("samples must be >= 1")
    X, Y = sample_pairs(dim, samples, radius, seed)
    worst, pair = -np.inf, None
    for x, y in zip(X, Y):
        val = gap(x, y)
        if val > worst:
            worst, pair = val, (x, y)
    return PairCheck(float(worst), pair)


def check_nonexpansive(T, dim: int, samples: int = 1000, radius: float = 10.0,
                       seed: int = 0) -> PairCheck:
    """Sampled check of ``|Tx - Ty| <= |x - y|``."""
    def gap(x, y):
        return np.linalg.norm(T(x) - T(y)) - np.linalg.norm(x - y)

    return _pair_check(gap, dim, samples, radius, seed)


def check_firm_nonexpansive(P, dim: int, samples: int = 1000, radius: float = 10.0,
                            seed: int = 0) -> PairCheck:
    """Sampled check of ``|Px - Py|^2 <= <x - y, Px - Py>``."""
    def gap(x, y):
        d = P(x) - P(y)
        return d @ d - (x - y) @ d

    return _pair_check(gap, dim, samples, radius, seed)


def check_cocoercivity(field: OperatorField, samples: int = 1000,
                       radius: float = 10.0, seed: int = 0) -> PairCheck:
    """Worst value of ``beta |Bx - By|^2 - <x - y, Bx - By>`` over sampled pairs."""
    if field.beta is None:
        raise InvalidOperatorError("field carries no certified cocoercivity modulus")
    beta = field.beta

    def gap(x, y):
        d = field(x) - field(y)
        if np.isinf(beta):
            # only constant fields are inf-cocoercive
            return np.inf if np.any(d != 0.0) else -0.0
        return beta * (d @ d) - (x - y) @ d

    return _pair_check(gap, field.dim, samples, radius, seed)


def check_prox_optimality(f: ProxFunction, eta: float, samples: int = 1000,
                          radius: float = 10.0, seed: int = 0) -> PairCheck:
    """Sampled check that ``p = prox_{eta f}(x)`` satisfies the prox inequality

        f(p) + <(x - p)/eta, z - p> <= f(z)

    at ``z = prox_{eta f}(y)`` (a point of ``dom f``) for a second sample ``y``.
    """
    eta = _positive("eta", eta)

    def gap(x, y):
        p = f.prox(eta, x)
        z = f.prox(eta, y)
        u = (x - p) / eta
        return f.value(p) + u @ (z - p) - f.value(z)

    return _pair_check(gap, f.dim, samples, radius, seed)


def residual_of_nonexpansive(T, dim: int, samples: int = 500, seed: int = 0) -> OperatorField:
    """The 1/2-cocoercive residual ``x -> x - T(x)`` of a nonexpansive map."""
    chk = check_nonexpansive(T, dim, samples=samples, seed=seed)
    if chk.max_violation > 1e-9:
        raise InvalidOperatorError(
            f"map is not nonexpansive: sampled excess {chk.max_violation:.3e}"
        )

    def func(x):
        return x - T(x)

    return OperatorField(dim, func, 0.5, "residual_of_nonexpansive", {"T": T})


def averaged_from_nonexpansive(T, alpha: float, dim: Optional[int] = None,
                               samples: int = 500, seed: int = 0):
    """The alpha-averaged map ``(1 - alpha) Id + alpha T``."""
    if not 0.0 < alpha < 1.0:
        raise ParameterDomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if dim is not None:
        chk = check_nonexpansive(T, dim, samples=samples, seed=seed)
        if chk.max_violation > 1e-9:
            raise InvalidOperatorError(
                f"map is not nonexpansive: sampled excess {chk.max_violation:.3e}"
            )

    def R(x):
        x = np.asarray(x, dtype=float)
        return (1.0 - alpha) * x + alpha * T(x)

    return R


def fb_delta(beta: float, eta: float) -> float:
    """``(4 beta - eta) / (2 beta)``; R is 1/delta-averaged when eta <= 2 beta."""
    _positive("beta", beta)
    _positive("eta", eta)
    return (4.0 * beta - eta) / (2.0 * beta)


def _resolvent_of(A):
    if isinstance(A, ProxFunction):
        return A.prox
    if isinstance(A, MonotoneOperator):
        return A.resolvent
    raise TypeError(f"expected ProxFunction or MonotoneOperator, got {type(A).__name__}")


def fb_residual(A, B: OperatorField, eta: float) -> OperatorField:
    """Forward-backward residual ``x -> x - J_{eta A}(x - eta B(x))``.

    For ``eta <= 2 beta`` the map ``J(Id - eta B)`` is 1/delta-averaged, so the
    residual is ``delta/2``-cocoercive and that modulus is declared. Larger
    steps are accepted but leave ``beta`` as ``None``.
    """
    eta = _positive("eta", eta)
    J = _resolvent_of(A)
    if A.dim != B.dim:
        raise ValueError(f"dimension mismatch: A has {A.dim}, B has {B.dim}")
    bB = B.beta
    delta = np.inf if np.isinf(bB) else fb_delta(bB, eta)
    # relative slack so that eta = 2 beta survives a beta computed by power iteration
    beta = delta / 2.0 if eta <= 2.0 * bB * (1.0 + 1e-12) else None
    if np.isinf(bB):
        # B constant: J is firmly nonexpansive, so the residual is too
        beta = 1.0

    def func(x):
        return x - J(eta, x - eta * B(x))

    return OperatorField(
        B.dim, func, beta, "fb_residual",
        {"eta": eta, "delta": delta, "beta_B": bB, "resolvent": J, "B": B},
    )


# ---------------------------------------------------------------------------
# Catalog: prox-capable functions
# ---------------------------------------------------------------------------


def l1_norm(w: float, dim: int) -> ProxFunction:
    """``w * |x|_1`` with soft-thresholding as its prox."""
    if w < 0:
        raise ParameterDomainError(f"weight w must be nonnegative, got {w!r}")
    w = float(w)

    def prox(eta, x):
        # equals sign(x) * max(|x| - eta*w, 0) exactly, with fewer array ops
        t = eta * w
        return x - np.minimum(np.maximum(x, -t), t)

    def contains(p, u, tol=1e-12):
        nz = p != 0.0
        ok_nz = np.all(np.abs(u[nz] - w * np.sign(p[nz])) <= tol)
        ok_z = np.all(np.abs(u[~nz]) <= w + tol)
        return bool(ok_nz and ok_z)

    return ProxFunction(dim, lambda x: w * float(np.sum(np.abs(x))), prox, 0.0,
                        f"l1(w={w:g})", contains)


def box_indicator(lo, hi) -> ProxFunction:
    """Indicator of the box ``[lo, hi]``; its prox is the projection for every eta."""
    lo = as_vector(lo)
    hi = as_vector(hi, lo.shape[0])
    if np.any(lo > hi):
        raise ParameterDomainError("box bounds require lo <= hi componentwise")

    def value(x):
        return 0.0 if np.all((x >= lo) & (x <= hi)) else np.inf

    def prox(eta, x):
        return np.clip(x, lo, hi)

    def contains(p, u, tol=1e-12):
        # normal cone of the box at p
        if np.any(p < lo - tol) or np.any(p > hi + tol):
            return False
        at_lo = np.abs(p - lo) <= tol
        at_hi = np.abs(p - hi) <= tol
        ok = np.where(at_lo & at_hi, True,
                      np.where(at_lo, u <= tol,
                               np.where(at_hi, u >= -tol, np.abs(u) <= tol)))
        return bool(np.all(ok))

    return ProxFunction(lo.shape[0], value, prox, 0.0, "box", contains)


def zero_function(dim: int) -> ProxFunction:
    def contains(p, u, tol=1e-12):
        return bool(np.all(np.abs(u) <= tol))

    return ProxFunction(dim, lambda x: 0.0, lambda eta, x: np.asarray(x, dtype=float),
                        0.0, "zero", contains)


def squared_norm(mu: float, dim: int) -> ProxFunction:
    """``(mu/2) |x|^2``, mu-strongly convex, prox ``x / (1 + eta mu)``."""
    mu = _positive("mu", mu)

    def contains(p, u, tol=1e-12):
        return bool(np.all(np.abs(u - mu * p) <= tol))

    return ProxFunction(dim, lambda x: 0.5 * mu * float(x @ x),
                        lambda eta, x: np.asarray(x, dtype=float) / (1.0 + eta * mu),
                        mu, f"sqnorm(mu={mu:g})", contains)


# ---------------------------------------------------------------------------
# Catalog: smooth convex functions
# ---------------------------------------------------------------------------


def quadratic_function(Q, c=None) -> SmoothConvex:
    """``0.5 <x, Qx> + <c, x>``; the minimizer is recorded when Q is invertible."""
    Q = _check_symmetric_psd(Q)
    n = Q.shape[0]
    c = np.zeros(n) if c is None else as_vector(c, n)
    lmax = lambda_max(Q)
    beta = np.inf if lmax <= 0.0 else 1.0 / lmax
    eigs = np.linalg.eigvalsh(Q)
    xmin = None
    if eigs[0] > 1e-12 * max(1.0, eigs[-1]):
        xmin = np.linalg.solve(Q, -c)

    return SmoothConvex(
        n,
        lambda x: 0.5 * float(x @ Q @ x) + float(c @ x),
        lambda x: Q @ x + c,
        beta,
        xmin,
        float(max(eigs[0], 0.0)),
        "quadratic",
        (Q, c),
    )


def least_squares(M, y) -> SmoothConvex:
    """``0.5 |Mx - y|^2`` with ``beta = 1 / lambda_max(M^T M)``."""
    M = np.asarray(M, dtype=float)
    y = as_vector(y, M.shape[0])
    MtM = M.T @ M
    Mty = M.T @ y
    lmax = lambda_max(MtM)

    def value(x):
        r = M @ x - y
        return 0.5 * float(r @ r)

    def grad(x):
        return MtM @ x - Mty

    mu = float(max(np.linalg.eigvalsh(MtM)[0], 0.0))
    return SmoothConvex(M.shape[1], value, grad, 1.0 / lmax, None, mu, "least_squares",
                        (MtM, -Mty))


def zero_smooth(dim: int, beta: float = 1.0) -> SmoothConvex:
    """The zero function; every point minimizes it, any beta is admissible."""
    return SmoothConvex(dim, lambda x: 0.0, lambda x: np.zeros(dim), beta,
                        np.zeros(dim), 0.0, "zero")


def check_gradient(g: SmoothConvex, points, h: float = 1e-6) -> float:
    """Largest relative error between ``g.grad`` and central differences of ``g.value``."""
    worst = 0.0
    for x in np.atleast_2d(points):
        x = np.asarray(x, dtype=float)
        fd = np.empty_like(x)
        for i in range(x.shape[0]):
            e = np.zeros_like(x)
            e[i] = h
            fd[i] = (g.value(x + e) - g.value(x - e)) / (2.0 * h)
        gr = g.grad(x)
        err = np.linalg.norm(gr - fd) / max(np.linalg.norm(gr), 1.0)
        worst = max(worst, float(err))
    return worst


# ---------------------------------------------------------------------------
# Catalog: monotone operators
# ---------------------------------------------------------------------------


def zero_operator(dim: int) -> MonotoneOperator:
    def contains(p, u, tol=1e-12):
        return bool(np.all(np.abs(u) <= tol))

    return MonotoneOperator(dim, lambda eta, x: np.asarray(x, dtype=float), 0.0,
                            "zero", contains)


def subdifferential(f: ProxFunction) -> MonotoneOperator:
    """``df`` with ``J_{eta df} = prox_{eta f}``."""
    return MonotoneOperator(f.dim, f.prox, f.strong_convexity, f"d{f.name}",
                            f.subdiff_contains)


def linear_operator(K) -> MonotoneOperator:
    """Linear monotone map ``x -> Kx`` (symmetric part PSD); resolvent by a solve."""
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    sym = 0.5 * (K + K.T)
    mu = float(np.linalg.eigvalsh(sym)[0])
    if mu < -1e-12:
        raise InvalidOperatorError("linear map is not monotone")
    eye = np.eye(n)

    def resolvent(eta, x):
        return np.linalg.solve(eye + eta * K, x)

    def contains(p, u, tol=1e-12):
        return bool(np.all(np.abs(u - K @ p) <= tol * max(1.0, np.abs(u).max(initial=0.0))))

    return MonotoneOperator(n, resolvent, max(mu, 0.0), "linear", contains)
