"""Extended regular variation: the psi limit function and ERV parameter fits."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EvaluationError

ArrayLike = float | np.ndarray

# |rho| below this uses k*log x (with a series correction up to _RHO_SERIES)
_RHO_ZERO = 1e-12
_RHO_SERIES = 1e-6
RHO_SNAP = 1e-3


def _power_minus_one_over(logx: np.ndarray, rho: float) -> np.ndarray:
    """``(x^rho - 1)/rho`` from ``log x``, continuous through rho = 0."""
    if abs(rho) < _RHO_ZERO:
        return logx
    if abs(rho) < _RHO_SERIES:
        return logx * (1.0 + 0.5 * rho * logx + rho**2 * logx**2 / 6.0)
    return np.expm1(rho * logx) / rho


def psi(x: ArrayLike, rho: float, k: float) -> ArrayLike:
    """``k (x^rho - 1)/rho``, or ``k log x`` when rho = 0."""
    xx = np.asarray(x, dtype=float)
    if np.any(~(xx > 0)):
        raise DomainError("psi requires x > 0")
    out = k * _power_minus_one_over(np.log(xx), rho)
    return float(out) if np.ndim(x) == 0 else out


def psi_inverse_identity_check(x: ArrayLike, rho: float, k: float) -> ArrayLike:
    """Relative residual of ``psi(1/x) = -x^{-rho} psi(x)``.

    The raw difference is divided by ``1 + |psi(1/x)| + |x^{-rho} psi(x)|``
    so that the check is meaningful in floating point over many decades.
    """
    xx = np.asarray(x, dtype=float)
    lhs = psi(1.0 / xx, rho, k)
    rhs = -np.exp(-rho * np.log(xx)) * psi(xx, rho, k)
    out = (lhs - rhs) / (1.0 + np.abs(lhs) + np.abs(rhs))
    return float(out) if np.ndim(x) == 0 else out


def psi_cocycle_residual(u: ArrayLike, y: ArrayLike, rho: float, k: float) -> ArrayLike:
    """Relative residual of ``psi(uy) = u^rho psi(y) + psi(u)``."""
    uu = np.asarray(u, dtype=float)
    yy = np.asarray(y, dtype=float)
    lhs = psi(uu * yy, rho, k)
    a = np.exp(rho * np.log(uu)) * psi(yy, rho, k)
    b = psi(uu, rho, k)
    return (lhs - a - b) / (1.0 + np.abs(lhs) + np.abs(a) + np.abs(b))


def phi_std(x: ArrayLike, c: float, rho: float, k: float) -> ArrayLike:
    """Standardization limit ``c x^rho + k (x^rho - 1)/rho`` (``c + k log x`` at rho = 0)."""
    xx = np.asarray(x, dtype=float)
    if np.any(~(xx > 0)):
        raise DomainError("phi requires x > 0")
    out = c * np.exp(rho * np.log(xx)) + psi(xx, rho, k)
    return float(out) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class ErvPair:
    """Scale ``a`` and center ``f`` with ERV parameters ``(rho, k)``."""

    a: Callable
    f: Callable
    rho: float
    k: float

    def deviation(self, t: float, x_grid: Sequence[float]) -> float:
        """Max deviation of both ERV ratios from their limits at level ``t``."""
        x = np.asarray(x_grid, dtype=float)
        at = float(self.a(t))
        d1 = np.abs(np.array([self.a(t * xi) for xi in x]) / at - x**self.rho)
        d2 = np.abs((np.array([self.f(t * xi) for xi in x]) - self.f(t)) / at
                    - psi(x, self.rho, self.k))
        return float(max(d1.max(), d2.max()))


@dataclass(frozen=True)
class StdFunction:
    """Monotone standardization ``f`` with limit ``phi(x) = c x^rho + psi(x; rho, k)``."""

    f: Callable
    direction: str  # "nondecreasing" | "nonincreasing"
    c: float
    rho: float
    k: float

    def __post_init__(self):
        if self.direction not in ("nondecreasing", "nonincreasing"):
            raise DomainError(f"direction must be nondecreasing or nonincreasing, got {self.direction!r}")

    def phi(self, x: ArrayLike) -> ArrayLike:
        return phi_std(x, self.c, self.rho, self.k)

    @property
    def has_two_points_of_change(self) -> bool:
        """phi is non-constant: ``(c + k/rho) x^rho`` needs a nonzero coefficient."""
        if self.rho == 0:
            return self.k != 0
        return self.c + self.k / self.rho != 0

    @classmethod
    def identity(cls) -> StdFunction:
        return cls(f=lambda x: x, direction="nondecreasing", c=1.0, rho=1.0, k=0.0)


@dataclass(frozen=True)
class ErvFit:
    rho: float
    k: float
    rho_raw: float
    k_raw: float
    scale_residual: float
    center_residual: float
    t_used: np.ndarray

    def as_dict(self) -> dict:
        return {"rho": self.rho, "k": self.k, "rho_raw": self.rho_raw, "k_raw": self.k_raw,
                "scale_residual": self.scale_residual, "center_residual": self.center_residual}


def _evaluate(fn: Callable, pts: np.ndarray, what: str) -> np.ndarray:
    try:
        vals = np.array([fn(float(p)) for p in pts.ravel()], dtype=float).reshape(pts.shape)
    except (ArithmeticError, ValueError) as exc:
        raise EvaluationError(f"{what} failed on the grid: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        bad = pts[~np.isfinite(vals)].ravel()[0]
        raise EvaluationError(f"{what} is not finite at t={bad!r}")
    return vals


def _center_fit(rho: float, lx: np.ndarray, resp: np.ndarray) -> tuple[float, float]:
    template = np.broadcast_to(_power_minus_one_over(lx, rho), resp.shape)
    denom = float(np.sum(template**2))
    k = float(np.sum(template * resp) / denom) if denom > 0 else 0.0
    return k, float(np.sqrt(np.mean((resp - k * template) ** 2)))


def estimate_erv_params(a: Callable, f: Callable, t_grid: Sequence[float],
                        x_grid: Sequence[float], n_top: int = 8) -> tuple[float, float, ErvFit]:
    """Least-squares estimate of ``(rho, k)`` from samples of ``a`` and ``f``.

    Uses the ``n_top`` largest values of ``t_grid``. The slope of
    ``log(a(tx)/a(t))`` on ``log x`` gives rho; k is the projection of
    ``(f(tx) - f(t))/a(t)`` on ``psi(x; rho, 1)``. Estimates below
    ``RHO_SNAP`` in absolute value are snapped to zero when that does not
    worsen the residual appreciably.
    """
    t = np.sort(np.asarray(t_grid, dtype=float))[-n_top:]
    x = np.asarray(x_grid, dtype=float)
    if x.size < 2 or np.ptp(np.log(x)) == 0:
        raise DomainError("x_grid must contain at least two distinct points")
    if np.any(t <= 0) or np.any(x <= 0):
        raise DomainError("grids must be positive")
    tx = t[:, None] * x[None, :]
    a_t = _evaluate(a, t, "a")
    a_tx = _evaluate(a, tx, "a")
    f_t = _evaluate(f, t, "f")
    f_tx = _evaluate(f, tx, "f")
    if np.any(a_t <= 0) or np.any(a_tx <= 0):
        raise EvaluationError("scale function a must be positive on the grid")

    lx = np.log(x)[None, :]
    ly = np.log(a_tx / a_t[:, None])
    lxb = np.broadcast_to(lx, ly.shape)
    rho_raw = float(np.sum(lxb * ly) / np.sum(lxb * lxb))
    scale_res = float(np.sqrt(np.mean((ly - rho_raw * lxb) ** 2)))

    resp = (f_tx - f_t[:, None]) / a_t[:, None]
    k_raw, center_res = _center_fit(rho_raw, lx, resp)

    rho, k = rho_raw, k_raw
    if abs(rho_raw) < RHO_SNAP:
        k0, res0 = _center_fit(0.0, lx, resp)
        if res0 <= 2.0 * center_res + 1e-12:
            rho, k, center_res = 0.0, k0, res0
    scale = max(1.0, float(np.max(np.abs(resp))))
    if abs(k) < RHO_SNAP * scale:
        res0 = float(np.sqrt(np.mean(resp**2)))
        if res0 <= 2.0 * center_res + 1e-12 * scale:
            k, center_res = 0.0, res0
    return rho, k, ErvFit(rho, k, rho_raw, k_raw, scale_res, center_res, t)


def local_uniform_erv_limit(a: Callable, f: Callable, t: float, x_t: float,
                            rho: float, k: float, x_limit: float | None = None) -> tuple[float, float]:
    """Observed ``(f(t x_t) - f(t))/a(t)`` and the limit ``psi(x; rho, k)``.

    ``x_limit`` is the limit of the moving argument; it defaults to ``x_t``.
    """
    if t <= 0 or x_t <= 0:
        raise DomainError("t and x_t must be positive")
    vals = _evaluate(lambda s: f(s), np.array([t * x_t, t]), "f")
    at = _evaluate(a, np.array([t]), "a")[0]
    observed = float((vals[0] - vals[1]) / at)
    expected = psi(x_t if x_limit is None else x_limit, rho, k)
    return observed, float(expected)


def erv_asymptotic_ratio(a: Callable, f: Callable, t: float) -> float:
    """``f(t)/a(t)``, which tends to ``k/rho`` for rho > 0."""
    return float(f(t) / a(t))


def is_degenerate_pair(rho: float, k: float) -> bool:
    return rho == 0 and k == 0
