"""Transition kernels, generalized tail kernels and kernel-limit detection."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import distfn
from .distfn import DistSpec
from .erv import StdFunction, estimate_erv_params, psi
from .errors import DomainError, EvaluationError, PreconditionError

CondCdf = Callable[[np.ndarray, np.ndarray], np.ndarray]


def invert_cdf(cdf: Callable[[np.ndarray], np.ndarray], u: np.ndarray,
               rel_width: float = 1e-12, max_iter: int = 400) -> np.ndarray:
    """Vectorized left-continuous inverse of ``cdf`` at probabilities ``u``."""
    u = np.asarray(u, dtype=float)
    lo = np.full(u.shape, -1.0)
    hi = np.full(u.shape, 1.0)
    for _ in range(2100):
        m = cdf(lo) >= u
        if not m.any():
            break
        lo = np.where(m, 2 * lo - 1, lo)
    for _ in range(2100):
        m = (cdf(hi) < u) & (hi < 1e300)
        if not m.any():
            break
        hi = np.where(m, 2 * hi + 1, hi)
    for _ in range(max_iter):
        if np.all(hi - lo <= rel_width * np.maximum(1.0, np.abs(hi))):
            break
        mid = lo + 0.5 * (hi - lo)
        up = cdf(mid) >= u
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    return hi


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """A Markov kernel ``y -> K(y, .)`` on the extended real line.

    ``cond_cdf(y, x)`` is ``K(y, [-inf, x])`` and broadcasts over arrays.
    ``cond_sampler(y, rng)`` draws one X per entry of ``y``. ``lattice`` is
    the spacing used for interleaved t-subsequences in limit detection.
    """

    cond_cdf: CondCdf
    cond_sampler: Callable[[np.ndarray, np.random.Generator], np.ndarray] | None = None
    cond_cdf_left: CondCdf | None = None
    support: str = "(0, inf)"
    label: str = "kernel"
    lattice: float = 1.0
    descriptor: dict | None = None

    def cdf(self, y, x):
        return np.asarray(self.cond_cdf(np.asarray(y, dtype=float), np.asarray(x, dtype=float)),
                          dtype=float)

    def cdf_left(self, y, x):
        if self.cond_cdf_left is not None:
            return np.asarray(self.cond_cdf_left(np.asarray(y, float), np.asarray(x, float)), float)
        x = np.asarray(x, dtype=float)
        return self.cdf(y, np.nextafter(x, -np.inf))

    def sample(self, y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.cond_sampler is not None:
            return np.asarray(self.cond_sampler(y, rng), dtype=float)
        u = rng.random(y.shape)
        return invert_cdf(lambda x: self.cdf(y, x), u)


@dataclass(frozen=True, eq=False)
class TailKernel:
    """Generalized tail kernel ``kappa_G(y, [-inf, x]) = G((x - psi(y))/y^rho)``."""

    G: DistSpec
    rho: float
    k: float

    def cdf(self, y, x):
        y = np.asarray(y, dtype=float)
        z = (np.asarray(x, dtype=float) - psi(y, self.rho, self.k)) / np.exp(self.rho * np.log(y))
        return np.asarray(self.G.cdf(z), dtype=float)

    def as_kernel(self) -> KernelSpec:
        def sampler(y, rng):
            y = np.asarray(y, dtype=float)
            xi = self.G.sample(rng, y.size).reshape(y.shape)
            return psi(y, self.rho, self.k) + np.exp(self.rho * np.log(y)) * xi

        return KernelSpec(
            cond_cdf=self.cdf, cond_sampler=sampler,
            label=f"tail_kernel({self.G.name}, rho={self.rho:g}, k={self.k:g})",
            descriptor={"kernel": "tail_kernel", "rho": self.rho, "k": self.k,
                        "G": self.G.descriptor},
        )

    @classmethod
    def from_kernel(cls, K: KernelSpec, rho: float, k: float, *, u_grid=None, y_grid=None,
                    x_grid=None, tol: float = 1e-12) -> TailKernel:
        """Accept ``K`` as a tail kernel only if the scaling identity holds on grids."""
        u_grid = np.geomspace(0.1, 10, 7) if u_grid is None else np.asarray(u_grid, float)
        y_grid = np.geomspace(0.1, 10, 7) if y_grid is None else np.asarray(y_grid, float)
        x_grid = np.linspace(-5, 5, 11) if x_grid is None else np.asarray(x_grid, float)
        res = scaling_identity_residual(K, rho, k, u_grid, y_grid, x_grid)
        if res > tol:
            raise DomainError(f"kernel {K.label} violates the tail-kernel scaling identity "
                              f"(max residual {res:.3g})")
        G = distfn.from_cdf(lambda x: K.cdf(1.0, x), name=f"G({K.label})")
        return cls(G, rho, k)


def tail_kernel_eval(tk: TailKernel, y: float, x: float) -> float:
    """``G((x - psi(y; rho, k)) / y^rho)``."""
    if not y > 0:
        raise DomainError("tail kernel needs y > 0")
    return float(tk.cdf(y, x))


def scaling_identity_residual(K: KernelSpec, rho: float, k: float, u, y, x) -> float:
    """Max of ``|K(uy, [-inf,x]) - K(y, [-inf,(x - psi(u))/u^rho])|`` over the grids."""
    U, Yv, X = np.meshgrid(np.asarray(u, float), np.asarray(y, float), np.asarray(x, float),
                           indexing="ij")
    lhs = K.cdf(U * Yv, X)
    rhs = K.cdf(Yv, (X - psi(U, rho, k)) / np.exp(rho * np.log(U)))
    return float(np.max(np.abs(lhs - rhs)))


# -- limit detection -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KernelLimitReport:
    status: str                     # converged | defective | nonconvergent
    G_hat: DistSpec | None
    defect_at_infinity: float
    oscillation_gap: float
    cauchy_gap: float
    degenerate: bool
    asymptotic_independence: bool
    jumps: np.ndarray
    t_grid: np.ndarray
    x_grid: np.ndarray
    table: np.ndarray               # K values, shape (len t, len x + 1); last column x_max
    sub_limits: tuple[np.ndarray, np.ndarray] | None = None
    notes: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        return {"status": self.status, "defect_at_infinity": self.defect_at_infinity,
                "oscillation_gap": self.oscillation_gap, "cauchy_gap": self.cauchy_gap,
                "degenerate": self.degenerate,
                "asymptotic_independence": self.asymptotic_independence,
                "jumps": self.jumps.tolist(), "notes": list(self.notes)}


def _kernel_row(K: KernelSpec, t: float, xs: np.ndarray, alpha: Callable, beta: Callable) -> np.ndarray:
    pts = alpha(t) * xs + beta(t)
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            row = K.cdf(np.full(xs.shape, t), pts)
    except (ArithmeticError, ValueError) as exc:
        raise EvaluationError(f"kernel {K.label} failed at t={t!r}: {exc}") from exc
    if not np.all(np.isfinite(row)):
        j = int(np.flatnonzero(~np.isfinite(row))[0])
        raise EvaluationError(f"kernel {K.label} not finite at (t={t!r}, x={xs[j]!r})")
    return row


def _locate_jumps(K, t, xs, row, alpha, beta, jump_tol, iters=60) -> np.ndarray:
    """Bisect cells with a rise above ``jump_tol``; keep those that stay steep."""
    jumps = []
    for j in np.flatnonzero(np.diff(row) > jump_tol):
        lo, hi = float(xs[j]), float(xs[j + 1])
        f_lo, f_hi = row[j], row[j + 1]
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            v = _kernel_row(K, t, np.array([mid]), alpha, beta)[0]
            # keep the half carrying the larger part of the rise
            if v - f_lo > f_hi - v:
                hi, f_hi = mid, v
            else:
                lo, f_lo = mid, v
        if f_hi - f_lo > 0.5 * jump_tol:
            jumps.append(hi)
    return np.asarray(jumps)


def _check_t_grid(ts: np.ndarray) -> None:
    if ts.size < 12:
        raise DomainError("t_grid needs at least 12 points")
    ratios = ts[1:] / ts[:-1]
    if np.any(ratios < 2.0 - 1e-9):
        raise DomainError("t_grid must be geometric with ratio >= 2")


def detect_general_limit(K: KernelSpec, alpha: Callable, beta: Callable,
                         t_grid: Sequence[float], x_grid: Sequence[float], *,
                         x_max: float = 1e6, tol: float = 1e-3, defect_tol: float = 0.01,
                         jump_tol: float = 0.05, n_cauchy: int = 4,
                         lattice: float | None = None, n_sub: int = 4) -> KernelLimitReport:
    """Detect the weak limit of ``K(t, [-inf, alpha(t) x + beta(t)])`` as t grows.

    Convergence is a Cauchy test over the last ``n_cauchy`` t values on the
    x grid minus detected jump points. Interleaved subsequences
    ``floor(t/s) s`` and ``floor(t/s) s + s/2`` (``s`` = lattice) expose
    version-dependent oscillation.
    """
    ts = np.asarray(t_grid, dtype=float)
    _check_t_grid(ts)
    xs = np.asarray(x_grid, dtype=float)
    xs_all = np.append(xs, x_max)
    table = np.vstack([_kernel_row(K, t, xs_all, alpha, beta) for t in ts])
    last = table[-1, :-1]
    notes: list[str] = []

    jumps = _locate_jumps(K, ts[-1], xs, last, alpha, beta, jump_tol)
    cont = np.ones(xs.size, dtype=bool)
    for xj in jumps:
        cont &= np.abs(xs - xj) > 1e-3 * max(1.0, abs(xj))
    cont_all = np.append(cont, True)
    tail = table[-n_cauchy:][:, cont_all]
    cauchy_gap = float(np.max(np.abs(np.diff(tail, axis=0)))) if tail.shape[0] > 1 else 0.0

    s = K.lattice if lattice is None else lattice
    top = ts[ts >= 4 * s][-n_sub:]
    t_int = np.floor(top / s) * s
    t_half = t_int + 0.5 * s
    rows_int = np.vstack([_kernel_row(K, t, xs_all, alpha, beta) for t in t_int])
    rows_half = np.vstack([_kernel_row(K, t, xs_all, alpha, beta) for t in t_half])
    stable_int = float(np.max(np.abs(np.diff(rows_int[:, cont_all], axis=0)), initial=0.0))
    stable_half = float(np.max(np.abs(np.diff(rows_half[:, cont_all], axis=0)), initial=0.0))
    osc_gap = float(np.max(np.abs(rows_int[-1, cont_all] - rows_half[-1, cont_all])))

    if osc_gap > tol and stable_int <= tol and stable_half <= tol:
        status = "nonconvergent"
        notes.append(f"sub-limits along t=n*{s:g} and t=(n+1/2)*{s:g} differ by {osc_gap:.3g}")
    elif cauchy_gap > tol:
        status = "nonconvergent"
        notes.append(f"Cauchy gap {cauchy_gap:.3g} over the last {n_cauchy} t values")
    else:
        status = "converged"

    defect = float(max(0.0, 1.0 - table[-1, -1]))
    G_hat = None
    if status == "converged":
        if defect > defect_tol:
            status = "defective"
        cum = np.clip(np.maximum.accumulate(last), 0.0, 1.0)
        masses = np.diff(np.concatenate([[0.0], cum]))
        keep = masses > 0
        if keep.any():
            G_hat = distfn.discrete(masses[keep], xs[keep], defect=1.0 - float(masses[keep].sum()))
    rises = np.flatnonzero((last[:-1] < 0.01) & (last[1:] > 0.99))
    flat = (np.ptp(last) < 0.01) if last.size else True
    degenerate = bool(rises.size or defect >= 0.99 or flat)
    positive = xs > 0
    asym_indep = bool(positive.any() and np.all(last[positive] >= 0.99))
    if degenerate:
        notes.append("limit is degenerate in x")
    return KernelLimitReport(status, G_hat, defect, osc_gap, cauchy_gap, degenerate, asym_indep,
                             jumps, ts, xs, table, (rows_int[-1, :-1], rows_half[-1, :-1]), notes)


def detect_standard_limit(K: KernelSpec, t_grid: Sequence[float], x_grid: Sequence[float],
                          **kwargs) -> KernelLimitReport:
    """Detect the limit of ``K(t, [0, t x])``."""
    return detect_general_limit(K, lambda t: t, lambda t: 0.0, t_grid, x_grid, **kwargs)


@dataclass(frozen=True)
class MovingArgumentResult:
    t_grid: np.ndarray
    observed: np.ndarray
    expected: float
    deviation: float


def moving_argument_limit(K: KernelSpec, alpha: Callable, beta: Callable, rho: float, k: float,
                          u: float, t_grid: Sequence[float], x: float, *,
                          G: DistSpec | None = None, erv_tol: float = 0.05) -> MovingArgumentResult:
    """``K(t u_t, [-inf, alpha(t) x + beta(t)])`` with ``u_t = u (1 + 1/log t)``.

    The limit is ``kappa_G(u, [-inf, x])``. When ``G`` is not given it is
    read off the kernel at the largest t. ``(alpha, beta)`` must be ERV with
    the declared ``(rho, k)``; otherwise a :class:`PreconditionError` is raised.
    """
    if not u > 0:
        raise DomainError("u must be positive")
    ts = np.asarray(t_grid, dtype=float)
    try:
        rho_hat, k_hat, fit = estimate_erv_params(alpha, beta, ts, np.geomspace(0.5, 4.0, 7))
    except EvaluationError as exc:
        raise PreconditionError(f"alpha, beta are not ERV on the grid: {exc}") from exc
    if (abs(rho_hat - rho) > erv_tol or abs(k_hat - k) > erv_tol * max(1.0, abs(k))
            or fit.scale_residual > erv_tol):
        raise PreconditionError(
            f"alpha, beta are not ERV_(rho={rho:g}, k={k:g}) (estimated rho={rho_hat:.3g}, "
            f"k={k_hat:.3g}); the moving-argument limit holds if and only if they are")
    obs = np.array([float(K.cdf(t * u * (1.0 + 1.0 / math.log(t)), alpha(t) * x + beta(t)))
                    for t in ts])
    z = (x - psi(u, rho, k)) / u**rho
    if G is not None:
        expected = float(G.cdf(z))
    else:
        tm = ts[-1]
        expected = float(K.cdf(tm, alpha(tm) * z + beta(tm)))
    return MovingArgumentResult(ts, obs, expected, float(abs(obs[-1] - expected)))


# -- kernel transformations ------------------------------------------------------

def kernel_standardize_f(K: KernelSpec, f: StdFunction) -> KernelSpec:
    """``K_f(y, [0, x]) = K(y, f([0, x]))`` for a monotone standardization f."""
    if not f.has_two_points_of_change:
        raise DomainError("standardization function must have two points of change")
    fx = lambda x: f.f(np.maximum(np.asarray(x, dtype=float), 1e-300))  # noqa: E731
    if f.direction == "nondecreasing":
        def cdf(y, x):
            x = np.asarray(x, dtype=float)
            return np.where(x >= 0, K.cdf(y, fx(x)), 0.0)
    else:
        def cdf(y, x):
            x = np.asarray(x, dtype=float)
            return np.where(x >= 0, 1.0 - K.cdf_left(y, fx(x)), 0.0)
    return KernelSpec(cond_cdf=cdf, support=K.support, label=f"{K.label}_f", lattice=K.lattice)


def kernel_k_star(K: KernelSpec, b_star: Callable) -> KernelSpec:
    """``K*(y, .) = K(b*(y), .)``, the kernel given the standardized ``Y* = b*^{<-}(Y)``."""

    def cdf(y, x):
        return K.cdf(b_star(np.asarray(y, dtype=float)), x)

    sampler = None
    if K.cond_sampler is not None:
        def sampler(y, rng):
            return K.sample(b_star(np.asarray(y, dtype=float)), rng)

    return KernelSpec(cond_cdf=cdf, cond_sampler=sampler, support="(b*(inf)...)",
                      label=f"{K.label}*", lattice=K.lattice)
