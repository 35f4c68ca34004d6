"""Semiparametric fit: gamma for Y, parametric (alpha, beta), empirical G, risk regions.

The normalization family is ``alpha(y) = y^rho`` with either
``beta(y) = a y`` (``0 <= rho < 1``, ``a`` in [0, 1]) or
``beta(y) = c - d log y`` (``rho < 0``, ``d`` in [0, 1]). Parameters are
chosen so that ``Z = (X - beta(Y)) / alpha(Y)`` looks independent of Y over
threshold exceedances.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, optimize, stats

from . import distfn
from .distfn import DistSpec
from .errors import DomainError, InsufficientDataError, PreconditionError
from .limits import mu_gamma
from .quadrature import quad
from .rng import parallel_map, substream

MIN_GAMMA_N = 500
MIN_EXCEEDANCES = 50
RHO_CAP = 0.95
N_BINS = 5


class FitWarning(UserWarning):
    pass


# -- gamma ---------------------------------------------------------------------------

def _moment_estimator(top: np.ndarray, base: float) -> tuple[float, float, float]:
    """Dekkers-Einmahl-de Haan estimator from the top order statistics above ``base``."""
    lg = np.log(top) - math.log(base)
    m1 = float(np.mean(lg))
    m2 = float(np.mean(lg**2))
    gamma = m1 + 1.0 - 0.5 / (1.0 - m1 * m1 / m2)
    return gamma, m1, m2


@dataclass(frozen=True, eq=False)
class GammaEstimate:
    gamma: float
    k: int
    stability: dict          # k/2, k, 2k -> gamma
    spread: float
    unstable: bool
    half_width: float        # ~95% normal half-width, 1.96 sqrt(1 + gamma^2) / sqrt(k)
    t_table: np.ndarray
    b_table: np.ndarray
    a_table: np.ndarray
    shift: float = 0.0
    _sorted: np.ndarray = field(default=None, repr=False)

    def b(self, t):
        """Empirical ``F^{<-}(1 - 1/t)`` inside the sample, GPD extrapolation beyond."""
        t = np.asarray(t, dtype=float)
        n = self._sorted.size
        t0, b0, a0 = self.t_table[-1], self.b_table[-1], self.a_table[-1]
        inside = np.clip(np.ceil(n * (1.0 - 1.0 / np.maximum(t, 1.0))).astype(int) - 1, 0, n - 1)
        emp = self._sorted[inside]
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.maximum(t / t0, 1.0)
            ext = b0 + a0 * (np.log(r) if abs(self.gamma) < 1e-12 else np.expm1(self.gamma * np.log(r)) / self.gamma)
        out = np.where(t <= t0, emp, ext)
        return float(out) if out.ndim == 0 else out

    def a(self, t):
        """``a(t0) (t/t0)^gamma`` anchored at the estimation level ``t0 = n/k``."""
        t = np.asarray(t, dtype=float)
        out = self.a_table[-1] * (t / self.t_table[-1]) ** self.gamma
        return float(out) if out.ndim == 0 else out

    def to_json(self) -> dict:
        return {"gamma": self.gamma, "k": self.k,
                "stability": {str(k): v for k, v in self.stability.items()},
                "spread": self.spread, "unstable": self.unstable, "half_width": self.half_width,
                "t": self.t_table.tolist(), "b": self.b_table.tolist(), "a": self.a_table.tolist(),
                "shift": self.shift}


def estimate_gamma(y_sample: Sequence[float], k: int | None = None) -> GammaEstimate:
    """Moment estimator of the extreme value index from the top ``k = ceil(sqrt n)`` values.

    Reports the estimate at ``k/2``, ``k`` and ``2k``; a spread above 0.5
    sets the ``unstable`` flag and emits a :class:`FitWarning`.
    """
    y = np.sort(np.asarray(y_sample, dtype=float))
    y = y[np.isfinite(y)]
    n = y.size
    if n < MIN_GAMMA_N:
        raise InsufficientDataError(f"estimate_gamma needs at least {MIN_GAMMA_N} values, got {n}",
                                    observed=n)
    k = int(math.ceil(math.sqrt(n))) if k is None else int(k)
    ks = [max(k // 2, 10), k, min(2 * k, n - 1)]
    # the estimator works on logs: shift the sample when the (2k)-th largest is not positive
    base_min = y[n - ks[-1] - 1]
    shift = 0.0 if base_min > 0 else 1.0 - base_min
    ys = y + shift
    stab = {}
    for kk in ks:
        g, _, _ = _moment_estimator(ys[n - kk:], ys[n - kk - 1])
        stab[kk] = g
    gamma = stab[k]
    _, m1, m2 = _moment_estimator(ys[n - k:], ys[n - k - 1])
    gamma_minus = 1.0 - 0.5 / (1.0 - m1 * m1 / m2)
    a0 = ys[n - k - 1] * m1 * (1.0 - min(gamma_minus, 0.0))
    spread = float(max(stab.values()) - min(stab.values()))
    unstable = spread > 0.5
    if unstable:
        warnings.warn(f"gamma estimate unstable across k/2, k, 2k (spread {spread:.3g})",
                      FitWarning, stacklevel=2)
    t_tab = np.geomspace(2.0, n / k, 16)
    idx = np.clip(np.ceil(n * (1.0 - 1.0 / t_tab)).astype(int) - 1, 0, n - 1)
    b_tab = y[idx]
    a_tab = a0 * (t_tab / t_tab[-1]) ** gamma
    return GammaEstimate(float(gamma), k, stab, spread, unstable,
                         1.96 * math.sqrt(1.0 + gamma * gamma) / math.sqrt(k),
                         t_tab, b_tab, a_tab, shift, y)


# -- normalization family -----------------------------------------------------------------

@dataclass(frozen=True)
class HtNormalization:
    """``alpha(y) = y^rho``; ``beta(y) = a y`` or ``c - d log y``."""

    rho: float
    family: str = "positive-rho"
    a_coef: float = 0.0
    c: float = 0.0
    d: float = 0.0

    def __post_init__(self):
        if self.family == "positive-rho":
            if not (0.0 <= self.rho < 1.0) or not (0.0 <= self.a_coef <= 1.0):
                raise DomainError("positive-rho family needs 0 <= rho < 1 and a in [0, 1]")
        elif self.family == "negative-rho":
            if not self.rho < 0 or not (0.0 <= self.d <= 1.0) or self.a_coef != 0:
                raise DomainError("negative-rho family needs rho < 0, a = 0 and d in [0, 1]")
        else:
            raise DomainError(f"unknown family {self.family!r}")

    def alpha(self, y):
        return np.asarray(y, dtype=float) ** self.rho

    def beta(self, y):
        y = np.asarray(y, dtype=float)
        if self.family == "positive-rho":
            return self.a_coef * y
        return self.c - self.d * np.log(y)

    def residuals(self, X, Y) -> np.ndarray:
        return (np.asarray(X, float) - self.beta(Y)) / self.alpha(Y)

    @property
    def erv_params(self) -> tuple[float, float]:
        """``(rho, 0)``. With ``a = 0`` (``d = 0``) the pair is exactly ERV_(rho, 0);
        otherwise beta dominates alpha and carries no finite k."""
        return self.rho, 0.0

    def to_json(self) -> dict:
        return {"rho": self.rho, "family": self.family, "a": self.a_coef, "c": self.c, "d": self.d}


def dependence_score(Z: np.ndarray, bins: list[np.ndarray]) -> float:
    """Sum over Y-bins of squared bin-mean and bin-sd departures, in units of the global sd."""
    sd = float(np.std(Z))
    if not np.isfinite(sd):
        return math.inf
    if sd == 0.0:
        return 0.0
    mu = float(np.mean(Z))
    s = 0.0
    for b in bins:
        zb = Z[b]
        s += (float(np.mean(zb)) - mu) ** 2 + (float(np.std(zb)) - sd) ** 2
    return s / (sd * sd)


def _bins(Y: np.ndarray) -> list[np.ndarray]:
    return np.array_split(np.argsort(Y, kind="stable"), N_BINS)


@dataclass(frozen=True, eq=False)
class NormalizationFit:
    normalization: HtNormalization
    score: float
    score_min: float
    score_max: float
    boundary: bool
    flat: bool
    grid: np.ndarray     # rows: rho, a (or c), d, score


def _exceedances(X, Y, u):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    sel = Y > u
    m = int(sel.sum())
    if m < MIN_EXCEEDANCES:
        raise InsufficientDataError(f"only {m} exceedances of u={u:g} (need >= {MIN_EXCEEDANCES})",
                                    observed=m)
    if np.any(Y[sel] <= 0):
        raise DomainError("the normalization family needs positive Y above the threshold")
    return X[sel], Y[sel]


def _score_table_positive(Xe, Ye, bins, rhos, a_s):
    out = []
    for r in rhos:
        den = Ye**r
        for a in a_s:
            out.append((r, a, 0.0, dependence_score((Xe - a * Ye) / den, bins)))
    return out


def _score_table_negative(Xe, Ye, bins, rhos, c_s, d_s):
    out = []
    lg = np.log(Ye)
    for r in rhos:
        den = Ye**r
        for c in c_s:
            for d in d_s:
                out.append((r, c, d, dependence_score((Xe - c + d * lg) / den, bins)))
    return out


def fit_normalization(X: Sequence[float], Y: Sequence[float], u: float | None = None,
                      family: str = "auto", *, rho_step: float = 0.05,
                      workers: int | None = None) -> NormalizationFit:
    """Grid search plus bounded coordinate refinement of the dependence score.

    ``family`` is ``positive-rho``, ``negative-rho`` or ``auto`` (both, lower
    score wins). Hitting the ``rho = 0.95`` cap sets ``boundary``; a score
    surface with range below 1e-6 sets ``flat``.
    """
    Yall = np.asarray(Y, dtype=float)
    u = float(np.quantile(Yall, 0.95)) if u is None else float(u)
    Xe, Ye = _exceedances(X, Yall, u)
    bins = _bins(Ye)
    if family not in ("auto", "positive-rho", "negative-rho"):
        raise DomainError(f"unknown family {family!r}")
    n_rho = int(round(RHO_CAP / rho_step))
    table: list[tuple] = []
    if family in ("auto", "positive-rho"):
        rhos = np.round(np.arange(0, n_rho + 1) * rho_step, 10)
        a_s = np.linspace(0.0, 1.0, 21)
        parts = parallel_map(lambda r: _score_table_positive(Xe, Ye, bins, [r], a_s), rhos, workers)
        table += [("positive-rho",) + row for p in parts for row in p]
    if family in ("auto", "negative-rho"):
        rhos = -np.round(np.arange(1, n_rho + 1) * rho_step, 10)
        c_s = np.quantile(Xe, np.linspace(0.0, 1.0, 21))
        d_s = np.linspace(0.0, 1.0, 21)
        parts = parallel_map(lambda r: _score_table_negative(Xe, Ye, bins, [r], c_s, d_s), rhos,
                             workers)
        table += [("negative-rho",) + row for p in parts for row in p]

    scores = np.array([row[4] for row in table])
    finite = np.isfinite(scores)
    best = table[int(np.argmin(np.where(finite, scores, np.inf)))]
    fam, r0, p0, d0, s0 = best
    smin = float(scores[finite].min())
    smax = float(scores[finite].max())

    # bounded coordinate refinement around the grid optimum
    if fam == "positive-rho":
        def f(r, a):
            return dependence_score((Xe - a * Ye) / Ye**r, bins)
        r, a = r0, p0
        for _ in range(3):
            r = optimize.minimize_scalar(lambda v: f(v, a), bounds=(max(0.0, r - rho_step),
                                         min(RHO_CAP, r + rho_step)), method="bounded",
                                         options={"xatol": 1e-5}).x
            a = optimize.minimize_scalar(lambda v: f(r, v), bounds=(max(0.0, a - 0.05),
                                         min(1.0, a + 0.05)), method="bounded",
                                         options={"xatol": 1e-5}).x
        s = f(r, a)
        if s > s0:
            r, a, s = r0, p0, s0
        norm = HtNormalization(float(r), "positive-rho", a_coef=float(a))
    else:
        lg = np.log(Ye)

        def f(r, c, d):
            return dependence_score((Xe - c + d * lg) / Ye**r, bins)
        r, c, d = r0, p0, d0
        cstep = float(np.ptp(Xe)) / 20 or 1.0
        for _ in range(3):
            r = optimize.minimize_scalar(lambda v: f(v, c, d), bounds=(max(-RHO_CAP, r - rho_step),
                                         min(-1e-6, r + rho_step)), method="bounded").x
            c = optimize.minimize_scalar(lambda v: f(r, v, d), bounds=(c - cstep, c + cstep),
                                         method="bounded").x
            d = optimize.minimize_scalar(lambda v: f(r, c, v), bounds=(max(0.0, d - 0.05),
                                         min(1.0, d + 0.05)), method="bounded").x
        s = f(r, c, d)
        if s > s0:
            r, c, d, s = r0, p0, d0, s0
        norm = HtNormalization(float(r), "negative-rho", c=float(c), d=float(d))
    boundary = norm.rho >= RHO_CAP - 1e-3
    flat = (smax - smin) < 1e-6
    if flat:
        warnings.warn("flat dependence-score surface: no Y-dependence left to fit "
                      "(suggests asymptotic independence)", FitWarning, stacklevel=2)
    grid = np.array([[row[1], row[2], row[3], row[4]] for row in table])
    return NormalizationFit(norm, float(s), smin, smax, bool(boundary), bool(flat), grid)


def tail_kernel_residual_cdf(G: DistSpec, rho: float, k: float, normalization: HtNormalization,
                             u: float, z: Sequence[float]) -> np.ndarray:
    """Law of ``Z`` over ``Y > u`` when ``X = psi(Y) + Y^rho xi``, ``xi ~ G``, ``Y ~ Pareto(1)``.

    Given ``Y > u`` the ratio ``v = u/Y`` is uniform on (0, 1), so
    ``P[Z <= z] = int_0^1 G((alpha(y) z + beta(y) - psi(y)) / y^rho) dv`` with ``y = u/v``.
    """
    from .erv import psi

    if u < 1:
        raise DomainError("threshold must lie in the Pareto(1) support (u >= 1)")

    zz = np.atleast_1d(np.asarray(z, dtype=float))

    def f(v):
        y = u / v
        arg = (normalization.alpha(y) * zz + normalization.beta(y) - psi(y, rho, k)) / y**rho
        return np.asarray(G.cdf(arg), dtype=float)

    return integrate.quad_vec(f, 0.0, 1.0, epsabs=1e-9, epsrel=0.0)[0]


def estimate_G(X: Sequence[float], Y: Sequence[float], u: float,
               normalization: HtNormalization) -> DistSpec:
    """Empirical law of ``Z = (X - beta(Y))/alpha(Y)`` over ``Y > u``."""
    Xe, Ye = _exceedances(X, Y, u)
    return distfn.empirical(normalization.residuals(Xe, Ye))


# -- full fit -------------------------------------------------------------------------------

@dataclass(eq=False)
class FitResult:
    gamma: GammaEstimate
    normalization: HtNormalization
    G_hat: DistSpec
    u: float
    m: int
    n: int
    sigma_u: float
    score: float
    diagnostics: dict
    warnings: list[str]
    residuals: np.ndarray
    y_exceed: np.ndarray

    @property
    def gamma_hat(self) -> float:
        return self.gamma.gamma

    def tail_prob(self, y) -> np.ndarray:
        """GPD-extrapolated ``P[Y > y]`` for ``y >= u``."""
        y = np.asarray(y, dtype=float)
        z = (y - self.u) / self.sigma_u
        return (self.m / self.n) * distfn.gev_tail(np.maximum(z, 0.0), self.gamma_hat)

    def to_json(self, path: str | Path | None = None, extra: dict | None = None) -> dict:
        qs = np.linspace(0.0, 1.0, 201)[1:-1]
        tab = {"p": qs.tolist(), "z": np.asarray(self.G_hat.quantile(qs)).tolist()}
        out = {"gamma": self.gamma.to_json(), "normalization": self.normalization.to_json(),
               "threshold": self.u, "exceedances": self.m, "n": self.n, "sigma_u": self.sigma_u,
               "score": self.score, "G_hat": tab, "diagnostics": self.diagnostics,
               "warnings": self.warnings, **(extra or {})}
        if path is not None:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            Path(path).write_text(json.dumps(out, indent=2, default=float))
        return out

    def residual_rows(self) -> list[dict]:
        """Residual-vs-Y and QQ plot data (against the standard normal reference)."""
        order = np.argsort(self.residuals)
        z = self.residuals[order]
        pp = (np.arange(z.size) + 0.5) / z.size
        qn = stats.norm.ppf(pp)
        return [{"y": float(self.y_exceed[i]), "z": float(self.residuals[i]),
                 "z_sorted": float(z[j]), "p": float(pp[j]), "normal_q": float(qn[j])}
                for j, i in enumerate(order)]


def fit(X: Sequence[float], Y: Sequence[float], u: float | None = None, family: str = "auto",
        *, workers: int | None = None) -> FitResult:
    """Estimate gamma, the normalization and G on exceedances of ``u`` (default 95% quantile)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = Y.size
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", FitWarning)
        g = estimate_gamma(Y)
        u = float(np.quantile(Y, 0.95)) if u is None else float(u)
        nf = fit_normalization(X, Y, u, family, workers=workers)
    msgs = [str(w.message) for w in caught if issubclass(w.category, FitWarning)]
    for w in caught:
        warnings.warn(w.message, w.category, stacklevel=2)
    Xe, Ye = _exceedances(X, Y, u)
    Z = nf.normalization.residuals(Xe, Ye)
    G_hat = distfn.empirical(Z)
    excess = Ye - u
    sigma = float(stats.genpareto.fit(excess, fc=g.gamma, floc=0.0)[2])
    norm = nf.normalization
    indep = norm.rho <= 0.05 and norm.a_coef <= 0.05 and norm.d <= 0.05
    if indep:
        msgs.append("fitted alpha ~ const and beta ~ 0: X is not extreme when Y is "
                    "(asymptotic independence)")
    if nf.boundary:
        msgs.append(f"rho hit the family cap {RHO_CAP} (true rho may be >= 1)")
    diag = {"boundary": nf.boundary, "flat": nf.flat, "score_range": [nf.score_min, nf.score_max],
            "nondegeneracy": "asymptotic-independence" if (indep or nf.flat) else "cevm",
            "gamma_half_width": g.half_width}
    return FitResult(g, norm, G_hat, u, int(Ye.size), n, sigma, nf.score, diag, msgs, Z, Ye)


# -- risk regions ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RiskEstimate:
    probability: float
    lower: float
    upper: float
    method: str
    t: float
    n_boot: int


def _cond_quantile(v, y_min, u, sigma, gamma):
    """Quantile ``v`` of the GPD tail conditioned on exceeding ``y_min``."""
    z0 = (y_min - u) / sigma
    if abs(gamma) < 1e-12:
        return y_min - sigma * np.log1p(-v)
    base = 1.0 + gamma * z0
    return u + sigma * (base * (1.0 - v) ** (-gamma) - 1.0) / gamma


def _risk_point(G: DistSpec, norm: HtNormalization, p_tail: float, y_min: float, x_max: float,
                u: float, sigma: float, gamma: float, method: str) -> float:
    if method == "limit":
        if norm.family != "positive-rho" or norm.a_coef != 0:
            raise DomainError("the limit route needs beta = 0 (a = 0)")
        xn = (x_max - float(norm.beta(y_min))) / float(norm.alpha(y_min))
        # in the level t = 1/P[Y > y], alpha(Y) = Y^rho varies like t^(gamma rho)
        return p_tail * mu_gamma(G, gamma * norm.rho, 0.0, gamma, xn, 0.0)

    def integrand(v):
        yv = _cond_quantile(np.asarray(v, dtype=float), y_min, u, sigma, gamma)
        return np.asarray(G.cdf((x_max - norm.beta(yv)) / norm.alpha(yv)), dtype=float)

    # G is a step function, so the tolerance is kept well below bootstrap noise but not tighter
    return p_tail * quad(integrand, 0.0, 1.0 - 1e-12, abstol=1e-6)


def risk_region_probability(fit_result: FitResult, x_max: float, y_min: float, *,
                            method: str = "extrapolate", n_boot: int = 200, seed: int = 0,
                            level: float = 0.9, workers: int | None = None) -> RiskEstimate:
    """``P[X <= x_max, Y > y_min]`` for ``y_min`` at or beyond the threshold.

    ``extrapolate`` integrates ``G_hat((x_max - beta(Y))/alpha(Y))`` over the
    GPD tail of Y above ``y_min``; ``limit`` evaluates the limit measure at
    level ``t = 1/P[Y > y_min]`` and divides by t. The interval is a
    bootstrap percentile interval over exceedances.
    """
    fr = fit_result
    if y_min < fr.u:
        raise DomainError(f"y_min={y_min:g} is below the fitting threshold u={fr.u:g}: "
                          "risk regions must extrapolate upward")
    if method not in ("extrapolate", "limit"):
        raise DomainError("method must be 'extrapolate' or 'limit'")
    gam = fr.gamma_hat
    p_tail = float(fr.tail_prob(y_min))
    est = _risk_point(fr.G_hat, fr.normalization, p_tail, y_min, x_max, fr.u, fr.sigma_u, gam,
                      method)

    k = min(fr.gamma.k, fr.m - 1)

    def one(b):
        # resample exceedances; gamma, sigma and G are all re-estimated
        rng = substream(seed, b, domain=2)
        idx = rng.integers(0, fr.m, fr.m)
        G_b = distfn.empirical(fr.residuals[idx])
        ys = np.sort(fr.y_exceed[idx]) + fr.gamma.shift
        g_b = _moment_estimator(ys[-k:], ys[-k - 1])[0] if ys[-k - 1] > 0 else gam
        exc = fr.y_exceed[idx] - fr.u
        sig = float(stats.genpareto.fit(exc, fc=g_b, floc=0.0)[2])
        z = (y_min - fr.u) / sig
        p_b = (fr.m / fr.n) * float(distfn.gev_tail(max(z, 0.0), g_b))
        return _risk_point(G_b, fr.normalization, p_b, y_min, x_max, fr.u, sig, g_b, method)

    boots = np.array(parallel_map(one, range(n_boot), workers)) if n_boot else np.array([est])
    lo, hi = np.quantile(boots, [(1 - level) / 2, (1 + level) / 2])
    return RiskEstimate(float(est), float(lo), float(hi), method, 1.0 / p_tail, n_boot)


# -- data input -----------------------------------------------------------------------------

def load_xy_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, int]:
    """Two-column (x, y) CSV with optional header. Returns ``(x, y, n_dropped)``."""
    rows = []
    with Path(path).open(newline="") as fh:
        for i, rec in enumerate(csv.reader(fh)):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) < 2:
                raise PreconditionError(f"line {i + 1}: expected two columns")
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except ValueError:
                if i == 0:
                    continue  # header
                rows.append((math.nan, math.nan))
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    ok = np.all(np.isfinite(arr), axis=1)
    return arr[ok, 0], arr[ok, 1], int((~ok).sum())
