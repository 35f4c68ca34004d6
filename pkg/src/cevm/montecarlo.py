"""Simulation of (X, Y) pairs and Monte Carlo checks of the tail limits."""

from __future__ import annotations

import csv
import json
import math
import time
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import distfn
from .distfn import DistSpec
from .erv import estimate_erv_params
from .errors import EvaluationError, InsufficientDataError, PreconditionError
from .kernels import KernelLimitReport, KernelSpec
from .limits import LimitMeasure, h_distribution, nondegeneracy_check
from .rng import CHUNK, chunk_sizes, parallel_map, substream

Z_CELL = 3.0
Z_MEDIAN = 1.5
CELL_FRACTION = 0.95


class SampleSizeWarning(UserWarning):
    pass


def _identity(t):
    return t


def _zero(t):
    return 0.0


@dataclass(frozen=True, eq=False)
class Normalization:
    """Affine normalizations ``(Y - b(t))/a(t)`` and ``(X - beta(t))/alpha(t)``.

    With ``standard_y`` the Y-marginal limit is ``1/y`` on ``(0, inf)``;
    otherwise it is the GEV tail ``(1 + gamma y)^(-1/gamma)``.
    """

    a: Callable[[float], float] = _identity
    b: Callable[[float], float] = _zero
    alpha: Callable[[float], float] = _identity
    beta: Callable[[float], float] = _zero
    gamma: float = 1.0
    rho: float = 1.0
    k: float = 0.0
    standard_y: bool = True
    label: str = "standard"

    @classmethod
    def standard(cls) -> Normalization:
        return cls()

    def normalize(self, X: np.ndarray, Y: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
        return (X - self.beta(t)) / self.alpha(t), (Y - self.b(t)) / self.a(t)

    def marginal_limit(self, y: float) -> float:
        if self.standard_y:
            return 1.0 / y
        return float(distfn.gev_tail(y, self.gamma))


@dataclass(frozen=True, eq=False)
class ModelSpec:
    y_dist: DistSpec
    kernel: KernelSpec
    normalization: Normalization = field(default_factory=Normalization.standard)
    reference_mu: LimitMeasure | None = None
    label: str = "model"


def validate_model(model: ModelSpec, t_check: Sequence[float] = (1e3, 1e4, 1e5),
                   tol: float = 0.02) -> dict:
    """Check the declared (gamma, rho, k) against the model's normalizations."""
    norm = model.normalization
    ys = np.array([0.5, 1.0, 2.0]) if norm.standard_y else np.array([-0.5, 0.0, 1.0])
    devs = []
    for t in t_check:
        vals = t * np.asarray(model.y_dist.survival(norm.a(t) * ys + norm.b(t)), dtype=float)
        target = np.array([norm.marginal_limit(y) for y in ys])
        devs.append(float(np.max(np.abs(vals - target))))
    if devs[-1] > tol:
        raise PreconditionError(
            f"Y does not follow the declared marginal limit (deviation {devs[-1]:.3g} at t={t_check[-1]:g})")
    try:
        with np.errstate(over="ignore"):
            rho_hat, k_hat, fit = estimate_erv_params(norm.alpha, norm.beta,
                                                      np.geomspace(1e2, 1e6, 12),
                                                      np.geomspace(0.5, 4.0, 7))
    except EvaluationError as exc:
        raise PreconditionError(f"normalization (alpha, beta) is not ERV on the check grid: {exc}") from exc
    if abs(rho_hat - norm.rho) > tol or abs(k_hat - norm.k) > tol * max(1.0, abs(norm.k)):
        raise PreconditionError(
            f"normalization (alpha, beta) is not ERV with declared (rho={norm.rho:g}, k={norm.k:g});"
            f" estimated ({rho_hat:.3g}, {k_hat:.3g})")
    return {"marginal_deviation": devs, "rho_hat": rho_hat, "k_hat": k_hat}


# -- sampling -----------------------------------------------------------------------

def _sample_chunk(model: ModelSpec, seed: int, index: int, size: int) -> tuple[np.ndarray, np.ndarray]:
    rng = substream(seed, index)
    try:
        Y = model.y_dist.sample(rng, size)
        with np.errstate(over="ignore"):
            X = model.kernel.sample(Y, rng)
    except (ArithmeticError, ValueError) as exc:
        raise EvaluationError(f"sampler failed in chunk {index} (offset {index * CHUNK}): {exc}") from exc
    return X, Y


def sample_pairs(model: ModelSpec, n: int, seed: int, *, workers: int | None = None
                 ) -> tuple[np.ndarray, np.ndarray]:
    """``n`` i.i.d. pairs; a deterministic function of ``(model, n, seed)``."""
    if n < 1:
        raise PreconditionError("sample_pairs needs n >= 1")
    sizes = chunk_sizes(n)
    parts = parallel_map(lambda i: _sample_chunk(model, seed, i, sizes[i]), range(len(sizes)),
                         workers)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _count(X: np.ndarray, Y: np.ndarray, t: float, xs: np.ndarray, ys: np.ndarray,
           norm: Normalization) -> tuple[np.ndarray, np.ndarray]:
    """Integer counts of ``Xn <= x, Yn > y`` (shape len x by len y) and of ``Yn > y``."""
    with np.errstate(over="ignore", invalid="ignore"):
        Xn, Yn = norm.normalize(X, Y, t)
    cells = np.zeros((xs.size, ys.size), dtype=np.int64)
    slab = np.zeros(ys.size, dtype=np.int64)
    sel = Yn > ys.min()
    Xn, Yn = Xn[sel], Yn[sel]
    for j, y in enumerate(ys):
        m = Yn > y
        xv = np.sort(Xn[m])
        slab[j] = xv.size
        cells[:, j] = np.searchsorted(xv, xs, side="right")
    return cells, slab


# -- tail grids ------------------------------------------------------------------------

@dataclass(eq=False)
class TailGrid:
    """Empirical ``t P[Xn <= x, Yn > y]`` on a grid, with standard errors."""

    t: float
    x: np.ndarray
    y: np.ndarray
    counts: np.ndarray
    n: int
    seed: int | None = None
    analytic: np.ndarray | None = None
    slab_counts: np.ndarray | None = None
    marginal_target: np.ndarray | None = None

    @property
    def empirical(self) -> np.ndarray:
        return self.t * self.counts / self.n

    @property
    def std_error(self) -> np.ndarray:
        p = self.counts / self.n
        return self.t * np.sqrt(p * (1.0 - p) / self.n)

    def _z(self, emp: np.ndarray, counts: np.ndarray, target: np.ndarray) -> np.ndarray:
        # With a zero (or full) count the empirical standard error vanishes; fall back on
        # the binomial error at the analytic probability.
        p = counts / self.n
        se = self.t * np.sqrt(p * (1.0 - p) / self.n)
        pa = np.clip(target / self.t, 0.0, 1.0)
        se_a = self.t * np.sqrt(pa * (1.0 - pa) / self.n)
        se = np.where(se > 0, se, se_a)
        diff = emp - target
        with np.errstate(divide="ignore", invalid="ignore"):
            z = diff / se
        return np.where(se > 0, z, np.where(np.abs(diff) < 1e-12, 0.0, np.nan))

    @property
    def z_score(self) -> np.ndarray | None:
        if self.analytic is None:
            return None
        return self._z(self.empirical, self.counts, self.analytic)

    @property
    def slab_empirical(self) -> np.ndarray | None:
        return None if self.slab_counts is None else self.t * self.slab_counts / self.n

    @property
    def slab_z(self) -> np.ndarray | None:
        if self.slab_counts is None or self.marginal_target is None:
            return None
        return self._z(self.slab_empirical, self.slab_counts, self.marginal_target)

    def rows(self) -> list[dict]:
        out = []
        emp, se, z = self.empirical, self.std_error, self.z_score
        for i, x in enumerate(self.x):
            for j, y in enumerate(self.y):
                out.append({
                    "t": float(self.t), "x": float(x), "y": float(y),
                    "empirical": float(emp[i, j]), "std_error": float(se[i, j]),
                    "analytic": None if self.analytic is None else float(self.analytic[i, j]),
                    "z": None if z is None else float(z[i, j]),
                })
        return out

    def to_csv(self, path: str | Path, append: bool = False) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        cols = ["t", "x", "y", "empirical", "std_error", "analytic", "z"]
        new = not (append and path.exists())
        with path.open("a" if append else "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            if new:
                w.writeheader()
            for r in self.rows():
                w.writerow({k: ("" if v is None else repr(v)) for k, v in r.items()})
        return path


def _analytic(reference: LimitMeasure | None, xs, ys) -> np.ndarray | None:
    if reference is None:
        return None
    return reference.mu_grid(xs, ys)


def empirical_tail(sample: tuple[np.ndarray, np.ndarray], t: float, x_grid: Sequence[float],
                   y_grid: Sequence[float], normalization: Normalization | None = None, *,
                   reference: LimitMeasure | None = None, seed: int | None = None) -> TailGrid:
    """``t P[(X - beta(t))/alpha(t) <= x, (Y - b(t))/a(t) > y]`` from a sample."""
    if t < 1:
        raise PreconditionError("empirical_tail needs t >= 1")
    X, Y = (np.asarray(v, dtype=float) for v in sample)
    n = X.size
    if n < 100 * t:
        warnings.warn(f"n={n} < 100 t = {100 * t:g}: fewer than ~100 expected exceedances",
                      SampleSizeWarning, stacklevel=2)
    norm = normalization or Normalization.standard()
    xs, ys = np.asarray(x_grid, float), np.asarray(y_grid, float)
    cells, slab = _count(X, Y, t, xs, ys, norm)
    target = np.array([norm.marginal_limit(y) for y in ys])
    return TailGrid(t, xs, ys, cells, n, seed, _analytic(reference, xs, ys), slab, target)


# -- verification -------------------------------------------------------------------------

@dataclass(eq=False)
class VerifyReport:
    passed: bool
    verdict: str                 # cevm | asymptotic-independence | defective | nonconvergent-kernel
    grids: list[TailGrid]
    frac_within: float
    median_abs_z: float
    sup_deviation: list[float]
    marginal_frac_within: float
    nondegeneracy: str
    kernel_status: str | None
    n: int
    seed: int
    elapsed: float = 0.0
    notes: list[str] = field(default_factory=list)

    def numbers(self) -> dict:
        """All reported numbers (excluding timings); deterministic given the inputs."""
        return {
            "passed": self.passed, "verdict": self.verdict,
            "frac_within": self.frac_within, "median_abs_z": self.median_abs_z,
            "sup_deviation": self.sup_deviation, "marginal_frac_within": self.marginal_frac_within,
            "nondegeneracy": self.nondegeneracy, "kernel_status": self.kernel_status,
            "n": self.n, "seed": self.seed,
            "grids": [g.rows() for g in self.grids],
            "slab": [None if g.slab_counts is None else g.slab_empirical.tolist() for g in self.grids],
        }

    def to_json(self, path: str | Path | None = None, extra: dict | None = None) -> dict:
        out = {**self.numbers(), "thresholds": {"z_cell": Z_CELL, "z_median": Z_MEDIAN,
                                                "cell_fraction": CELL_FRACTION},
               "elapsed_seconds": self.elapsed, "notes": self.notes, **(extra or {})}
        if path is not None:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            Path(path).write_text(json.dumps(out, indent=2, default=float))
        return out


def _chunk_counts(model, seed, i, size, ts, xs, ys):
    X, Y = _sample_chunk(model, seed, i, size)
    out = [_count(X, Y, t, xs, ys, model.normalization) for t in ts]
    return np.stack([c for c, _ in out]), np.stack([s for _, s in out])


def stream_counts(model: ModelSpec, n: int, seed: int, t_grid, x_grid, y_grid, *,
                  workers: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Counts for every (t, x, y) without holding the full sample in memory."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    ts, xs, ys = (np.asarray(v, float) for v in (t_grid, x_grid, y_grid))
    sizes = chunk_sizes(n)
    parts = parallel_map(lambda i: _chunk_counts(model, seed, i, sizes[i], ts, xs, ys),
                         range(len(sizes)), workers)
    cells = np.zeros((ts.size, xs.size, ys.size), dtype=np.int64)
    slab = np.zeros((ts.size, ys.size), dtype=np.int64)
    for c, s in parts:  # integer sums: exact and order independent
        cells += c
        slab += s
    return cells, slab


def _z_summary(z: np.ndarray) -> tuple[float, float]:
    az = np.abs(z.ravel())
    az = np.where(np.isnan(az), np.inf, az)
    return float(np.mean(az < Z_CELL)), float(np.median(az))


def verify_convergence(model: ModelSpec, t_grid: Sequence[float], x_grid: Sequence[float],
                       y_grid: Sequence[float], n: int, seed: int, *, validate: bool = True,
                       kernel_report: KernelLimitReport | None = None, x_max: float = 1e10,
                       workers: int | None = None) -> VerifyReport:
    """Compare empirical scaled tails with the reference limit measure.

    PASS when, at the largest t, at least 95% of cells have ``|z| < 3`` and
    the median ``|z|`` is below 1.5.
    """
    if model.reference_mu is None:
        raise PreconditionError("verify_convergence needs model.reference_mu")
    notes: list[str] = []
    if validate:
        info = validate_model(model)
        notes.append(f"model check: rho_hat={info['rho_hat']:.4g}, k_hat={info['k_hat']:.4g}")
    start = time.perf_counter()
    ts, xs, ys = (np.asarray(v, float) for v in (t_grid, x_grid, y_grid))
    if n < 100 * ts.max():
        warnings.warn(f"n={n} < 100 t", SampleSizeWarning, stacklevel=2)
    cells, slab = stream_counts(model, n, seed, ts, xs, ys, workers=workers)
    analytic = _analytic(model.reference_mu, xs, ys)
    target = np.array([model.normalization.marginal_limit(y) for y in ys])
    grids = [TailGrid(float(t), xs, ys, cells[i], n, seed, analytic, slab[i], target)
             for i, t in enumerate(ts)]
    final = grids[-1]
    frac, med = _z_summary(final.z_score)
    passed = frac >= CELL_FRACTION and med < Z_MEDIAN
    sup_dev = [float(np.max(np.abs(g.empirical - analytic))) for g in grids]
    mfrac, _ = _z_summary(final.slab_z)

    ref = model.reference_mu
    nd = nondegeneracy_check(ref.mu, ref.slab, nondegeneracy_grid(ref), ys, x_max)
    verdict = {"cevm": "cevm", "degenerate": "asymptotic-independence",
               "defective": "defective"}[nd.verdict]
    kstatus = None if kernel_report is None else kernel_report.status
    if kstatus == "nonconvergent":
        verdict = "nonconvergent-kernel"
        notes.append("kernel has no unique normalized limit (version-dependent)")
    return VerifyReport(passed, verdict, grids, frac, med, sup_dev, mfrac, nd.verdict, kstatus,
                        int(n), int(seed), time.perf_counter() - start, notes)


def nondegeneracy_grid(ref: LimitMeasure) -> np.ndarray:
    """Wide x grid for the non-constancy test (the Monte Carlo grid may be too narrow)."""
    pos = np.geomspace(1e-3, 1e6, 37)
    if ref.regime == "standard":
        return pos
    return np.concatenate([-pos[::-1], [0.0], pos])


def default_sample_size(t: float) -> int:
    return int(max(1e6, 1000 * t))


@dataclass(frozen=True)
class ConditionalEstimate:
    t: float
    x: np.ndarray
    estimate: np.ndarray
    std_error: np.ndarray
    exceedances: int
    reference: np.ndarray | None
    asymptotic_independence: bool


def conditional_probability_estimate(sample: tuple[np.ndarray, np.ndarray], t: float,
                                     x_grid: Sequence[float], *, G: DistSpec | None = None,
                                     tol: float = 0.01) -> ConditionalEstimate:
    """Ratio estimate of ``P[X <= t x | Y > t]`` with binomial standard errors."""
    X, Y = (np.asarray(v, dtype=float) for v in sample)
    xs = np.asarray(x_grid, dtype=float)
    exc = Y > t
    m = int(exc.sum())
    if m < 50:
        raise InsufficientDataError(f"only {m} exceedances of t={t:g} (need >= 50)", observed=m)
    xv = np.sort(X[exc])
    est = np.searchsorted(xv, t * xs, side="right") / m
    se = np.sqrt(est * (1 - est) / m)
    ref = None if G is None else np.array([h_distribution(G, x) for x in xs])
    pos = xs > 0
    indep = bool(pos.any() and np.all(est[pos] >= 1.0 - max(tol, 0.0)))
    return ConditionalEstimate(t, xs, est, se, m, ref, indep)
