"""Univariate distributions, GEV tail utilities and standardization of Y."""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError, ModelError, RegistryLookupError

ArrayLike = float | np.ndarray

# |gamma| below this uses the exp(-y) limit; up to _GAMMA_SERIES a 3-term series
_GAMMA_ZERO = 1e-9
_GAMMA_SERIES = 1e-6


class StandardizationWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class DistSpec:
    """A univariate law on the extended real line.

    ``cdf`` and ``quantile`` are vectorized. ``sampler(rng, size)`` draws
    from a :class:`numpy.random.Generator`. Point masses are listed in
    ``atom_locs``/``atom_masses``; ``kinks`` are further points where the
    CDF is not smooth (support endpoints, table nodes). ``defect`` is mass
    placed at +infinity.
    """

    cdf: Callable[[ArrayLike], ArrayLike]
    quantile: Callable[[ArrayLike], ArrayLike]
    sampler: Callable[[np.random.Generator, int], np.ndarray]
    atom_locs: np.ndarray = field(default_factory=lambda: np.empty(0))
    atom_masses: np.ndarray = field(default_factory=lambda: np.empty(0))
    lower: float = -math.inf
    upper: float = math.inf
    mean: float | None = None
    partial_mean: Callable[[ArrayLike], ArrayLike] | None = None
    sf: Callable[[ArrayLike], ArrayLike] | None = None
    isf: Callable[[ArrayLike], ArrayLike] | None = None
    kinks: tuple[float, ...] = ()
    defect: float = 0.0
    descriptor: dict | None = None
    name: str = ""

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.atom_locs.tolist(), self.atom_masses.tolist()))

    @property
    def is_discrete(self) -> bool:
        """True when all mass sits on atoms (or at +infinity)."""
        return bool(self.atom_masses.size) and abs(
            float(self.atom_masses.sum()) + self.defect - 1.0) < 1e-12

    @property
    def breakpoints(self) -> np.ndarray:
        pts = np.concatenate([self.atom_locs, np.asarray(self.kinks, dtype=float)])
        pts = pts[np.isfinite(pts)]
        return np.unique(pts)

    def survival(self, x: ArrayLike) -> ArrayLike:
        if self.sf is not None:
            return self.sf(x)
        return 1.0 - self.cdf(x)

    def upper_quantile(self, q: ArrayLike) -> ArrayLike:
        """``F^{<-}(1 - q)`` computed without forming ``1 - q`` when possible."""
        if self.isf is not None:
            return self.isf(q)
        return self.quantile(1.0 - np.asarray(q, dtype=float))

    def mass_at(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        if not self.atom_locs.size:
            return np.zeros_like(x)
        idx = np.searchsorted(self.atom_locs, x)
        idx = np.clip(idx, 0, self.atom_locs.size - 1)
        hit = self.atom_locs[idx] == x
        return np.where(hit, self.atom_masses[idx], 0.0)

    def cdf_left(self, x: ArrayLike) -> ArrayLike:
        """Left limit ``G(x-)``."""
        return self.cdf(x) - self.mass_at(x)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.asarray(self.sampler(rng, int(size)), dtype=float)

    def to_json(self) -> dict:
        if self.descriptor is None:
            raise DomainError(f"distribution {self.name or '<anonymous>'} has no JSON descriptor")
        return dict(self.descriptor)


def _sorted_atoms(locs, masses) -> tuple[np.ndarray, np.ndarray]:
    locs = np.asarray(locs, dtype=float)
    masses = np.asarray(masses, dtype=float)
    order = np.argsort(locs, kind="stable")
    return locs[order], masses[order]


# -- families ---------------------------------------------------------------

def pareto(alpha: float, scale: float = 1.0) -> DistSpec:
    """Pareto(alpha) on [scale, inf): ``P[X > x] = (x/scale)^(-alpha)``."""
    if alpha <= 0 or scale <= 0:
        raise DomainError("pareto requires alpha > 0 and scale > 0")
    a, s = float(alpha), float(scale)

    def sf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= s, 1.0, (np.maximum(x, s) / s) ** -a)

    def cdf(x):
        return 1.0 - sf(x)

    def isf(q):
        return s * np.asarray(q, dtype=float) ** (-1.0 / a)

    def quantile(p):
        return isf(1.0 - np.asarray(p, dtype=float))

    def partial_mean(x):
        x = np.maximum(np.asarray(x, dtype=float), s)
        if a == 1.0:
            return s * np.log(x / s)
        return a * s**a / (a - 1.0) * (s ** (1.0 - a) - x ** (1.0 - a))

    mean = a * s / (a - 1.0) if a > 1 else math.inf
    return DistSpec(
        cdf=cdf, quantile=quantile, sampler=lambda rng, n: s * (1.0 + rng.pareto(a, n)),
        lower=s, mean=mean, partial_mean=partial_mean, sf=sf, isf=isf, kinks=(s,),
        descriptor={"family": "pareto", "params": {"alpha": a, "scale": s}},
        name=f"Pareto({a:g})",
    )


def exponential(rate: float = 1.0) -> DistSpec:
    if rate <= 0:
        raise DomainError("exp requires rate > 0")
    lam = float(rate)

    def sf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 0, 1.0, np.exp(-lam * np.maximum(x, 0.0)))

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 0, 0.0, -np.expm1(-lam * np.maximum(x, 0.0)))

    def partial_mean(x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return (-np.expm1(-lam * x) - lam * x * np.exp(-lam * x)) / lam

    def isf(q):
        with np.errstate(divide="ignore"):  # isf(0) = +inf
            return -np.log(np.asarray(q, dtype=float)) / lam

    return DistSpec(
        cdf=cdf, quantile=lambda p: -np.log1p(-np.asarray(p, dtype=float)) / lam,
        sampler=lambda rng, n: rng.exponential(1.0 / lam, n),
        lower=0.0, mean=1.0 / lam, partial_mean=partial_mean, sf=sf,
        isf=isf, kinks=(0.0,),
        descriptor={"family": "exp", "params": {"rate": lam}}, name=f"Exp({lam:g})",
    )


def uniform(low: float = 0.0, high: float = 1.0) -> DistSpec:
    if not high > low:
        raise DomainError("uniform requires high > low")
    lo, hi = float(low), float(high)
    w = hi - lo

    def cdf(x):
        return np.clip((np.asarray(x, dtype=float) - lo) / w, 0.0, 1.0)

    def partial_mean(x):
        x = np.clip(np.asarray(x, dtype=float), lo, hi)
        return (x * x - lo * lo) / (2.0 * w)

    return DistSpec(
        cdf=cdf, quantile=lambda p: lo + w * np.asarray(p, dtype=float),
        sampler=lambda rng, n: rng.uniform(lo, hi, n),
        lower=lo, upper=hi, mean=0.5 * (lo + hi), partial_mean=partial_mean,
        sf=lambda x: np.clip((hi - np.asarray(x, dtype=float)) / w, 0.0, 1.0),
        isf=lambda q: hi - w * np.asarray(q, dtype=float), kinks=(lo, hi),
        descriptor={"family": "uniform", "params": {"low": lo, "high": hi}},
        name=f"Uniform({lo:g},{hi:g})",
    )


def normal(loc: float = 0.0, scale: float = 1.0) -> DistSpec:
    if scale <= 0:
        raise DomainError("normal requires scale > 0")
    m, s = float(loc), float(scale)

    def partial_mean(x):
        z = (np.asarray(x, dtype=float) - m) / s
        return m * special.ndtr(z) - s * np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)

    return DistSpec(
        cdf=lambda x: special.ndtr((np.asarray(x, dtype=float) - m) / s),
        quantile=lambda p: m + s * special.ndtri(np.asarray(p, dtype=float)),
        sampler=lambda rng, n: rng.normal(m, s, n),
        mean=m, partial_mean=partial_mean,
        sf=lambda x: special.ndtr((m - np.asarray(x, dtype=float)) / s),
        isf=lambda q: m - s * special.ndtri(np.asarray(q, dtype=float)),
        descriptor={"family": "normal", "params": {"loc": m, "scale": s}},
        name=f"N({m:g},{s:g})",
    )


def discrete(masses: Sequence[float], locations: Sequence[float] | None = None,
             defect: float | None = None, *, family: str = "discrete") -> DistSpec:
    """Atoms ``masses[i]`` at ``locations[i]`` (default 0, 1, 2, ...).

    Any mass missing from a total of one is placed at +infinity unless
    ``defect`` is given explicitly.
    """
    masses = np.asarray(masses, dtype=float)
    if locations is None:
        locations = np.arange(masses.size, dtype=float)
    locs, ms = _sorted_atoms(locations, masses)
    if locs.size == 0 or np.any(ms < 0):
        raise DomainError("discrete requires at least one atom and nonnegative masses")
    total = float(ms.sum())
    if total > 1 + 1e-12:
        raise DomainError(f"atom masses sum to {total} > 1")
    if defect is None:
        defect = max(0.0, 1.0 - total)
    if abs(total + defect - 1.0) > 1e-9:
        raise DomainError("atom masses plus defect must equal one")
    cum = np.cumsum(ms)
    keep = ms > 0
    locs_nz, ms_nz, cum_nz = locs[keep], ms[keep], np.cumsum(ms[keep])

    def cdf(x):
        x = np.asarray(x, dtype=float)
        i = np.searchsorted(locs, x, side="right")
        return np.where(i > 0, cum[np.maximum(i - 1, 0)], 0.0)

    def quantile(p):
        p = np.asarray(p, dtype=float)
        i = np.searchsorted(cum_nz, p - 1e-15, side="left")
        out = np.where(i < locs_nz.size, locs_nz[np.minimum(i, locs_nz.size - 1)], math.inf)
        return np.where(p <= 0, locs_nz[0], out)

    def sampler(rng, n):
        u = rng.random(n)
        return quantile(np.maximum(u, 1e-300))

    finite_mean = float(np.dot(locs, ms)) if defect == 0 else math.inf
    desc_params = {"masses": ms.tolist(), "locations": locs.tolist()}
    if defect:
        desc_params["defect"] = defect
    return DistSpec(
        cdf=cdf, quantile=quantile, sampler=sampler, atom_locs=locs_nz, atom_masses=ms_nz,
        lower=float(locs_nz[0]), upper=float(locs_nz[-1]) if defect == 0 else math.inf,
        mean=finite_mean,
        partial_mean=lambda x: np.asarray(
            np.cumsum(locs * ms)[np.maximum(np.searchsorted(locs, np.asarray(x, float), "right") - 1, 0)]
            * (np.searchsorted(locs, np.asarray(x, float), "right") > 0)),
        defect=float(defect),
        descriptor={"family": family, "params": desc_params},
        name=f"{family}({len(locs_nz)} atoms)",
    )


def point_mass(c: float) -> DistSpec:
    d = discrete([1.0], [float(c)], family="point_mass")
    return DistSpec(**{**d.__dict__, "descriptor": {"family": "point_mass", "params": {"c": float(c)}},
                       "name": f"eps({float(c):g})"})


def empirical(values: Sequence[float]) -> DistSpec:
    """Empirical law of a sample (each value carries mass 1/n)."""
    v = np.sort(np.asarray(values, dtype=float))
    v = v[np.isfinite(v)]
    if v.size == 0:
        raise DomainError("empirical distribution needs at least one finite value")
    n = v.size
    locs, counts = np.unique(v, return_counts=True)
    csum = np.concatenate([[0.0], np.cumsum(v)])

    def cdf(x):
        return np.searchsorted(v, np.asarray(x, dtype=float), side="right") / n

    def quantile(p):
        p = np.asarray(p, dtype=float)
        i = np.clip(np.ceil(p * n - 1e-12).astype(int) - 1, 0, n - 1)
        return v[i]

    def partial_mean(x):
        return csum[np.searchsorted(v, np.asarray(x, dtype=float), side="right")] / n

    return DistSpec(
        cdf=cdf, quantile=quantile, sampler=lambda rng, k: v[rng.integers(0, n, k)],
        atom_locs=locs, atom_masses=counts / n, lower=float(v[0]), upper=float(v[-1]),
        mean=float(v.mean()), partial_mean=partial_mean,
        descriptor={"family": "empirical", "params": {"values": v.tolist()}},
        name=f"empirical(n={n})",
    )


def tabulated_cdf(x: Sequence[float], p: Sequence[float]) -> DistSpec:
    """Piecewise-linear CDF through ``(x_i, p_i)``; both strictly increasing.

    ``p_0 > 0`` puts an atom at ``x_0``; ``p_last < 1`` leaves a defect at +inf.
    """
    xs = np.asarray(x, dtype=float)
    ps = np.asarray(p, dtype=float)
    if xs.size < 2 or xs.size != ps.size:
        raise DomainError("tabulated_cdf needs at least two (x, p) pairs of equal length")
    if np.any(np.diff(xs) <= 0) or np.any(np.diff(ps) <= 0):
        raise DomainError("tabulated_cdf pairs must be strictly increasing in both coordinates")
    if ps[0] < 0 or ps[-1] > 1:
        raise DomainError("tabulated probabilities must lie in [0, 1]")

    def cdf(z):
        z = np.asarray(z, dtype=float)
        return np.where(z < xs[0], 0.0, np.interp(z, xs, ps))

    def quantile(q):
        q = np.asarray(q, dtype=float)
        out = np.interp(q, ps, xs)
        out = np.where(q <= ps[0], xs[0], out)
        return np.where(q > ps[-1], math.inf, out)

    def sampler(rng, n):
        return quantile(rng.random(n))

    atom_locs = xs[:1] if ps[0] > 0 else np.empty(0)
    atom_masses = ps[:1] if ps[0] > 0 else np.empty(0)
    return DistSpec(
        cdf=cdf, quantile=quantile, sampler=sampler, atom_locs=atom_locs,
        atom_masses=atom_masses, lower=float(xs[0]),
        upper=float(xs[-1]) if ps[-1] == 1 else math.inf, kinks=tuple(xs.tolist()),
        defect=float(1.0 - ps[-1]),
        descriptor={"family": "tabulated_cdf", "params": {"x": xs.tolist(), "p": ps.tolist()}},
        name=f"tabulated({xs.size})",
    )


def bisection_quantile(cdf: Callable, lower: float, upper: float,
                       rel_width: float = 1e-12) -> Callable:
    """Left-continuous inverse of ``cdf`` by vectorized bisection."""

    def quantile(p):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        lo = np.full(p.shape, lower if math.isfinite(lower) else -1.0)
        hi = np.full(p.shape, upper if math.isfinite(upper) else 1.0)
        if not math.isfinite(lower):
            while np.any(m := cdf(lo) >= p):
                lo = np.where(m, 2 * lo - 1, lo)
        if not math.isfinite(upper):
            while np.any(m := (cdf(hi) < p) & (hi < 1e300)):
                hi = np.where(m, 2 * hi + 1, hi)
        for _ in range(2000):
            width = hi - lo
            if np.all(width <= rel_width * np.maximum(1.0, np.abs(hi))):
                break
            mid = lo + 0.5 * width
            up = cdf(mid) >= p
            hi = np.where(up, mid, hi)
            lo = np.where(up, lo, mid)
        return hi if hi.size > 1 else hi[0]

    return quantile


def from_cdf(cdf: Callable, *, lower: float = -math.inf, upper: float = math.inf,
             kinks: Sequence[float] = (), atoms: Sequence[tuple[float, float]] = (),
             mean: float | None = None, name: str = "custom") -> DistSpec:
    """Wrap an arbitrary CDF; the quantile comes from bisection."""
    q = bisection_quantile(cdf, lower, upper)
    locs, ms = _sorted_atoms([a for a, _ in atoms], [m for _, m in atoms])
    return DistSpec(cdf=cdf, quantile=q, sampler=lambda rng, n: q(rng.random(n)),
                    atom_locs=locs, atom_masses=ms, lower=lower, upper=upper, mean=mean,
                    kinks=tuple(kinks), name=name)


_FAMILIES: dict[str, Callable[..., DistSpec]] = {
    "pareto": pareto,
    "exp": exponential,
    "uniform": uniform,
    "normal": normal,
    "point_mass": point_mass,
    "discrete": discrete,
    "empirical": empirical,
    "tabulated_cdf": tabulated_cdf,
}


def from_json(desc: Mapping) -> DistSpec:
    """Build a DistSpec from ``{"family": name, "params": {...}}``."""
    if not isinstance(desc, Mapping) or "family" not in desc:
        raise DomainError("distribution descriptor needs a 'family' field")
    fam = desc["family"]
    if fam not in _FAMILIES:
        raise RegistryLookupError(f"unknown family {fam!r}; known: {sorted(_FAMILIES)}")
    params = dict(desc.get("params", {}))
    try:
        return _FAMILIES[fam](**params)
    except TypeError as exc:
        raise DomainError(f"bad params for family {fam!r}: {exc}") from exc


# -- GEV tail and domains of attraction --------------------------------------

def gev_interval(gamma: float) -> tuple[float, float]:
    """``E_gamma = {y : 1 + gamma*y > 0}``."""
    if gamma > 0:
        return (-1.0 / gamma, math.inf)
    if gamma < 0:
        return (-math.inf, 1.0 / abs(gamma))
    return (-math.inf, math.inf)


def _log1p_ratio(y: np.ndarray, gamma: float) -> np.ndarray:
    """``log(1 + gamma*y) / gamma`` with the gamma -> 0 limit ``y``."""
    g = abs(gamma)
    if g < _GAMMA_ZERO:
        return y
    if g < _GAMMA_SERIES:
        return y - 0.5 * gamma * y**2 + gamma**2 * y**3 / 3.0
    return np.log1p(gamma * y) / gamma


def gev_tail(y: ArrayLike, gamma: float) -> ArrayLike:
    """``(1 + gamma*y)^(-1/gamma)``, read as ``exp(-y)`` at gamma = 0."""
    yy = np.asarray(y, dtype=float)
    lo, hi = gev_interval(gamma)
    if np.any((yy <= lo) | (yy >= hi)):
        bad = yy[(yy <= lo) | (yy >= hi)].ravel()[0]
        raise DomainError(f"y={bad!r} outside E_gamma=({lo}, {hi}) for gamma={gamma}")
    out = np.exp(-_log1p_ratio(yy, gamma))
    return float(out) if np.ndim(y) == 0 else out


def gev_tail_inverse_scale(y: ArrayLike, gamma: float) -> ArrayLike:
    """``(1 + gamma*y)^(1/gamma)`` (``exp(y)`` at gamma = 0)."""
    yy = np.asarray(y, dtype=float)
    out = np.exp(_log1p_ratio(yy, gamma))
    return float(out) if np.ndim(y) == 0 else out


@dataclass(frozen=True)
class GammaDomain:
    gamma: float
    a: Callable[[float], float]
    b: Callable[[float], float]

    @property
    def interval(self) -> tuple[float, float]:
        return gev_interval(self.gamma)


def b_from_quantile(F: DistSpec, t: ArrayLike) -> ArrayLike:
    """Canonical centering ``b(t) = F^{<-}(1 - 1/t)``."""
    tt = np.asarray(t, dtype=float)
    if np.any(tt <= 1):
        raise DomainError("b_from_quantile needs t > 1")
    out = F.upper_quantile(1.0 / tt)
    return float(out) if np.ndim(t) == 0 else np.asarray(out)


@dataclass(frozen=True)
class DomainReport:
    gamma: float
    y_grid: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray          # t * P[(Y - b(t))/a(t) > y], shape (len t, len y)
    target: np.ndarray          # gev_tail(y, gamma)
    deviation: np.ndarray       # per-y sup deviation over the largest t values
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.deviation <= self.tol))


def check_domain_of_attraction(F: DistSpec, gamma: float, a: Callable, b: Callable,
                               t_grid: Sequence[float], y_grid: Sequence[float],
                               tol: float = 1e-2, n_last: int = 3) -> DomainReport:
    """Compare ``t * P[(Y - b(t))/a(t) > y]`` with the GEV tail on grids."""
    ts = np.asarray(t_grid, dtype=float)
    ys = np.asarray(y_grid, dtype=float)
    target = np.asarray(gev_tail(ys, gamma), dtype=float)
    vals = np.empty((ts.size, ys.size))
    for i, t in enumerate(ts):
        vals[i] = t * F.survival(a(t) * ys + b(t))
    last = vals[-min(n_last, ts.size):]
    dev = np.max(np.abs(last - target), axis=0)
    return DomainReport(gamma, ys, ts, vals, target, dev, tol)


# -- smooth centering b* and standardization of Y ----------------------------

@dataclass(frozen=True, eq=False)
class SmoothCentering:
    """Continuous, strictly monotone centering ``b*`` with exact inverse.

    ``b*`` interpolates the canonical ``b`` at nodes ``t_j`` linearly in
    ``log t`` after the transform ``z = log b`` (gamma > 0), ``z = b``
    (gamma = 0) or ``z = log(b(inf) - b)`` (gamma < 0). Beyond the last
    node the final segment is extended.
    """

    gamma: float
    log_t: np.ndarray
    z: np.ndarray
    b_inf: float = math.inf

    def _to_b(self, z):
        if self.gamma > 0:
            return np.exp(z)
        if self.gamma < 0:
            return self.b_inf - np.exp(z)
        return z

    def _to_z(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.gamma > 0:
                return np.log(x)
            if self.gamma < 0:
                return np.log(self.b_inf - x)
        return x

    @property
    def t_min(self) -> float:
        return float(np.exp(self.log_t[0]))

    def __call__(self, t: ArrayLike) -> ArrayLike:
        lt = np.log(np.asarray(t, dtype=float))
        z = np.interp(lt, self.log_t, self.z)
        slope = (self.z[-1] - self.z[-2]) / (self.log_t[-1] - self.log_t[-2])
        z = np.where(lt > self.log_t[-1], self.z[-1] + slope * (lt - self.log_t[-1]), z)
        out = self._to_b(z)
        out = np.where(lt < self.log_t[0], np.nan, out)
        return float(out) if np.ndim(t) == 0 else out

    def inverse(self, x: ArrayLike) -> ArrayLike:
        """Exact functional inverse; NaN below ``b*(t_min)`` or outside the range."""
        z = self._to_z(x)
        zs, lts = (self.z, self.log_t) if self.gamma >= 0 else (-self.z, self.log_t)
        zz = z if self.gamma >= 0 else -z
        lt = np.interp(zz, zs, lts)
        slope = (zs[-1] - zs[-2]) / (lts[-1] - lts[-2])
        lt = np.where(zz > zs[-1], lts[-1] + (zz - zs[-1]) / slope, lt)
        lt = np.where((zz < zs[0]) | ~np.isfinite(zz), np.nan, lt)
        out = np.exp(lt)
        return float(out) if np.ndim(x) == 0 else out


def smooth_b_star(F: DistSpec, gamma: float, a: Callable | None = None, *,
                  node_ratio: float = 2.0, n_nodes: int = 100,
                  check_t: Sequence[float] | None = None) -> SmoothCentering:
    """Continuous strictly monotone ``b*`` asymptotically equivalent to ``b``.

    With ``a`` given, the domain of attraction is checked first and a
    :class:`ModelError` is raised when it fails.
    """
    if a is not None:
        ts = check_t if check_t is not None else np.geomspace(1e3, 1e7, 9)
        lo, hi = gev_interval(gamma)
        ys = np.array([y for y in (-0.5, 0.0, 0.5, 1.0, 2.0) if lo < y < hi])
        rep = check_domain_of_attraction(F, gamma, a, lambda t: b_from_quantile(F, t), ts, ys)
        if not rep.passed:
            raise ModelError(
                f"{F.name} fails the gamma={gamma} domain check (max deviation "
                f"{rep.deviation.max():.3g} > {rep.tol})")
    start = 1.0 if math.isfinite(F.lower) else node_ratio
    t = start * node_ratio ** np.arange(n_nodes, dtype=float)
    with np.errstate(divide="ignore"):
        b = np.asarray(F.upper_quantile(1.0 / t), dtype=float)
    b_inf = float(F.upper)
    if gamma > 0:
        ok = b > 0
        t, b = t[ok], b[ok]
        z = np.log(b)
    elif gamma < 0:
        if not math.isfinite(b_inf):
            raise ModelError("gamma < 0 requires a finite upper endpoint")
        ok = b < b_inf
        t, b = t[ok], b[ok]
        z = -np.log(b_inf - b)
    else:
        ok = np.isfinite(b)
        t, b = t[ok], b[ok]
        z = b.copy()
    if t.size < 2:
        raise ModelError(f"cannot tabulate b for {F.name}")
    # strict increase in z, so that b* is strictly monotone and invertible
    z = np.maximum.accumulate(z)
    bump = 1e-12 * np.maximum(1.0, np.abs(z))
    for i in range(1, z.size):
        if z[i] <= z[i - 1]:
            z[i] = z[i - 1] + bump[i]
    zs = z if gamma >= 0 else -z
    return SmoothCentering(gamma=float(gamma), log_t=np.log(t), z=zs, b_inf=b_inf)


def standardize_y(sample: Sequence[float], b_star_inv: Callable) -> np.ndarray:
    """Map ``Y_i`` to ``b*^{<-}(Y_i)``; points outside the range are dropped."""
    y = np.asarray(sample, dtype=float)
    if y.size == 0:
        return y
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.asarray(b_star_inv(y), dtype=float)
    ok = np.isfinite(out) & (out > 0)
    dropped = int(y.size - ok.sum())
    if dropped:
        warnings.warn(f"standardize_y dropped {dropped} of {y.size} points outside the range of b*",
                      StandardizationWarning, stacklevel=2)
    return out[ok]
