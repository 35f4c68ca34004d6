"""Registry of example models: kernel, law of Y, normalization and reference limit.

Each entry fixes ONE version of the conditional law of X given Y (the
closed-form one); versions are never inferred from joint laws.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from . import distfn
from .distfn import DistSpec
from .erv import psi
from .errors import DomainError, RegistryLookupError
from .kernels import KernelLimitReport, KernelSpec, TailKernel, detect_general_limit
from .limits import LimitMeasure
from .montecarlo import ModelSpec, Normalization

DETECT_T = 2.0 ** np.arange(1, 41)
DETECT_X = np.linspace(0.1, 8.0, 80)


@dataclass(frozen=True, eq=False)
class ExampleModel:
    """A fully specified example.

    ``expected_status`` is the kernel-limit status; ``expected_flags`` lists
    report attributes that must hold; ``expected_verdict`` is the Monte Carlo
    verdict (None when no reference measure exists).
    """

    name: str
    kernel: KernelSpec
    y_dist: DistSpec
    normalization: Normalization
    reference: LimitMeasure | None
    expected_status: str
    expected_verdict: str | None = None
    expected_flags: dict = field(default_factory=dict)
    detect_kernel: KernelSpec | None = None
    detect_alpha: Callable = staticmethod(lambda t: t)
    detect_beta: Callable = staticmethod(lambda t: 0.0)
    t_grid: np.ndarray = field(default_factory=lambda: DETECT_T)
    x_grid: np.ndarray = field(default_factory=lambda: DETECT_X)
    mc_t: tuple = (10.0, 100.0)
    params: dict = field(default_factory=dict)
    description: str = ""

    def model_spec(self) -> ModelSpec:
        return ModelSpec(self.y_dist, self.kernel, self.normalization, self.reference, self.name)

    def detect(self, **kwargs) -> KernelLimitReport:
        K = self.detect_kernel or self.kernel
        return detect_general_limit(K, self.detect_alpha, self.detect_beta, self.t_grid,
                                    self.x_grid, **kwargs)

    def kernel_outcome_ok(self, report: KernelLimitReport) -> bool:
        if report.status != self.expected_status:
            return False
        return all(getattr(report, k) == v for k, v in self.expected_flags.items())


# -- kernels ------------------------------------------------------------------------

def product_kernel(G: DistSpec) -> KernelSpec:
    """``K(y, [0, x]) = G(x / y)``, i.e. ``X = y * xi`` with ``xi ~ G``."""
    return KernelSpec(
        cond_cdf=lambda y, x: G.cdf(x / y),
        cond_cdf_left=lambda y, x: G.cdf_left(x / y),
        cond_sampler=lambda y, rng: y * G.sample(rng, y.size).reshape(y.shape),
        label=f"product({G.name})",
        descriptor={"kernel": "product", "params": {"G": G.descriptor}},
    )


def _exp_draw(rng, shape):
    return rng.standard_exponential(shape)


def max_independent_kernel() -> KernelSpec:
    """``X = max(Y, Z)`` with ``Z ~ Exp(1)`` independent of Y."""

    def cdf(y, x):
        return np.where((x >= y) & (x >= 0), -np.expm1(-np.maximum(x, 0.0)), 0.0)

    def cdf_left(y, x):
        return np.where((x > y) & (x > 0), -np.expm1(-np.maximum(x, 0.0)), 0.0)

    return KernelSpec(cdf, lambda y, rng: np.maximum(y, _exp_draw(rng, y.shape)), cdf_left,
                      label="max-independent", descriptor={"kernel": "max-independent"})


def min_independent_kernel() -> KernelSpec:
    """``X = min(Y, Z)`` with ``Z ~ Exp(1)`` independent of Y."""

    def cdf(y, x):
        return np.where(x < 0, 0.0, np.where(x >= y, 1.0, -np.expm1(-np.maximum(x, 0.0))))

    def cdf_left(y, x):
        return np.where(x <= 0, 0.0, np.where(x > y, 1.0, -np.expm1(-np.maximum(x, 0.0))))

    return KernelSpec(cdf, lambda y, rng: np.minimum(y, _exp_draw(rng, y.shape)), cdf_left,
                      label="min-independent", descriptor={"kernel": "min-independent"})


def mixture_square_kernel(p: float) -> KernelSpec:
    """``X = W Y + (1 - W) Y^2`` with ``W ~ Bernoulli(p)``."""

    def cdf(y, x):
        return p * (x >= y) + (1 - p) * (x >= y * y)

    def cdf_left(y, x):
        return p * (x > y) + (1 - p) * (x > y * y)

    def sampler(y, rng):
        w = rng.random(y.shape) < p
        return np.where(w, y, y * y)

    return KernelSpec(cdf, sampler, cdf_left, label=f"mixture-square(p={p:g})",
                      descriptor={"kernel": "mixture-square", "params": {"p": p}})


def integer_perturbed_kernel(p: float) -> KernelSpec:
    """Given ``Y = y``: ``X = y`` w.p. p, else ``2y`` (``0`` when y is an integer)."""

    def other(y):
        return np.where(np.floor(y) == y, 0.0, 2.0 * y)

    def cdf(y, x):
        return p * (x >= y) + (1 - p) * (x >= other(y))

    def cdf_left(y, x):
        return p * (x > y) + (1 - p) * (x > other(y))

    def sampler(y, rng):
        w = rng.random(y.shape) < p
        return np.where(w, y, other(y))

    return KernelSpec(cdf, sampler, cdf_left, label=f"integer-perturbed(p={p:g})", lattice=1.0,
                      descriptor={"kernel": "integer-perturbed", "params": {"p": p}})


def uniform_exp_kernel() -> KernelSpec:
    """``X = U e^Y``: ``K(y, [0, x]) = min(x e^{-y}, 1)``."""

    def cdf(y, x):
        # x * e^{-y} evaluated in log space so that huge scalings do not overflow
        with np.errstate(divide="ignore"):
            lx = np.log(np.maximum(x, 0.0))
        return np.where(x <= 0, 0.0, np.exp(np.minimum(lx - y, 0.0)))

    def sampler(y, rng):
        return rng.random(y.shape) * np.exp(y)

    return KernelSpec(cdf, sampler, label="uniform-exp", descriptor={"kernel": "uniform-exp"})


# -- registry entries ---------------------------------------------------------------

_CLOSED_BY_FAMILY = {"exp": "exponential", "pareto": "pareto", "uniform": "uniform",
                     "point_mass": "point_mass", "discrete": "discrete"}


def _closed_form_for(G: DistSpec) -> tuple[str, dict] | None:
    d = G.descriptor
    if not d or d.get("family") not in _CLOSED_BY_FAMILY:
        return None
    fam, params = d["family"], dict(d.get("params", {}))
    if fam == "exp":
        return "exponential", {"lam": params.get("rate", 1.0)}
    if fam == "pareto":
        if params.get("scale", 1.0) != 1.0:
            return None
        return "pareto", {"alpha": params["alpha"]}
    if fam == "uniform":
        if (params.get("low", 0.0), params.get("high", 1.0)) != (0.0, 1.0):
            return None
        return "uniform", {}
    if fam == "discrete":
        if params.get("defect"):
            return None
        return "discrete", {"masses": params["masses"], "locations": params.get("locations")}
    return fam, params


def _product(G: DistSpec, name: str, params: dict, description: str) -> ExampleModel:
    if G.lower < 0:
        raise DomainError("product kernel needs G supported on [0, inf]")
    ref = LimitMeasure.standard(G, _closed_form_for(G))
    return ExampleModel(name, product_kernel(G), distfn.pareto(1.0), Normalization.standard(),
                        ref, "converged", "cevm", params=params, description=description)


def _g_from_param(G) -> DistSpec:
    if G is None:
        return distfn.exponential(1.0)
    if isinstance(G, DistSpec):
        return G
    return distfn.from_json(G)


def _entry_product(G=None):
    G = _g_from_param(G)
    return _product(G, "product", {"G": G.descriptor},
                    "X = Y xi with xi ~ G independent of Y ~ Pareto(1); K(t, t.) = G exactly")


def _entry_exponential(lam: float = 1.0):
    return _product(distfn.exponential(lam), "exponential", {"lam": lam}, "product model, G = Exp(lam)")


def _entry_pareto(alpha: float = 2.0):
    return _product(distfn.pareto(alpha), "pareto", {"alpha": alpha}, "product model, G = Pareto(alpha)")


def _entry_uniform():
    return _product(distfn.uniform(0.0, 1.0), "uniform", {}, "product model, G = Uniform(0,1)")


def _entry_discrete(masses=(0.25, 0.25, 0.5), locations=None):
    G = distfn.discrete(list(masses), None if locations is None else list(locations))
    return _product(G, "discrete", {"masses": list(masses), "locations": locations},
                    "product model, G discrete")


def _entry_point_mass(c: float = 1.0):
    return _product(distfn.point_mass(c), "point-mass", {"c": c},
                    "product model, G = point mass at c (X = cY)")


def _entry_max_independent():
    ref = LimitMeasure.standard(distfn.point_mass(1.0), ("max-independent", {}))
    return ExampleModel("max-independent", max_independent_kernel(), distfn.pareto(1.0),
                        Normalization.standard(), ref, "converged", "cevm",
                        description="X = max(Y, Z), Z ~ Exp(1): G = point mass at 1")


def _entry_min_independent():
    ref = LimitMeasure.standard(distfn.point_mass(0.0), ("min-independent", {}))
    return ExampleModel("min-independent", min_independent_kernel(), distfn.pareto(1.0),
                        Normalization.standard(), ref, "converged", "asymptotic-independence",
                        expected_flags={"asymptotic_independence": True, "degenerate": True},
                        description="X = min(Y, Z), Z ~ Exp(1): G = point mass at 0 "
                                    "(asymptotic independence)")


def _entry_mixture_square(p: float = 0.5, normalization: str = "t"):
    K = mixture_square_kernel(p)
    cf = ("mixture-square", {"p": p, "normalization": normalization})
    if normalization == "t":
        G = distfn.discrete([p], [1.0])  # remaining 1 - p sits at +inf
        ref = LimitMeasure.standard(G, cf)
        return ExampleModel("mixture-square", K, distfn.pareto(1.0), Normalization.standard(),
                            ref, "defective", "defective",
                            params={"p": p, "normalization": normalization},
                            description="X = WY + (1-W)Y^2 under (t, t): defect 1 - p at infinity")
    if normalization == "t2":
        G = distfn.discrete([p, 1.0 - p], [0.0, 1.0])
        ref = LimitMeasure(G, 2.0, 0.0, 1.0, "general", cf)
        norm = Normalization(alpha=lambda t: t * t, rho=2.0, k=0.0, label="(t^2, t)")
        return ExampleModel("mixture-square", K, distfn.pareto(1.0), norm, ref, "converged", "cevm",
                            detect_alpha=lambda t: t * t, mc_t=(100.0, 10_000.0),
                            params={"p": p, "normalization": normalization},
                            description="X = WY + (1-W)Y^2 under (t^2, t): G = Bernoulli(1 - p)")
    raise DomainError("mixture-square normalization must be 't' or 't2'")


def _entry_integer_perturbed(p: float = 0.5):
    ref = LimitMeasure.standard(distfn.discrete([p, 1 - p], [1.0, 2.0]),
                                ("integer-perturbed", {"p": p}))
    return ExampleModel("integer-perturbed", integer_perturbed_kernel(p), distfn.pareto(1.0),
                        Normalization.standard(), ref, "nonconvergent", "nonconvergent-kernel",
                        params={"p": p},
                        description="X = y or 2y (0 at integer y): kernel limit depends on the "
                                    "t-subsequence")


def _entry_uniform_exp(variant: str = "pareto", scaling: str = "exponential", rho: float = 1.0):
    K = uniform_exp_kernel()
    if variant == "pareto":
        t_grid = 2.0 ** np.arange(-2, 10)  # e^t must stay finite
        if scaling == "exponential":
            return ExampleModel("uniform-exp", K, distfn.pareto(1.0), Normalization.standard(),
                                None, "converged", detect_alpha=lambda t: math.exp(t),
                                t_grid=t_grid, x_grid=np.linspace(0.05, 4.0, 80),
                                params={"variant": variant, "scaling": scaling},
                                description="X = U e^Y, Y ~ Pareto(1), alpha = e^t: G = Uniform(0,1)"
                                            " but alpha is not ERV")
        if scaling == "polynomial":
            return ExampleModel("uniform-exp", K, distfn.pareto(1.0), Normalization.standard(),
                                None, "defective", expected_flags={"degenerate": True},
                                detect_alpha=lambda t: t**rho, t_grid=t_grid,
                                params={"variant": variant, "scaling": scaling, "rho": rho},
                                description="X = U e^Y under alpha = t^rho: all mass escapes")
        raise DomainError("uniform-exp scaling must be 'exponential' or 'polynomial'")
    if variant == "exp":
        ref = LimitMeasure(distfn.uniform(0.0, 1.0), 1.0, 0.0, 0.0, "general_gamma",
                           ("uniform-exp", {}))
        norm = Normalization(a=lambda t: 1.0, b=lambda t: math.log(t), gamma=0.0, rho=1.0, k=0.0,
                             standard_y=False, label="(t, 0; 1, log t)")

        def b_star(y):
            return np.log(y)

        from .kernels import kernel_k_star
        return ExampleModel("uniform-exp", K, distfn.exponential(1.0), norm, ref, "converged",
                            "cevm", detect_kernel=kernel_k_star(K, b_star),
                            x_grid=np.linspace(0.05, 4.0, 80), params={"variant": variant},
                            description="X = U e^Y, Y ~ Exp(1): gamma = 0 CEVM with G = Uniform(0,1)")
    raise DomainError("uniform-exp variant must be 'pareto' or 'exp'")


def _entry_tail_kernel(G=None, rho: float = 0.5, k: float = 0.0):
    G = distfn.normal(0.0, 1.0) if G is None else _g_from_param(G)
    tk = TailKernel(G, rho, k)
    ref = LimitMeasure(G, rho, k, 1.0, "general")
    norm = Normalization(alpha=lambda t: t**rho, beta=lambda t: psi(t, rho, k), rho=rho, k=k,
                         label=f"(t^{rho:g}, psi)")
    return ExampleModel("tail_kernel", tk.as_kernel(), distfn.pareto(1.0), norm, ref, "converged",
                        "cevm", detect_alpha=norm.alpha, detect_beta=norm.beta,
                        x_grid=np.linspace(-4.0, 4.0, 81),
                        params={"G": G.descriptor, "rho": rho, "k": k},
                        description="generalized tail kernel kappa_G with Y ~ Pareto(1)")


REGISTRY: dict[str, Callable[..., ExampleModel]] = {
    "product": _entry_product,
    "exponential": _entry_exponential,
    "pareto": _entry_pareto,
    "uniform": _entry_uniform,
    "discrete": _entry_discrete,
    "point-mass": _entry_point_mass,
    "max-independent": _entry_max_independent,
    "min-independent": _entry_min_independent,
    "mixture-square": _entry_mixture_square,
    "integer-perturbed": _entry_integer_perturbed,
    "uniform-exp": _entry_uniform_exp,
    "tail_kernel": _entry_tail_kernel,
}


def example_registry(name: str, **params) -> ExampleModel:
    """Look up and instantiate a registry example."""
    if name not in REGISTRY:
        raise RegistryLookupError(f"unknown example {name!r}; registry: {sorted(REGISTRY)}")
    try:
        return REGISTRY[name](**params)
    except TypeError as exc:
        raise DomainError(f"bad parameters for example {name!r}: {exc}") from exc


def kernel_from_json(desc: dict) -> KernelSpec:
    """``{"kernel": name, "params": {...}}`` or ``{"kernel": "tail_kernel", "G", "rho", "k"}``."""
    if not isinstance(desc, dict) or "kernel" not in desc:
        raise DomainError("kernel descriptor needs a 'kernel' field")
    name = desc["kernel"]
    if name == "tail_kernel":
        if "G" not in desc:
            raise DomainError("tail_kernel descriptor: missing field 'G'")
        return TailKernel(distfn.from_json(desc["G"]), float(desc.get("rho", 1.0)),
                          float(desc.get("k", 0.0))).as_kernel()
    return example_registry(name, **desc.get("params", {})).kernel


# Default sweep used by the example suite: (registry name, params).
SUITE: list[tuple[str, dict]] = [
    ("product", {}),
    ("exponential", {"lam": 0.5}),
    ("exponential", {"lam": 2.0}),
    ("pareto", {"alpha": 0.5}),
    ("pareto", {"alpha": 1.0}),
    ("pareto", {"alpha": 2.0}),
    ("uniform", {}),
    ("discrete", {}),
    ("point-mass", {"c": 1.0}),
    ("max-independent", {}),
    ("min-independent", {}),
    ("mixture-square", {"p": 0.5, "normalization": "t"}),
    ("mixture-square", {"p": 0.5, "normalization": "t2"}),
    ("integer-perturbed", {"p": 0.5}),
    ("uniform-exp", {"variant": "pareto", "scaling": "exponential"}),
    ("uniform-exp", {"variant": "pareto", "scaling": "polynomial", "rho": 1.0}),
    ("uniform-exp", {"variant": "exp"}),
    ("tail_kernel", {"rho": 0.5, "k": 0.0}),
    ("tail_kernel", {"rho": -0.5, "k": 1.0}),
]
