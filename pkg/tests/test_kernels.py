import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from cevm import distfn, kernels
from cevm.erv import StdFunction, psi
from cevm.errors import DomainError, EvaluationError, PreconditionError
from cevm.registry import (
    DETECT_T, DETECT_X, integer_perturbed_kernel, min_independent_kernel,
    mixture_square_kernel, product_kernel, uniform_exp_kernel,
)


class TestInvertCdf:
    @pytest.mark.parametrize("ref", [stats.norm(1, 3), stats.expon(), stats.pareto(0.5)])
    def test_matches_ppf(self, ref):
        u = np.linspace(0.01, 0.99, 50)
        np.testing.assert_allclose(kernels.invert_cdf(ref.cdf, u), ref.ppf(u), rtol=1e-9)


class TestTailKernel:
    @given(st.floats(-1.5, 1.5), st.floats(-2, 2), st.floats(0.05, 20), st.floats(0.05, 20),
           st.floats(-5, 5))
    def test_scaling_identity(self, rho, k, u, y, x):
        tk = kernels.TailKernel(distfn.normal(), rho, k)
        res = kernels.scaling_identity_residual(tk.as_kernel(), rho, k, [u], [y], [x])
        assert res < 1e-12

    def test_eval_at_y_one_is_G(self):
        tk = kernels.TailKernel(distfn.exponential(1.0), 0.5, 1.0)
        for x in (0.1, 1.0, 3.0):
            assert kernels.tail_kernel_eval(tk, 1.0, x) == pytest.approx(1 - math.exp(-x))
        with pytest.raises(DomainError):
            kernels.tail_kernel_eval(tk, 0.0, 1.0)

    def test_from_kernel_accepts_tail_kernels_only(self):
        tk = kernels.TailKernel(distfn.normal(), 0.5, 1.0)
        back = kernels.TailKernel.from_kernel(tk.as_kernel(), 0.5, 1.0)
        xs = np.linspace(-3, 3, 13)
        np.testing.assert_allclose(back.G.cdf(xs), distfn.normal().cdf(xs), atol=1e-10)
        with pytest.raises(DomainError, match="scaling identity"):
            kernels.TailKernel.from_kernel(tk.as_kernel(), 1.0, 0.0)

    def test_sampler_matches_cdf(self, rng):
        tk = kernels.TailKernel(distfn.normal(), -0.5, 1.0)
        K = tk.as_kernel()
        y = np.full(20_000, 4.0)
        draws = K.sample(y, rng)
        assert stats.kstest(draws, lambda x: K.cdf(4.0, x)).pvalue > 1e-3

    def test_generic_sampler_inverts_cdf(self, rng):
        K = kernels.KernelSpec(cond_cdf=lambda y, x: stats.norm.cdf(x, loc=y))
        draws = K.sample(np.full(5000, 2.0), rng)
        assert stats.kstest(draws - 2.0, "norm").pvalue > 1e-3


class TestDetection:
    def test_product_kernel_recovers_G(self):
        G = distfn.exponential(1.0)
        rep = kernels.detect_standard_limit(product_kernel(G), DETECT_T, DETECT_X)
        assert rep.status == "converged" and not rep.degenerate
        np.testing.assert_allclose(rep.G_hat.cdf(DETECT_X), G.cdf(DETECT_X), atol=1e-9)

    def test_defect_of_mixture(self):
        rep = kernels.detect_standard_limit(mixture_square_kernel(0.5), DETECT_T, DETECT_X)
        assert rep.status == "defective"
        assert rep.defect_at_infinity == pytest.approx(0.5, abs=1e-9)
        assert rep.jumps.size == 1 and rep.jumps[0] == pytest.approx(1.0, abs=1e-6)

    def test_oscillation_of_integer_perturbation(self):
        rep = kernels.detect_standard_limit(integer_perturbed_kernel(0.5), DETECT_T, DETECT_X)
        assert rep.status == "nonconvergent"
        assert rep.oscillation_gap >= 0.25
        a, b = rep.sub_limits
        assert np.max(np.abs(a - b)) == pytest.approx(0.5)

    def test_min_model_is_asymptotically_independent(self):
        rep = kernels.detect_standard_limit(min_independent_kernel(), DETECT_T, DETECT_X)
        assert rep.asymptotic_independence and rep.degenerate

    def test_polynomial_scaling_of_uniform_exp_loses_all_mass(self):
        t = 2.0 ** np.arange(-2, 10)
        rep = kernels.detect_standard_limit(uniform_exp_kernel(), t, DETECT_X)
        assert rep.status == "defective" and rep.defect_at_infinity > 0.99 and rep.degenerate

    def test_exponential_scaling_of_uniform_exp(self):
        t = 2.0 ** np.arange(-2, 10)
        rep = kernels.detect_general_limit(uniform_exp_kernel(), np.exp, lambda s: 0.0, t,
                                           np.linspace(0.05, 4, 80))
        assert rep.status == "converged"
        xs = np.linspace(0.05, 4, 80)
        np.testing.assert_allclose(rep.G_hat.cdf(xs), np.minimum(xs, 1.0), atol=1e-9)

    def test_grid_validation(self):
        K = product_kernel(distfn.exponential(1.0))
        with pytest.raises(DomainError):
            kernels.detect_standard_limit(K, DETECT_T[:5], DETECT_X)
        with pytest.raises(DomainError):
            kernels.detect_standard_limit(K, np.linspace(1, 100, 20), DETECT_X)

    def test_nonfinite_kernel_reports_location(self):
        K = kernels.KernelSpec(cond_cdf=lambda y, x: np.where(x > 3 * y, np.nan, 0.5))
        with pytest.raises(EvaluationError, match="x="):
            kernels.detect_standard_limit(K, DETECT_T, DETECT_X)


class TestMovingArgument:
    def test_tail_kernel_limit(self):
        rho, k = 0.5, 1.0
        tk = kernels.TailKernel(distfn.normal(), rho, k)
        res = kernels.moving_argument_limit(
            tk.as_kernel(), lambda t: t**rho, lambda t: psi(t, rho, k), rho, k, 2.0,
            np.geomspace(1e3, 1e9, 13), 0.7, G=distfn.normal())
        assert res.deviation < 0.02
        assert abs(res.observed[-1] - res.expected) < abs(res.observed[0] - res.expected)

    def test_non_erv_normalization_rejected(self):
        tk = kernels.TailKernel(distfn.normal(), 0.5, 0.0)
        with pytest.raises(PreconditionError):
            kernels.moving_argument_limit(tk.as_kernel(), np.exp, lambda t: 0.0, 0.5, 0.0, 2.0,
                                          np.geomspace(1e1, 1e2, 13), 0.7)


class TestTransforms:
    def test_standardize_identity_is_noop(self):
        K = product_kernel(distfn.exponential(1.0))
        Kf = kernels.kernel_standardize_f(K, StdFunction.identity())
        x = np.linspace(0, 10, 21)
        np.testing.assert_allclose(Kf.cdf(3.0, x), K.cdf(3.0, x), atol=1e-15)

    def test_decreasing_standardization(self):
        # f(x) = -x maps [0, x] to [-x, 0]; K_f(y,[0,x]) = 1 - K(y, [-inf, -x))
        K = kernels.TailKernel(distfn.normal(), 1.0, 0.0).as_kernel()
        f = StdFunction(lambda x: -x, "nonincreasing", -1.0, 1.0, 0.0)
        Kf = kernels.kernel_standardize_f(K, f)
        assert float(Kf.cdf(1.0, 1.5)) == pytest.approx(1 - stats.norm.cdf(-1.5))

    def test_k_star_composes_b_star(self):
        K = uniform_exp_kernel()
        Ks = kernels.kernel_k_star(K, np.log)
        for y in (10.0, 1e4):
            for x in (0.5, 5.0, 50.0):
                assert float(Ks.cdf(y, x)) == pytest.approx(float(K.cdf(math.log(y), x)))
