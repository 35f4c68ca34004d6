import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sint

from cevm import distfn, limits
from cevm.erv import StdFunction, psi
from cevm.errors import DomainError, PreconditionError, RegistryLookupError

XS = np.geomspace(0.05, 50.0, 20)
YS = np.geomspace(0.05, 20.0, 20)


def scipy_mu_general(G, rho, k, x, upper):
    """Independent oracle: plain scipy quad of the defining integral."""
    f = lambda u: float(G.cdf(u**rho * x + float(psi(u, rho, k))))  # noqa: E731
    return sint.quad(f, 0.0, upper, epsabs=1e-13, epsrel=1e-12, limit=500)[0]


CLOSED = [
    ("exponential", {"lam": 0.5}, distfn.exponential(0.5)),
    ("exponential", {"lam": 1.0}, distfn.exponential(1.0)),
    ("exponential", {"lam": 2.0}, distfn.exponential(2.0)),
    ("pareto", {"alpha": 0.5}, distfn.pareto(0.5)),
    ("pareto", {"alpha": 1.0}, distfn.pareto(1.0)),
    ("pareto", {"alpha": 2.0}, distfn.pareto(2.0)),
    ("discrete", {"masses": [0.25, 0.25, 0.5]}, distfn.discrete([0.25, 0.25, 0.5])),
    ("point_mass", {"c": 1.0}, distfn.point_mass(1.0)),
    ("uniform", {}, distfn.uniform(0.0, 1.0)),
]


class TestStandardRegime:
    @pytest.mark.parametrize("name, params, G", CLOSED, ids=lambda v: str(v))
    def test_closed_forms_match_both_integral_routes(self, name, params, G):
        for x in XS[::3]:
            for y in YS[::3]:
                cf = limits.closed_form_mu(name, params, x, y)
                assert limits.mu_standard(G, x, y, "quadrature") == pytest.approx(cf, abs=1e-9)
                assert limits.mu_general(G, 1.0, 0.0, x, y) == pytest.approx(cf, abs=1e-9)
                if G.partial_mean is not None:
                    assert limits.mu_standard(G, x, y) == pytest.approx(cf, abs=1e-9)

    def test_exponential_against_scipy(self):
        G = distfn.exponential(1.0)
        for x, y in [(0.3, 0.2), (2.0, 1.0), (10.0, 0.5)]:
            ref = scipy_mu_general(G, 1.0, 0.0, x, 1.0 / y)
            assert limits.mu_standard(G, x, y) == pytest.approx(ref, rel=1e-9)

    def test_edge_values(self):
        G = distfn.exponential(1.0)
        assert limits.mu_standard(G, -1.0, 1.0) == 0.0
        assert limits.mu_standard(G, 0.0, 2.0) == 0.0
        assert limits.mu_standard(distfn.point_mass(0.0), 0.0, 2.0) == 0.5
        with pytest.raises(DomainError):
            limits.mu_standard(G, 1.0, 0.0)
        with pytest.raises(DomainError):
            limits.mu_standard(distfn.normal(), 1.0, 1.0)

    @given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.1, 10))
    def test_homogeneity(self, x, y, c):
        # mu(cA) = mu(A)/c for the standard measure
        G = distfn.pareto(1.5)
        lhs = limits.mu_standard(G, c * x, c * y)
        assert lhs == pytest.approx(limits.mu_standard(G, x, y) / c, rel=1e-8, abs=1e-12)

    @given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.01, 100))
    def test_monotone_and_bounded(self, x1, x2, y):
        G = distfn.exponential(1.0)
        lo, hi = sorted((x1, x2))
        a, b = limits.mu_standard(G, lo, y), limits.mu_standard(G, hi, y)
        assert 0.0 <= a <= b + 1e-14 <= 1.0 / y + 1e-12

    def test_h_distribution_is_a_cdf(self):
        G = distfn.exponential(1.0)
        h = [limits.h_distribution(G, x) for x in np.geomspace(1e-3, 1e6, 30)]
        assert np.all(np.diff(h) >= 0) and h[-1] == pytest.approx(1.0, abs=1e-5)


class TestGeneralRegime:
    @pytest.mark.parametrize("G", [distfn.normal(), distfn.exponential(1.0), distfn.uniform(-1, 1)],
                             ids=["normal", "exp", "uniform"])
    @pytest.mark.parametrize("rho, k", [(0.5, 1.0), (1.0, 0.0), (-0.5, 1.0), (0.0, 1.0),
                                        (0.0, -2.0), (2.0, -1.0), (0.0, 0.0)])
    def test_three_routes_agree(self, G, rho, k):
        for x in (-1.5, -0.2, 0.3, 2.0):
            for y in (0.2, 1.0, 5.0):
                direct = limits.mu_general(G, rho, k, x, y)
                cases = limits.mu_general_cases(G, rho, k, x, y)
                ref = scipy_mu_general(G, rho, k, x, 1.0 / y)
                assert direct == pytest.approx(ref, abs=1e-8)
                assert cases == pytest.approx(direct, abs=1e-8)

    def test_boundary_point_x_equals_minus_k_over_rho(self):
        G = distfn.normal()
        val = limits.mu_general(G, 0.5, 1.0, -2.0, 2.0)
        assert val == pytest.approx(float(G.cdf(-2.0)) / 2.0)
        assert limits.mu_general_cases(G, 0.5, 1.0, -2.0, 2.0) == pytest.approx(val)

    def test_discrete_G_is_exact(self):
        G = distfn.discrete([0.5, 0.5], [-1.0, 1.0])
        direct = limits.mu_general(G, 0.5, 1.0, 0.5, 0.5)
        ref = scipy_mu_general(G, 0.5, 1.0, 0.5, 2.0)
        assert direct == pytest.approx(ref, abs=1e-8)

    def test_uniform_exp_closed_form(self):
        G = distfn.uniform(0.0, 1.0)
        for x in (0.1, 1.0, 3.0, 30.0):
            for y in (-1.0, 0.0, 0.5, 2.0):
                cf = limits.closed_form_mu("uniform-exp", None, x, y)
                assert limits.mu_gamma(G, 1.0, 0.0, 0.0, x, y) == pytest.approx(cf, abs=1e-10)
                assert limits.mu_gamma_cases(G, 1.0, 0.0, 0.0, x, y) == pytest.approx(cf, abs=1e-10)

    def test_gamma_domain_enforced(self):
        with pytest.raises(DomainError):
            limits.mu_gamma(distfn.uniform(), 1.0, 0.0, -1.0, 1.0, 1.5)

    @given(st.floats(-3, 3), st.floats(0.05, 20), st.floats(-1.5, 1.5), st.floats(-2, 2))
    def test_bounded_by_slab(self, x, y, rho, k):
        val = limits.mu_general(distfn.normal(), rho, k, x, y)
        assert -1e-12 <= val <= 1.0 / y + 1e-10


class TestClosedFormsAndMeasure:
    def test_unknown_closed_form(self):
        with pytest.raises(RegistryLookupError):
            limits.closed_form_mu("weibull", None, 1.0, 1.0)

    def test_mixture_square_normalizations(self):
        assert limits.closed_form_mu("mixture-square", {"p": 0.5}, 0.5, 1.0) == 0.0
        assert limits.closed_form_mu("mixture-square", {"p": 0.5, "normalization": "t2"},
                                     16.0, 4.0) == pytest.approx(0.5 / 4 + 0.5 * (0.25 - 0.25))
        with pytest.raises(DomainError):
            limits.closed_form_mu("mixture-square", {"p": 0.5, "normalization": "t3"}, 1, 1)

    def test_measure_json_roundtrip(self):
        m = limits.LimitMeasure(distfn.normal(), 0.5, 1.0, 1.0, "general")
        m2 = limits.limit_measure_from_json(json.loads(json.dumps(m.to_json())))
        assert m2.mu(0.3, 2.0) == m.mu(0.3, 2.0)
        with pytest.raises(DomainError):
            limits.LimitMeasure(distfn.normal(), regime="weird")

    def test_export_grid(self, tmp_path):
        m = limits.LimitMeasure.standard(distfn.exponential(1.0))
        csv_path, side = limits.export_grid(tmp_path / "g.csv", m, [1, 2, 3], [1, 2, 3])
        rows = csv_path.read_text().strip().splitlines()
        assert rows[0] == "x,y,mu,regime" and len(rows) == 10
        x, y, mu, _ = rows[1].split(",")
        assert float(mu) == m.mu(float(x), float(y))
        assert json.loads(side.read_text())["measure"]["regime"] == "standard"


class TestAxisAndNondegeneracy:
    def test_axis_masses_exponential(self):
        am = limits.axis_and_cone_masses(distfn.exponential(1.0), 2.0, 1.0)
        assert am.y_axis_mass == 0.0
        assert am.right_slab_mass == pytest.approx(0.5)
        assert am.x_axis_mass == pytest.approx(0.0)
        assert not am.mean_exceeds_one

    def test_nondegenerate_exponential(self):
        m = limits.LimitMeasure.standard(distfn.exponential(1.0))
        rep = limits.nondegeneracy_check(m.mu, m.slab, np.geomspace(1e-3, 1e3, 20), [0.5, 1, 2], 1e8)
        assert rep.verdict == "cevm"

    def test_point_mass_at_zero_is_degenerate(self):
        m = limits.LimitMeasure.standard(distfn.point_mass(0.0))
        rep = limits.nondegeneracy_check(m.mu, m.slab, np.geomspace(1e-3, 1e3, 20), [0.5, 1, 2], 1e8)
        assert rep.verdict == "degenerate"

    def test_defective_G(self):
        m = limits.LimitMeasure.standard(distfn.discrete([0.5], [1.0]))
        rep = limits.nondegeneracy_check(m.mu, m.slab, np.geomspace(1e-3, 1e3, 20), [0.5, 1, 2], 1e8)
        assert rep.verdict == "defective"
        np.testing.assert_allclose(rep.mass_at_plus_infinity, 0.5 / np.array([0.5, 1, 2]), rtol=1e-6)


class TestMoments:
    def test_uniform_lambda_one(self):
        rep = limits.moment_restriction_check(distfn.uniform(0.0, 1.0), 1.0)
        assert rep.satisfied and rep.value == pytest.approx(0.5, abs=1e-9)
        assert rep.paths_agree

    def test_exponential_lambda_zero_diverges(self):
        rep = limits.moment_restriction_check(distfn.exponential(1.0), 0.0)
        assert math.isinf(rep.value) and not rep.satisfied
        assert math.isinf(rep.case_moment) and rep.paths_agree

    @pytest.mark.parametrize("G, lam", [
        (distfn.exponential(2.0), 1.0), (distfn.exponential(3.0), 0.0),
        (distfn.uniform(0.0, 1.0), 0.5), (distfn.discrete([0.5, 0.5], [0.0, 1.0]), 0.0),
        (distfn.exponential(1.0), 2.0),
    ])
    def test_paths_agree_where_finite(self, G, lam):
        rep = limits.moment_restriction_check(G, lam)
        assert math.isfinite(rep.value)
        assert rep.case_value == pytest.approx(rep.value, rel=1e-6)

    def test_exp_lambda_zero_moment_value(self):
        # E e^xi for Exp(3) is 3/2
        rep = limits.moment_restriction_check(distfn.exponential(3.0), 0.0)
        assert rep.value == pytest.approx(1.5, rel=1e-7)
        assert not rep.satisfied

    def test_negative_lambda_with_mass_on_positive_axis(self):
        rep = limits.moment_restriction_check(distfn.uniform(0.0, 1.0), -1.0)
        assert math.isinf(rep.case_moment) and not rep.satisfied


class TestStandardization:
    @pytest.mark.parametrize("rho, k", [(0.5, 1.0), (1.0, 0.0), (-0.5, 1.0)])
    def test_consistency(self, rho, k):
        f = StdFunction(lambda x: x, "nondecreasing", 1.0, rho, k)
        for x, y in [(0.5, 1.0), (2.0, 0.5), (4.0, 3.0)]:
            lhs, rhs = limits.standardization_consistency(distfn.normal(), rho, k, f, x, y)
            assert lhs == pytest.approx(rhs, abs=1e-6)

    def test_requires_nondegenerate_pair(self):
        f = StdFunction(lambda x: x, "nondecreasing", 1.0, 0.0, 0.0)
        with pytest.raises(PreconditionError):
            limits.standardization_consistency(distfn.normal(), 0.0, 0.0, f, 1.0, 1.0)

    def test_flat_phi_rejected(self):
        f = StdFunction(lambda x: x, "nondecreasing", -2.0, 0.5, 1.0)
        with pytest.raises(DomainError):
            limits.standardized_G(distfn.normal(), f)
