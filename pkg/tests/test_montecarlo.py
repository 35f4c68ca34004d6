import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cevm import distfn, montecarlo as mc
from cevm.errors import InsufficientDataError, PreconditionError
from cevm.limits import LimitMeasure
from cevm.registry import example_registry, product_kernel

XS = np.array([0.5, 1.0, 2.0, 4.0])
YS = np.array([0.5, 1.0, 2.0])


@pytest.fixture(scope="module")
def exp_model() -> mc.ModelSpec:
    return example_registry("exponential").model_spec()


class TestCounting:
    @given(st.lists(st.tuples(st.floats(-50, 500), st.floats(0.1, 500)), min_size=1, max_size=60),
           st.floats(1.0, 20.0))
    def test_counts_match_brute_force(self, pairs, t):
        X = np.array([p[0] for p in pairs])
        Y = np.array([p[1] for p in pairs])
        cells, slab = mc._count(X, Y, t, XS, YS, mc.Normalization.standard())
        for j, y in enumerate(YS):
            assert slab[j] == np.sum(Y / t > y)
            for i, x in enumerate(XS):
                assert cells[i, j] == np.sum((X / t <= x) & (Y / t > y))

    def test_general_normalization(self):
        norm = mc.Normalization(a=lambda t: 1.0, b=np.log, alpha=lambda t: 2 * t,
                                beta=lambda t: 1.0, standard_y=False, gamma=0.0)
        X = np.array([1.0, 21.0, 41.0])
        Y = np.log(10.0) + np.array([0.0, 1.0, 2.0])
        Xn, Yn = norm.normalize(X, Y, 10.0)
        np.testing.assert_allclose(Xn, [0.0, 1.0, 2.0])
        np.testing.assert_allclose(Yn, [0.0, 1.0, 2.0])
        assert norm.marginal_limit(0.0) == pytest.approx(1.0)


class TestTailGrid:
    def test_zero_count_uses_analytic_error(self):
        g = mc.TailGrid(100.0, np.array([1.0]), np.array([1.0]), np.array([[0]]), 10**6,
                        analytic=np.array([[1e-6]]))
        assert np.isfinite(g.z_score[0, 0]) and abs(g.z_score[0, 0]) < 1

    def test_both_zero_gives_zero_z(self):
        g = mc.TailGrid(100.0, np.array([1.0]), np.array([1.0]), np.array([[0]]), 10**6,
                        analytic=np.array([[0.0]]))
        assert g.z_score[0, 0] == 0.0

    def test_impossible_count_is_nan(self):
        g = mc.TailGrid(100.0, np.array([1.0]), np.array([1.0]), np.array([[0]]), 10**6,
                        analytic=np.array([[100.0]]))
        assert g.z_score[0, 0] == pytest.approx(-np.inf) or np.isnan(g.z_score[0, 0])

    def test_binomial_standard_error(self):
        g = mc.TailGrid(10.0, np.array([1.0]), np.array([1.0]), np.array([[500]]), 10_000)
        assert g.empirical[0, 0] == pytest.approx(0.5)
        assert g.std_error[0, 0] == pytest.approx(10 * math.sqrt(0.05 * 0.95 / 10_000))

    def test_csv_round(self, tmp_path):
        g = mc.TailGrid(10.0, XS, YS, np.ones((4, 3), dtype=np.int64), 1000,
                        analytic=np.full((4, 3), 0.01))
        p = g.to_csv(tmp_path / "grid.csv")
        g.to_csv(p, append=True)
        lines = p.read_text().strip().splitlines()
        assert lines[0] == "t,x,y,empirical,std_error,analytic,z" and len(lines) == 1 + 24


class TestSampling:
    def test_deterministic_and_worker_independent(self, exp_model):
        a = mc.sample_pairs(exp_model, 200_000, seed=3, workers=1)
        b = mc.sample_pairs(exp_model, 200_000, seed=3, workers=4)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_prefix_stability(self, exp_model):
        # chunks are keyed by index, so a longer run extends a shorter one
        a = mc.sample_pairs(exp_model, 70_000, seed=1)
        b = mc.sample_pairs(exp_model, 140_000, seed=1)
        np.testing.assert_array_equal(a[1][:65536], b[1][:65536])

    def test_invalid_n(self, exp_model):
        with pytest.raises(PreconditionError):
            mc.sample_pairs(exp_model, 0, seed=0)

    def test_stream_counts_equal_in_memory_counts(self, exp_model):
        X, Y = mc.sample_pairs(exp_model, 150_000, seed=9)
        cells, slab = mc.stream_counts(exp_model, 150_000, 9, [10.0], XS, YS)
        c2, s2 = mc._count(X, Y, 10.0, XS, YS, exp_model.normalization)
        np.testing.assert_array_equal(cells[0], c2)
        np.testing.assert_array_equal(slab[0], s2)

    def test_small_sample_warning(self, exp_model):
        sample = mc.sample_pairs(exp_model, 1000, seed=0)
        with pytest.warns(mc.SampleSizeWarning):
            mc.empirical_tail(sample, 100.0, XS, YS)


class TestValidation:
    def test_accepts_declared_model(self, exp_model):
        info = mc.validate_model(exp_model)
        assert info["rho_hat"] == pytest.approx(1.0, abs=1e-9)

    def test_rejects_wrong_marginal(self):
        model = mc.ModelSpec(distfn.pareto(2.0), product_kernel(distfn.exponential(1.0)))
        with pytest.raises(PreconditionError, match="marginal"):
            mc.validate_model(model)

    def test_rejects_non_erv_alpha(self):
        norm = mc.Normalization(alpha=np.exp)
        model = mc.ModelSpec(distfn.pareto(1.0), product_kernel(distfn.exponential(1.0)), norm)
        with pytest.raises(PreconditionError, match="ERV"):
            mc.validate_model(model)


class TestVerify:
    def test_product_model_passes(self, exp_model):
        rep = mc.verify_convergence(exp_model, [10.0, 100.0], XS, YS, 2_000_000, seed=0)
        assert rep.passed and rep.verdict == "cevm"
        assert rep.frac_within >= 0.95 and rep.median_abs_z < 1.5
        assert rep.sup_deviation[1] < 0.05

    def test_wrong_reference_fails(self):
        ex = example_registry("exponential")
        wrong = mc.ModelSpec(ex.y_dist, ex.kernel, ex.normalization,
                             LimitMeasure.standard(distfn.exponential(2.0)))
        rep = mc.verify_convergence(wrong, [100.0], XS, YS, 2_000_000, seed=0)
        assert not rep.passed

    def test_report_json_and_determinism(self, exp_model, tmp_path):
        r1 = mc.verify_convergence(exp_model, [10.0], XS, YS, 300_000, seed=5, workers=1)
        r2 = mc.verify_convergence(exp_model, [10.0], XS, YS, 300_000, seed=5, workers=3)
        assert r1.numbers() == r2.numbers()
        out = r1.to_json(tmp_path / "r.json")
        assert json.loads((tmp_path / "r.json").read_text())["n"] == 300_000
        assert out["thresholds"]["z_cell"] == 3.0

    def test_requires_reference(self):
        model = mc.ModelSpec(distfn.pareto(1.0), product_kernel(distfn.exponential(1.0)))
        with pytest.raises(PreconditionError):
            mc.verify_convergence(model, [10.0], XS, YS, 1000, seed=0)


class TestConditional:
    def test_min_model_independence(self):
        model = example_registry("min-independent").model_spec()
        sample = mc.sample_pairs(model, 1_000_000, seed=0)
        est = mc.conditional_probability_estimate(sample, 100.0, [0.5], G=distfn.point_mass(0.0))
        assert est.asymptotic_independence and est.estimate[0] > 0.99
        assert est.reference[0] == pytest.approx(1.0)

    def test_too_few_exceedances(self):
        X = np.ones(100)
        Y = np.ones(100)
        with pytest.raises(InsufficientDataError) as info:
            mc.conditional_probability_estimate((X, Y), 10.0, [1.0])
        assert info.value.observed == 0

    def test_default_sample_size(self):
        assert mc.default_sample_size(10) == 1_000_000
        assert mc.default_sample_size(1e4) == 10_000_000
