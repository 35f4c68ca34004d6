import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sint

from cevm.errors import QuadratureError
from cevm.quadrature import integrate, quad


class TestIntegrate:
    @pytest.mark.parametrize("f, a, b, exact", [
        (np.exp, 0.0, 1.0, math.e - 1.0),
        (lambda x: 1.0 / (1.0 + x * x), -math.inf, math.inf, math.pi),
        (lambda x: np.exp(-x), 0.0, math.inf, 1.0),
        (lambda x: x**-2.0, 1.0, math.inf, 1.0),
        (lambda x: np.sqrt(x), 0.0, 4.0, 16.0 / 3.0),
    ])
    def test_known_integrals(self, f, a, b, exact):
        assert integrate(f, a, b, abstol=1e-12).value == pytest.approx(exact, rel=1e-10, abs=1e-12)

    def test_step_function_with_breakpoints_is_exact(self):
        f = lambda x: np.floor(x)  # noqa: E731
        res = integrate(f, 0.0, 3.5, breakpoints=[1.0, 2.0, 3.0])
        assert res.value == pytest.approx(0 + 1 + 2 + 1.5, abs=1e-13)

    def test_reversed_limits_flip_sign(self):
        assert quad(np.sin, 1.0, 0.0) == pytest.approx(-(1 - math.cos(1.0)), abs=1e-12)

    def test_divergent_integral_raises(self):
        with pytest.raises(QuadratureError):
            integrate(lambda x: 1.0 / x, 0.0, 1.0, abstol=1e-12, max_intervals=2000)

    @given(st.floats(1.0, 6.0), st.floats(0.1, 5.0))
    def test_matches_scipy_on_gamma_kernels(self, shape, rate):
        f = lambda x: x ** (shape - 1.0) * np.exp(-rate * x)  # noqa: E731
        ref = math.gamma(shape) / rate**shape
        got = integrate(f, 0.0, math.inf, abstol=1e-10, reltol=1e-10).value
        assert got == pytest.approx(ref, rel=1e-7)
        scipy_val = sint.quad(f, 0.0, math.inf, epsabs=1e-12, limit=200)[0]
        assert got == pytest.approx(scipy_val, rel=1e-6)
