import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qdob.quadrature import GAUSS_WEIGHTS, KRONROD_WEIGHTS, NODES, adaptive_gk15, gk15_panels


def test_rule_weights():
    assert KRONROD_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
    assert GAUSS_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
    assert np.allclose(NODES, -NODES[::-1])


@pytest.mark.parametrize("deg", [0, 5, 13, 22])
def test_kronrod_exact_for_polynomials(deg):
    k, _ = gk15_panels(lambda x: x ** deg, np.array([-1.0]), np.array([1.0]))
    exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
    assert k[0] == pytest.approx(exact, abs=1e-14)


def test_gauss_part_exact_to_13():
    _, err = gk15_panels(lambda x: x ** 12 + x ** 3, np.array([0.0]), np.array([2.0]))
    assert err[0] < 1e-11


def test_adaptive_log_singularity():
    # int_0^1 ln x dx = -1 with an endpoint singularity
    res = adaptive_gk15(np.log, [0.0, 1.0], tol=1e-12)
    assert res.value == pytest.approx(-1.0, abs=1e-10)


def test_breakpoints_and_cumulative():
    res = adaptive_gk15(np.cos, [0.0, 0.5, 1.0, 2.0], tol=1e-13)
    cum = res.cumulative_at(np.array([0.5, 1.0, 2.0]))
    assert np.allclose(cum, np.sin([0.5, 1.0, 2.0]), atol=1e-13)
    assert np.all(np.diff(res.a) > 0)


def test_unconverged_panels_flagged():
    res = adaptive_gk15(lambda x: np.sign(x - 1 / 3), [0.0, 1.0], tol=1e-30, max_depth=4)
    assert res.n_unconverged >= 1


def test_nonfinite_integrand():
    with pytest.raises(FloatingPointError):
        adaptive_gk15(lambda x: np.full_like(x, np.nan), [0.0, 1.0])


@given(st.floats(-5, 5), st.floats(0.1, 5))
def test_exp_integral(a, w):
    res = adaptive_gk15(np.exp, [a, a + w], tol=1e-12)
    assert res.value == pytest.approx(math.exp(a + w) - math.exp(a), rel=1e-11, abs=1e-12)
