import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ckytool import dual as ad

finite = st.floats(-2.0, 2.0, allow_nan=False)


def test_product_and_quotient_rules():
    x = 0.7
    d = ad.derivative(lambda z: ad.sin(z) * ad.exp(z) / (1 + z * z), x, 1.0)
    f = math.sin(x) * math.exp(x)
    df = (math.cos(x) + math.sin(x)) * math.exp(x)
    expected = df / (1 + x * x) - f * 2 * x / (1 + x * x) ** 2
    assert d == pytest.approx(expected, rel=1e-14)


@given(finite, st.integers(0, 6))
def test_power_rule(x, n):
    d = ad.derivative(lambda z: z**n, x, 1.0)
    assert d == pytest.approx(n * x ** (n - 1) if n else 0.0, abs=1e-12)


@given(st.floats(0.1, 3.0))
def test_elementary_functions_match_closed_forms(x):
    cases = [
        (ad.sqrt, 0.5 / math.sqrt(x)),
        (ad.log, 1 / x),
        (ad.cosh, math.sinh(x)),
        (ad.sinh, math.cosh(x)),
        (ad.cos, -math.sin(x)),
    ]
    for fn, expected in cases:
        assert ad.derivative(fn, x, 1.0) == pytest.approx(expected, rel=1e-13)


def test_second_derivative_by_nesting():
    f = lambda z: ad.sin(z) * z
    d2 = ad.derivative(lambda y: ad.derivative(f, y, 1.0), 0.3, 1.0)
    assert d2 == pytest.approx(2 * math.cos(0.3) - 0.3 * math.sin(0.3), rel=1e-14)


def test_no_perturbation_confusion():
    # d/dx [x * d/dy (x + y)] = 1; a shared tag would give 2.
    val = ad.derivative(lambda x: x * ad.derivative(lambda y: x + y, 1.0, 1.0), 1.0, 1.0)
    assert val == pytest.approx(1.0)


def test_array_batches_and_gradients():
    x = np.array([[0.1, 0.5], [0.2, -0.3]])  # components x batch
    grad = np.asarray(ad.derivatives(lambda z: z[0] * z[0] * z[1], x))
    assert grad.shape == (2, 2)
    np.testing.assert_allclose(grad[0], 2 * x[0] * x[1])
    np.testing.assert_allclose(grad[1], x[0] ** 2)


def test_einsum_and_stack_follow_product_rule():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    f = lambda s: ad.einsum("i,ij,j->", ad.stack([s, 2 * s]), A, ad.stack([s, s * s]))
    s0 = 0.4
    # f(s) = s*(s + 2 s²) + 2s*(3s + 4s²) = 7 s² + 10 s³
    assert ad.derivative(f, s0, 1.0) == pytest.approx(14 * s0 + 30 * s0 * s0, rel=1e-14)


def test_where_sign_carries_no_derivative():
    assert ad.derivative(lambda z: ad.where_sign(z) * z, -2.0, 1.0) == pytest.approx(-1.0)


def test_primal_and_scalar():
    d = ad.seed(np.float64(1.5), 1.0)
    assert ad.scalar(d * 2) == 3.0
    assert ad.is_finite(d)
