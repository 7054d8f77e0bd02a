import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from lcsmech import jet as J
from lcsmech.jet import Jet, JetDomainError


def _seed(x, y):
    return Jet.seed([x, y], order=2)


def _fd_hess(f, x, h=1e-4):
    x = np.asarray(x, dtype=float)
    d = len(x)
    out = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            e_i, e_j = np.eye(d)[i] * h, np.eye(d)[j] * h
            out[i, j] = (f(x + e_i + e_j) - f(x + e_i - e_j) - f(x - e_i + e_j) + f(x - e_i - e_j)) / (4 * h * h)
    return out


CASES = [
    (lambda a, b: a * b + a / b, lambda x, y: x * y + x / y),
    (lambda a, b: J.sin(a) * J.cos(b), lambda x, y: math.sin(x) * math.cos(y)),
    (lambda a, b: J.exp(a - b) + J.log(a * a + b * b), lambda x, y: math.exp(x - y) + math.log(x * x + y * y)),
    (lambda a, b: J.sqrt(a * a + b * b), lambda x, y: math.hypot(x, y)),
    (lambda a, b: J.atan2(b, a), lambda x, y: math.atan2(y, x)),
    (lambda a, b: a ** 3 - 2 ** b + a ** b, lambda x, y: x ** 3 - 2 ** y + x ** y),
    (lambda a, b: J.tan(a / 3) * b, lambda x, y: math.tan(x / 3) * y),
    (lambda a, b: (1 - a) / (b + 2), lambda x, y: (1 - x) / (y + 2)),
]


@pytest.mark.parametrize("fj, ff", CASES)
@pytest.mark.parametrize("pt", [(0.7, 1.3), (1.9, 0.4), (1.1, -0.8)])
def test_jets_against_finite_differences(fj, ff, pt):
    x, y = pt
    out = fj(*_seed(x, y))
    assert out.value == pytest.approx(ff(x, y), rel=1e-14)
    h = 1e-6
    fd = [(ff(x + h, y) - ff(x - h, y)) / (2 * h), (ff(x, y + h) - ff(x, y - h)) / (2 * h)]
    assert_allclose(out.grad, fd, rtol=1e-7, atol=1e-7)
    assert_allclose(out.hess, _fd_hess(lambda v: ff(*v), [x, y]), rtol=1e-4, atol=1e-4)
    assert_allclose(out.hess, out.hess.T, atol=0)


def test_order_one_has_no_hessian():
    a, b = Jet.seed([1.0, 2.0])
    assert (a * b).hess is None


def test_constant_arithmetic():
    a = Jet.variable(2.0, 0, 1, order=2)
    out = 3 - a * 2 + 1 / a
    assert out.value == pytest.approx(-0.5)
    assert out.grad[0] == pytest.approx(-2.25)
    assert out.hess[0, 0] == pytest.approx(0.25)


@pytest.mark.parametrize("op", [lambda a: J.log(a), lambda a: J.sqrt(a), lambda a: a ** 0.5])
def test_domain_errors(op):
    with pytest.raises(JetDomainError):
        op(Jet.variable(-1.0, 0, 1))


def test_integer_power_of_negative_base():
    a = Jet.variable(-2.0, 0, 1, order=2)
    out = a ** 3
    assert (out.value, out.grad[0], out.hess[0, 0]) == (-8.0, 12.0, -12.0)


def test_power_of_zero_base():
    out = Jet.variable(0.0, 0, 1, order=2) ** 2
    assert (out.value, out.grad[0], out.hess[0, 0]) == (0.0, 0.0, 2.0)


def test_float_passthrough():
    assert J.sin(0.5) == math.sin(0.5)
    assert J.atan2(1.0, -1.0) == math.atan2(1.0, -1.0)


@given(st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=100, deadline=None)
def test_chain_rule_composition(x, y):
    a, b = _seed(x, y)
    out = J.exp(J.sin(a) * b)
    s = math.sin(x)
    v = math.exp(s * y)
    assert_allclose(out.grad, [v * math.cos(x) * y, v * s], rtol=1e-12, atol=1e-12)
