import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contact_algebroid import DomainError, Jet, ScalarField, fd_crosscheck, parse_field
from contact_algebroid import calculus as ca
from contact_algebroid.calculus import constant_field


def test_half_norm_squared():
    f = parse_field("0.5*(w1^2 + w2^2)".replace("w", "y"), 0, 2, "lagrangian")
    b = f.bundle([], [3.0, 4.0], 0.0)
    assert b.value == 12.5
    np.testing.assert_array_equal(b.grad_w, [3.0, 4.0])
    np.testing.assert_array_equal(b.hess_ww, np.eye(2))


def test_w_times_s():
    f = parse_field("y1*s", 0, 1, "lagrangian")
    b = f.bundle([], [2.0], 5.0)
    assert b.d_s == 2.0
    np.testing.assert_array_equal(b.mixed_sw, [1.0])


def test_mixed_partial_against_central_difference():
    f = parse_field("sin(q1)*y1", 1, 1, "lagrangian")
    b = f.bundle([0.7], [2.0], 0.0)
    assert b.mixed_qw[0, 0] == pytest.approx(math.cos(0.7), abs=1e-15)
    h = 1e-5
    fd = (f.bundle([0.7 + h], [2.0]).grad_w[0] - f.bundle([0.7 - h], [2.0]).grad_w[0]) / (2 * h)
    assert abs(fd - b.mixed_qw[0, 0]) < 1e-8


def test_fd_polynomial(rng):
    f = parse_field("q1^3*y1 - 2*q2*y2^2 + s*y1*y2 + q1*q2*s^2", 2, 2, "lagrangian")
    for _ in range(20):
        x = rng.uniform(-1, 1, 5)
        assert fd_crosscheck(f, x[:2], x[2:4], x[4]) < 1e-8


def test_fd_constant_is_zero():
    assert fd_crosscheck(constant_field(3.0, 2, 1), [0.1, 0.2], [0.3], 0.4) == 0.0


def test_fd_exponential(rng):
    f = parse_field("exp(q1*y1) + exp(-s)*y1^2", 1, 1, "lagrangian")
    for _ in range(20):
        x = rng.uniform(-1, 1, 3)
        assert fd_crosscheck(f, x[:1], x[1:2], x[2]) < 1e-6


def test_jet_arithmetic_matches_closed_form():
    x = Jet.variable(0.3, 0, 2)
    y = Jet.variable(-1.2, 1, 2)
    z = ca.exp(x * y) + ca.divide(x, y) - ca.power(x, 3)
    # d/dx = y e^{xy} + 1/y - 3x^2, d/dy = x e^{xy} - x/y^2
    e = math.exp(0.3 * -1.2)
    assert z.grad[0] == pytest.approx(-1.2 * e + 1 / -1.2 - 3 * 0.09, rel=1e-14)
    assert z.grad[1] == pytest.approx(0.3 * e - 0.3 / 1.44, rel=1e-14)
    # d2/dxdy = e^{xy}(1 + xy) - 1/y^2
    assert z.hess[0, 1] == pytest.approx(e * (1 - 0.36) - 1 / 1.44, rel=1e-14)


@pytest.mark.parametrize(
    "call",
    [lambda: ca.log(Jet.variable(-1.0, 0, 1)), lambda: ca.sqrt(Jet.variable(0.0, 0, 1)), lambda: ca.divide(1.0, 0.0),
     lambda: ca.fabs(Jet.variable(0.0, 0, 1)), lambda: ca.power(-2.0, 0.5)],
)
def test_domain_errors(call):
    with pytest.raises(DomainError):
        call()


def test_base_field_reports_q_only():
    f = parse_field("q1^2*q2", 2)
    b = f.bundle([2.0, 3.0])
    assert b.value == 12.0
    np.testing.assert_array_equal(b.grad_q, [12.0, 4.0])
    np.testing.assert_array_equal(b.hess_qq, [[6.0, 4.0], [4.0, 0.0]])
    assert b.grad_w.size == 0


def test_arity_mismatch():
    f = parse_field("q1*y1", 1, 1, "lagrangian")
    with pytest.raises(ValueError):
        f([1.0, 2.0], [1.0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4))
def test_hessian_symmetric(x):
    f = parse_field("sin(q1*y2)*exp(y1) + q1^2*s/(2+cos(s*y2))", 1, 2, "lagrangian")
    h = f.bundle(x[:1], x[1:3], x[3]).hess
    np.testing.assert_array_equal(h, h.T)


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_jet_value_matches_plain_evaluation(a, b):
    f = parse_field("tan(0.3*q1) - sqrt(1 + q2^2) + abs(q1 - q2 + 10)", 2)
    assert f.bundle([a, b]).value == f([a, b])


def test_custom_scalar_field_body():
    f = ScalarField(lambda q, w, s: q[0] * w[0] + ca.sin(s), 1, 1)
    b = f.bundle([2.0], [3.0], 0.0)
    assert b.value == 6.0 and b.d_s == 1.0
