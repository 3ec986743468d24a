import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracgl.caputo import GridFunction, caputo_monomial, evaluate
from fracgl.convergence import EXAMPLE1_SMOOTHING, example1_rhs
from fracgl.ode import (
    OdeProblem,
    OdeScheme,
    SmoothingData,
    build_smoothed_rhs,
    desmooth,
    solve_ode,
    third_order_coefficients,
)
from fracgl.weights import grunwald_weights, l1_weights

ALL_SCHEMES = list(OdeScheme)


def eq22(alpha=2 / 3):
    g = math.gamma(3 + alpha)
    return OdeProblem(alpha, 1.0, lambda x: 2 * x ** (2 + alpha) + g * x**2, lambda x: 2 * x ** (2 + alpha))


def max_err(sol, exact):
    return float(np.max(np.abs(sol.values - exact(sol.x))))


@pytest.mark.parametrize(
    "scheme, N, expected",
    [
        (OdeScheme.FIRST_ORDER, 10, 0.111521),
        (OdeScheme.FIRST_ORDER, 20, 0.0560953),
        (OdeScheme.L1, 10, 0.0545347),
        (OdeScheme.L1, 20, 0.0223527),
        (OdeScheme.SECOND_ORDER_OFFGRID, 10, 0.005828),
        (OdeScheme.SECOND_ORDER_OFFGRID, 20, 0.00146501),
    ],
)
def test_eq22_errors(scheme, N, expected):
    p = eq22()
    assert max_err(solve_ode(p, scheme, N), p.exact) == pytest.approx(expected, rel=5e-3)


@pytest.mark.parametrize("scheme", ALL_SCHEMES)
def test_zero_forcing(scheme):
    sol = solve_ode(OdeProblem(0.4, 2.0, lambda x: 0.0), scheme, 12)
    assert np.all(sol.values == 0.0)
    assert sol.step == pytest.approx(2.0 / 12)


@pytest.mark.parametrize("scheme", ALL_SCHEMES)
def test_initial_values(scheme):
    sol = solve_ode(eq22(), scheme, 8)
    assert sol.values[0] == 0.0
    if scheme is OdeScheme.THIRD_ORDER:
        assert sol.values[1] == 0.0


@pytest.mark.parametrize("scheme", ALL_SCHEMES)
@given(scale=st.floats(-10, 10).filter(lambda s: abs(s) > 1e-3))
@settings(max_examples=10, deadline=None)
def test_linear_in_forcing(scheme, scale):
    base = eq22()
    scaled = OdeProblem(base.alpha, 1.0, lambda x: scale * base.f(x))
    np.testing.assert_allclose(
        solve_ode(scaled, scheme, 16).values, scale * solve_ode(base, scheme, 16).values, rtol=1e-12, atol=1e-14
    )


def residuals(problem, scheme, sol):
    """Re-substitute the grid solution into each scheme written in operator form."""
    a = problem.alpha.alpha
    h, y, x = sol.step, sol.values, sol.x
    N = len(y) - 1
    f = evaluate(problem.f, x)
    w = grunwald_weights(a, N).w
    out = []
    start = 2 if scheme is OdeScheme.THIRD_ORDER else 1
    b1, b2, b3 = third_order_coefficients(a)
    for n in range(start, N + 1):
        gl = np.dot(w[: n + 1], y[n::-1]) / h**a
        if scheme is OdeScheme.FIRST_ORDER:
            lhs, rhs = gl + y[n], f[n]
        elif scheme is OdeScheme.L1:
            c = l1_weights(a, N).c
            lhs, rhs = np.dot(c[:n], y[n:0:-1]) / h**a + y[n], f[n]
        elif scheme is OdeScheme.SECOND_ORDER_OFFGRID:
            lhs = gl + (a / 2) * y[n - 1] + (1 - a / 2) * y[n]
            rhs = problem.f(x[n] - a * h / 2)
        elif scheme is OdeScheme.SECOND_ORDER_AVERAGED:
            lhs = gl + (a / 2) * y[n - 1] + (1 - a / 2) * y[n]
            rhs = (a / 2) * f[n - 1] + (1 - a / 2) * f[n]
        else:
            lhs = gl
            rhs = b1 * (f[n - 2] - y[n - 2]) + b2 * (f[n - 1] - y[n - 1]) + b3 * (f[n] - y[n])
        out.append(abs(lhs - rhs) / (1 + abs(rhs) + abs(gl)))
    return np.array(out)


@pytest.mark.parametrize("scheme", ALL_SCHEMES)
@pytest.mark.parametrize("alpha", [0.2, 2 / 3, 0.9])
def test_recurrence_self_consistency(scheme, alpha):
    p = eq22(alpha)
    sol = solve_ode(p, scheme, 50)
    assert residuals(p, scheme, sol).max() < 1e-13


@pytest.mark.parametrize("scheme, N", [(OdeScheme.FIRST_ORDER, 1), (OdeScheme.THIRD_ORDER, 2), ("l1", 2.5)])
def test_too_few_steps(scheme, N):
    with pytest.raises(ValueError, match="N"):
        solve_ode(eq22(), scheme, N)


def test_unknown_scheme():
    with pytest.raises(ValueError):
        solve_ode(eq22(), "fourth-order", 10)


def test_problem_validation():
    with pytest.raises(ValueError, match="T"):
        OdeProblem(0.5, 0.0, np.sin)
    with pytest.raises(ValueError, match="alpha"):
        OdeProblem(1.2, 1.0, np.sin)


def test_orders_on_eq22():
    p = eq22()
    steps = [40, 80, 160]
    for scheme, lo, hi in [
        (OdeScheme.FIRST_ORDER, 0.95, 1.05),
        (OdeScheme.L1, 1.28, 1.40),
        (OdeScheme.SECOND_ORDER_OFFGRID, 1.98, 2.02),
        (OdeScheme.SECOND_ORDER_AVERAGED, 1.9, 2.1),
    ]:
        errs = [max_err(solve_ode(p, scheme, N), p.exact) for N in steps]
        orders = np.log2(np.array(errs[:-1]) / errs[1:])
        assert np.all((lo <= orders) & (orders <= hi)), (scheme, orders)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_example1_first_smoothing(alpha):
    F, poly = build_smoothed_rhs(example1_rhs(alpha), SmoothingData(2.0, 6.0), alpha)
    x = np.linspace(0, 1, 41)
    expected = 4 * x**3 + 6 * x ** (3 + alpha) + 24 * x ** (3 - alpha) / math.gamma(4 - alpha) + math.gamma(4 + alpha) * x**3
    np.testing.assert_allclose(F(x), expected, rtol=1e-12, atol=1e-12)
    assert poly == (0.0, 2.0, 3.0, 0.0)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_example1_cubic_smoothing(alpha):
    F, poly = build_smoothed_rhs(example1_rhs(alpha), EXAMPLE1_SMOOTHING, alpha)
    x = np.linspace(0, 1, 41)
    np.testing.assert_allclose(F(x), 6 * x ** (3 + alpha) + math.gamma(4 + alpha) * x**3, rtol=1e-12, atol=1e-12)
    assert poly == (0.0, 2.0, 3.0, 4.0)


def test_smoothing_is_consistent_with_caputo_oracle():
    # if y solves the original problem, y - poly solves the smoothed one
    a = 0.4
    L1, L2, L3 = 1.5, -2.0, 0.7
    f = lambda x: L1 * x + L2 * x**2 / 2 + L3 * x**3 / 6 + sum(  # noqa: E731
        c * caputo_monomial(q, a, x) for c, q in [(L1, 1), (L2 / 2, 2), (L3 / 6, 3)]
    )
    F, _ = build_smoothed_rhs(f, SmoothingData(L1, L2, L3), a)
    x = np.linspace(0, 2, 17)
    np.testing.assert_allclose(F(x), 0.0, atol=1e-12)


def test_zero_smoothing_is_identity():
    F, poly = build_smoothed_rhs(np.cos, SmoothingData(0.0, 0.0, 0.0), 0.5)
    x = np.linspace(0, 1, 11)
    np.testing.assert_array_equal(F(x), np.cos(x))
    z = GridFunction(0.0, 0.1, np.sin(x))
    np.testing.assert_array_equal(desmooth(z, poly).values, z.values)


def test_desmooth_recovers_example1():
    a = 0.25
    x = np.linspace(0, 1, 21)
    z = GridFunction(0.0, 0.05, 4 * x**3 + 6 * x ** (3 + a))
    y = desmooth(z, (0, 2, 3, 0))
    np.testing.assert_allclose(y.values, 2 * x + 3 * x**2 + 4 * x**3 + 6 * x ** (3 + a), rtol=1e-14)


@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
@settings(max_examples=30)
def test_desmooth_round_trip(coeffs):
    coeffs[0] = 0.0
    x = np.linspace(0, 1, 11)
    y = np.exp(x)
    poly = np.polynomial.polynomial.polyval(x, coeffs)
    z = GridFunction(0.0, 0.1, y - poly)
    np.testing.assert_allclose(desmooth(z, coeffs).values, y, rtol=1e-12, atol=1e-12)
