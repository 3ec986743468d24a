"""Recurrence solvers for ``y^(alpha)(x) + y(x) = f(x)``, ``y(0) = 0``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .caputo import GridFunction, ScalarField1D, evaluate
from .weights import FractionalOrder, OrderLike, as_order, grunwald_weights, l1_weights


class OdeScheme(str, Enum):
    FIRST_ORDER = "first-order"
    L1 = "l1"
    SECOND_ORDER_OFFGRID = "second-order-offgrid"
    SECOND_ORDER_AVERAGED = "second-order-averaged"
    THIRD_ORDER = "third-order"


@dataclass(frozen=True)
class OdeProblem:
    """Right-hand side ``f`` on ``[0, T]``; ``exact`` is used only for error measurement."""

    alpha: FractionalOrder
    T: float
    f: ScalarField1D
    exact: Optional[ScalarField1D] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", as_order(self.alpha))
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")


@dataclass(frozen=True)
class SmoothingData:
    """Derivatives ``y'(0)``, ``y''(0)`` and optionally ``y'''(0)`` of the solution."""

    L1: float
    L2: float
    L3: Optional[float] = None


def third_order_coefficients(alpha: float) -> tuple[float, float, float]:
    """Weights of ``y^(alpha)`` at nodes ``n-2, n-1, n`` in the third-order Grünwald identity."""
    a = alpha
    return (a * a / 8 - 5 * a / 24, 11 * a / 12 - a * a / 4, 1 - 17 * a / 24 + a * a / 8)


def solve_ode(problem: OdeProblem, scheme: OdeScheme | str, N: int) -> GridFunction:
    """Run one of the five recurrences on ``N`` uniform steps of ``[0, T]``.

    Each step solves its scalar update exactly; the history sum is a direct
    convolution so the total cost is ``O(N**2)``.
    """
    scheme = OdeScheme(scheme)
    min_n = 3 if scheme is OdeScheme.THIRD_ORDER else 2
    if int(N) != N or N < min_n:
        raise ValueError(f"N must be an integer >= {min_n} for {scheme.value}, got {N}")
    N = int(N)
    a = problem.alpha.alpha
    h = problem.T / N
    ha = h**a
    x = h * np.arange(N + 1)
    f = evaluate(problem.f, x)
    w = grunwald_weights(a, N).w
    y = np.zeros(N + 1)

    if scheme is OdeScheme.FIRST_ORDER:
        for n in range(1, N + 1):
            y[n] = (ha * f[n] - np.dot(w[1 : n + 1], y[n - 1 :: -1])) / (1.0 + ha)

    elif scheme is OdeScheme.L1:
        c = l1_weights(a, N).c
        for n in range(1, N + 1):
            y[n] = (ha * f[n] - np.dot(c[1 : n + 1], y[n - 1 :: -1])) / (ha + c[0])

    elif scheme in (OdeScheme.SECOND_ORDER_OFFGRID, OdeScheme.SECOND_ORDER_AVERAGED):
        if scheme is OdeScheme.SECOND_ORDER_OFFGRID:
            forcing = evaluate(problem.f, x[1:] - 0.5 * a * h)
        else:
            forcing = (1 - a / 2) * f[1:] + (a / 2) * f[:-1]
        denom = 1.0 + (1 - a / 2) * ha
        lag = (a / 2) * (2.0 - ha)
        for n in range(1, N + 1):
            hist = np.dot(w[2 : n + 1], y[n - 2 :: -1]) if n >= 2 else 0.0
            y[n] = (ha * forcing[n - 1] + lag * y[n - 1] - hist) / denom

    else:
        b1, b2, b3 = third_order_coefficients(a)
        gamma = 1.0 + ha * b3
        for n in range(2, N + 1):
            y[n] = (
                ha * b2 * (f[n - 1] - y[n - 1])
                + ha * b1 * (f[n - 2] - y[n - 2])
                + ha * b3 * f[n]
                - np.dot(w[1 : n + 1], y[n - 1 :: -1])
            ) / gamma

    return GridFunction(0.0, h, y)


def build_smoothed_rhs(
    f: ScalarField1D, data: SmoothingData, alpha: OrderLike
) -> tuple[Callable[[np.ndarray], np.ndarray], tuple[float, float, float, float]]:
    """Right-hand side for ``z = y - L1 x - L2 x**2/2 [- L3 x**3/6]``.

    Returns the new right-hand side and the coefficients ``(0, L1, L2/2, L3/6)``
    of the subtracted polynomial, for use with :func:`desmooth`.
    """
    a = as_order(alpha).alpha
    L1, L2 = float(data.L1), float(data.L2)
    L3 = 0.0 if data.L3 is None else float(data.L3)
    g2, g3, g4 = math.gamma(2 - a), math.gamma(3 - a), math.gamma(4 - a)

    def F(x):
        x = np.asarray(x, dtype=float)
        out = evaluate(f, x) - L1 * x - 0.5 * L2 * x**2 - L1 * x ** (1 - a) / g2 - L2 * x ** (2 - a) / g3
        if L3:
            out = out - L3 / 6 * x**3 - L3 * x ** (3 - a) / g4
        return out

    return F, (0.0, L1, L2 / 2, L3 / 6)


def desmooth(z: GridFunction, subtracted_polynomial) -> GridFunction:
    """Add the subtracted Taylor polynomial back onto a transformed solution."""
    x = z.x
    poly = np.polynomial.polynomial.polyval(x, np.asarray(subtracted_polynomial, dtype=float))
    return GridFunction(z.origin, z.step, z.values + poly)
