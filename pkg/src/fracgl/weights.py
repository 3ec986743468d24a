"""Grünwald-Letnikov and L1 weights, plus closed-form weight bounds.

All tables are immutable numpy arrays; requesting a longer table builds a
new one.  Tables are memoized per ``(alpha, count)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Union

import numpy as np

MAX_COUNT = 10**7


@dataclass(frozen=True)
class FractionalOrder:
    """Order ``alpha`` of a Caputo derivative, restricted to ``0 < alpha < 1``."""

    alpha: float

    def __post_init__(self) -> None:
        a = float(self.alpha)
        if not math.isfinite(a) or not 0.0 < a < 1.0:
            raise ValueError(f"alpha must satisfy 0 < alpha < 1, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @classmethod
    def parse(cls, text: str) -> "FractionalOrder":
        """Parse ``"0.5"`` or a fraction such as ``"2/3"``."""
        try:
            value = float(Fraction(text.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"alpha: cannot parse {text!r}") from exc
        return cls(value)

    def __float__(self) -> float:
        return self.alpha


OrderLike = Union[FractionalOrder, float]


def as_order(alpha: OrderLike) -> FractionalOrder:
    if isinstance(alpha, FractionalOrder):
        return alpha
    return FractionalOrder(alpha)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class WeightTable:
    """Grünwald weights ``w[n] = (-1)**n * binom(alpha, n)`` for ``n = 0..len-1``."""

    alpha: FractionalOrder
    w: np.ndarray

    def __len__(self) -> int:
        return len(self.w)

    def __getitem__(self, n):
        return self.w[n]


@dataclass(frozen=True)
class L1WeightTable:
    """Weights ``c[k]`` of the L1 quadrature for the Caputo derivative."""

    alpha: FractionalOrder
    c: np.ndarray

    def __len__(self) -> int:
        return len(self.c)

    def __getitem__(self, k):
        return self.c[k]


class OmegaCoefficients(NamedTuple):
    """Leading Taylor coefficients of ``((1 - exp(-z)) / z)**alpha * exp(p z)``."""

    c0: float
    c1: float
    c2: float


def _check_count(count: int) -> int:
    if int(count) != count or count < 1:
        raise ValueError(f"count must be a positive integer, got {count!r}")
    if count > MAX_COUNT:
        raise ValueError(f"count must not exceed {MAX_COUNT}, got {count}")
    return int(count)


@lru_cache(maxsize=64)
def _grunwald(alpha: float, count: int) -> np.ndarray:
    n = np.arange(1, count + 1, dtype=float)
    w = np.empty(count + 1)
    ratios = 1.0 - (alpha + 1.0) / n
    ratios[0] = -alpha  # exact, avoids 1 - (alpha + 1) rounding
    w[0] = 1.0
    # cumprod applies the ratios one after another, i.e. the plain recursion
    w[1:] = np.cumprod(ratios)
    return _frozen(w)


def grunwald_weights(alpha: OrderLike, count: int) -> WeightTable:
    """Return ``w[0..count]`` from ``w[n] = (1 - (alpha+1)/n) w[n-1]``, ``w[0] = 1``.

    >>> grunwald_weights(0.5, 2).w.tolist()
    [1.0, -0.5, -0.125]
    """
    order = as_order(alpha)
    return WeightTable(order, _grunwald(order.alpha, _check_count(count)))


@lru_cache(maxsize=64)
def _l1(alpha: float, count: int) -> np.ndarray:
    k = np.arange(count + 1, dtype=float)
    s = 1.0 - alpha
    c = np.empty(count + 1)
    c[0] = 1.0
    c[1:] = (k[1:] + 1.0) ** s - 2.0 * k[1:] ** s + (k[1:] - 1.0) ** s
    return _frozen(c / math.gamma(2.0 - alpha))


def l1_weights(alpha: OrderLike, count: int) -> L1WeightTable:
    """Return the L1 weights ``c[0..count]``; ``c[0] = 1/Gamma(2-alpha)``."""
    order = as_order(alpha)
    return L1WeightTable(order, _l1(order.alpha, _check_count(count)))


_ZETA2_TAIL = math.pi**2 / 6.0 - 1.25


def weight_bounds(alpha: OrderLike, n: int) -> tuple[float, float]:
    """Lower and upper bounds that bracket ``|w_n|`` strictly, for ``n >= 3``."""
    a = as_order(alpha).alpha
    if n < 3:
        raise ValueError(f"n must be at least 3, got {n}")
    lower = math.exp(-((a + 1.0) ** 2) * _ZETA2_TAIL) * a * (1.0 - a) * 2.0**a / n ** (a + 1.0)
    upper = a * 2.0 ** (a + 1.0) / (n + 1.0) ** (a + 1.0)
    return lower, upper


def tail_bounds(alpha: OrderLike, n: int) -> tuple[float, float, float]:
    """Bounds on ``sum_{k>=n} |w_k|`` together with its exact value.

    The exact tail uses ``sum_{k>=1} w_k = -1``, so it equals
    ``1 - sum_{k=1}^{n-1} |w_k|``.
    """
    a = as_order(alpha).alpha
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if n == 1:
        exact = 1.0
    else:
        w = grunwald_weights(a, n - 1).w
        exact = 1.0 + math.fsum(w[1:])
    r = (2.0 / n) ** a
    return (1.0 - a) / 5.0 * r, exact, 2.0 * r


def omega_coefficients(alpha: OrderLike, p: float) -> OmegaCoefficients:
    a = as_order(alpha).alpha
    if p < 0:
        raise ValueError(f"shift p must be non-negative, got {p}")
    c1 = p - a / 2.0
    return OmegaCoefficients(1.0, c1, a / 24.0 + 0.5 * c1 * c1)
