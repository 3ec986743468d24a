"""Difference operators for the Caputo derivative and related special functions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import mpmath
import numpy as np
from scipy.integrate import quad

from .weights import OrderLike, as_order, grunwald_weights, l1_weights

ScalarField1D = Callable[[np.ndarray], np.ndarray]

ML_GUARD = 50.0
ML_TOL = 1e-15
_ML_MAX_TERMS = 4000


@dataclass(frozen=True)
class GridFunction:
    """Samples ``values[n] = y(origin + n * step)`` on a uniform grid."""

    origin: float
    step: float
    values: np.ndarray

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a non-empty 1-d sequence")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, f: ScalarField1D, origin: float, step: float, count: int) -> "GridFunction":
        """Sample ``f`` at ``count + 1`` nodes starting from ``origin``."""
        x = origin + step * np.arange(count + 1)
        return cls(origin, step, evaluate(f, x))

    @property
    def x(self) -> np.ndarray:
        return self.origin + self.step * np.arange(len(self.values))

    def __len__(self) -> int:
        return len(self.values)


def evaluate(f: Callable, x: np.ndarray) -> np.ndarray:
    """Evaluate a vectorized callable and broadcast constant results to ``x``."""
    x = np.asarray(x, dtype=float)
    return np.array(np.broadcast_to(np.asarray(f(x), dtype=float), x.shape))


def grunwald_apply(y: GridFunction, n: int, alpha: OrderLike) -> float:
    """Grünwald formula ``h**-alpha * sum_{k=0}^{n} w_k y[n-k]`` at node ``n``."""
    a = as_order(alpha).alpha
    if not 0 <= n < len(y):
        raise IndexError(f"node index {n} outside 0..{len(y) - 1}")
    w = grunwald_weights(a, max(n, 1)).w
    return float(np.dot(w[: n + 1], y.values[n::-1])) / y.step**a


def shifted_grunwald_apply(
    f: ScalarField1D,
    x: float,
    h: float,
    alpha: OrderLike,
    p: float = 0.0,
    origin: float = 0.0,
) -> float:
    """Shifted Grünwald formula for ``f - f(origin)`` sampled at ``x - (k - p) h``.

    Off-grid abscissae are evaluated directly, with no interpolation.
    """
    a = as_order(alpha).alpha
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    if p < 0:
        raise ValueError(f"shift p must be non-negative, got {p}")
    count = int(math.floor((x - origin) / h + 1e-9))
    if count < 0:
        raise ValueError(f"x={x} lies below the lower limit {origin}")
    w = grunwald_weights(a, max(count, 1)).w[: count + 1]
    k = np.arange(count + 1)
    samples = evaluate(f, x - (k - p) * h) - float(evaluate(f, np.array([origin]))[0])
    return float(np.dot(w, samples)) / h**a


def l1_apply(y: GridFunction, n: int, alpha: OrderLike) -> float:
    """L1 approximation ``h**-alpha * sum_{k=0}^{n-1} c_k y[n-k]``; needs ``y[0] == 0``."""
    a = as_order(alpha).alpha
    if y.values[0] != 0.0:
        raise ValueError("l1_apply requires y[0] == 0; subtract y(b) first")
    if not 1 <= n < len(y):
        raise IndexError(f"node index {n} outside 1..{len(y) - 1}")
    c = l1_weights(a, n).c
    return float(np.dot(c[:n], y.values[n:0:-1])) / y.step**a


def caputo_monomial(q: float, alpha: OrderLike, x):
    """Caputo derivative of ``x**q`` with lower limit 0: ``Gamma(q+1)/Gamma(q+1-alpha) x**(q-alpha)``."""
    a = as_order(alpha).alpha
    if q < 0:
        raise ValueError(f"exponent must be non-negative, got {q}")
    x = np.asarray(x, dtype=float)
    if q == 0:
        return np.zeros_like(x)[()]
    return (math.gamma(q + 1.0) / math.gamma(q + 1.0 - a) * x ** (q - a))[()]


def interpolate_offgrid(y_nm2: float, y_nm1: float, y_n: float, beta: float, order: int = 2) -> float:
    """Value at ``x_n - beta h`` from the last two (order 2) or three (order 3) nodes."""
    if not 0.0 <= beta <= 2.0:
        raise ValueError(f"beta must lie in [0, 2], got {beta}")
    if order == 2:
        return beta * y_nm1 + (1.0 - beta) * y_n
    if order == 3:
        return (
            0.5 * beta * (beta - 1.0) * y_nm2
            + beta * (2.0 - beta) * y_nm1
            + 0.5 * (beta - 1.0) * (beta - 2.0) * y_n
        )
    raise ValueError(f"order must be 2 or 3, got {order}")


@dataclass(frozen=True)
class MittagLefflerParams:
    alpha: float
    beta: float = 1.0
    z: float = 0.0

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")


def _log_term(n: int, alpha: float, beta: float, logz: float) -> float:
    return n * logz - math.lgamma(alpha * n + beta)


def _series_plan(alpha: float, beta: float, z: float) -> tuple[int, float] | None:
    """Index of the largest series term and its log10 size, or None if too long."""
    if z == 0:
        return 0, 0.0
    logz = math.log(abs(z))
    peak, peak_val = 0, _log_term(0, alpha, beta, logz)
    cutoff = math.log(ML_TOL)
    for n in range(1, _ML_MAX_TERMS):
        t = _log_term(n, alpha, beta, logz)
        if t > peak_val:
            peak, peak_val = n, t
        elif t < cutoff:
            return peak, peak_val / math.log(10.0)
    return None


def _ml_series(alpha: float, beta: float, z: float, peak: int, log10_peak: float) -> float:
    # cancellation among terms near the peak costs about log10_peak digits
    dps = 25 + max(0, int(math.ceil(log10_peak)))
    with mpmath.workdps(dps):
        za = mpmath.mpf(z)
        total = mpmath.mpf(0)
        power = mpmath.mpf(1)
        a, b = mpmath.mpf(alpha), mpmath.mpf(beta)
        n = 0
        while True:
            term = power * mpmath.rgamma(a * n + b)
            total += term
            if n > peak and abs(term) < ML_TOL * (1 + abs(total)):
                break
            n += 1
            power *= za
            if n > _ML_MAX_TERMS:
                raise ArithmeticError("Mittag-Leffler series did not converge")
        return float(total)


def _ml_negative_integral(alpha: float, s: float) -> float:
    """``E_alpha(-s)`` for ``0 < alpha < 1`` from its completely monotone representation."""
    c = math.cos(alpha * math.pi)
    inv = 1.0 / alpha

    def kernel(u: float) -> float:
        return math.exp(-((u * s) ** inv)) / (u * u + 2.0 * u * c + 1.0)

    head, _ = quad(kernel, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    tail, _ = quad(kernel, 1.0, math.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    return math.sin(alpha * math.pi) / (alpha * math.pi) * (head + tail)


def mittag_leffler(params: MittagLefflerParams | float, beta: float = 1.0, z: float | None = None) -> float:
    """Two-parameter Mittag-Leffler function ``sum_n z**n / Gamma(alpha n + beta)``.

    Accepts either a :class:`MittagLefflerParams` or ``(alpha, beta, z)``.
    The power series is summed in extended precision so that cancellation for
    negative ``z`` does not eat the result.  When the series would need more
    than a few thousand terms (small ``alpha``, large negative ``z``), the
    one-parameter function is integrated from its Laplace-type representation
    instead.  Arguments with ``|z| > 50`` are rejected.
    """
    if not isinstance(params, MittagLefflerParams):
        params = MittagLefflerParams(float(params), beta, 0.0 if z is None else float(z))
    return _mittag_leffler(params.alpha, params.beta, params.z)


@lru_cache(maxsize=4096)
def _mittag_leffler(a: float, b: float, zz: float) -> float:
    if not math.isfinite(zz) or abs(zz) > ML_GUARD:
        raise ValueError(f"z: |z| = {abs(zz):g} exceeds {ML_GUARD:g}; use smaller argument")
    plan = _series_plan(a, b, zz)
    if plan is not None:
        return _ml_series(a, b, zz, *plan)
    if zz < 0 and b == 1.0 and a < 1.0:
        return _ml_negative_integral(a, -zz)
    raise ValueError(f"z: series for alpha={a:g}, beta={b:g} at z={zz:g} is too long; use smaller argument")
