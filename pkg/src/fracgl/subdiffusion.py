"""Implicit second-order schemes for the time-fractional sub-diffusion equation.

The solver works on the homogeneous problem

    d^alpha v / dt^alpha = v_xx + H(x, t),   v(0,t) = v(1,t) = 0,  v(x,0) = 0

on ``[0, 1] x [0, T]``.  Each time level solves ``P V_m = alpha Q V_{m-1} +
sum_{k=2}^{m-1} g_k V_{m-k} + tau**alpha S_m`` with ``P = I + (1 - alpha/2) eta A``,
``Q = I - (eta/2) A`` and ``g_k = -w_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterator, NamedTuple, Optional

import numpy as np
from scipy.integrate import simpson

from .caputo import ML_GUARD, ScalarField1D, evaluate, mittag_leffler
from .weights import FractionalOrder, OrderLike, as_order, grunwald_weights

Field2D = Callable[[np.ndarray, np.ndarray], np.ndarray]

MAX_HISTORY = 10**8


class Variant(str, Enum):
    AVERAGED = "averaged"
    OFFGRID = "offgrid"


@dataclass(frozen=True)
class SubdiffusionProblem:
    alpha: FractionalOrder
    T: float
    source: Field2D
    exact: Optional[Field2D] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", as_order(self.alpha))
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")


def _eval2(f: Field2D, x: np.ndarray, t) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.array(np.broadcast_to(np.asarray(f(x, t), dtype=float), x.shape))


class Homogenization(NamedTuple):
    forward: Callable
    inverse: Callable


def homogenize(
    u0: ScalarField1D, g_left: ScalarField1D, g_right: ScalarField1D, tol: float = 1e-12
) -> Homogenization:
    """Transform pair removing initial data ``u0`` and boundary data ``g_left``, ``g_right``.

    ``forward(x, t, u)`` gives ``u - u0(x) - (1-x)(g_left(t) - g_left(0)) - x (g_right(t) - g_right(0))``
    and ``inverse`` adds the same lift back.
    """
    gl0 = float(evaluate(g_left, np.zeros(1))[0])
    gr0 = float(evaluate(g_right, np.zeros(1))[0])
    u00, u01 = evaluate(u0, np.array([0.0, 1.0]))
    if abs(u00 - gl0) > tol:
        raise ValueError(f"g_left: u0(0) = {u00} but g_left(0) = {gl0}")
    if abs(u01 - gr0) > tol:
        raise ValueError(f"g_right: u0(1) = {u01} but g_right(0) = {gr0}")

    def lift(x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        return (
            evaluate(u0, x)
            + (1.0 - x) * (evaluate(g_left, t) - gl0)
            + x * (evaluate(g_right, t) - gr0)
        )

    def forward(x, t, u):
        return u - lift(x, t)

    def inverse(x, t, ubar):
        return ubar + lift(x, t)

    return Homogenization(forward, inverse)


def build_H(
    G: Field2D,
    L1x: ScalarField1D,
    L2x: ScalarField1D,
    L1xx: ScalarField1D,
    L2xx: ScalarField1D,
    alpha: OrderLike,
) -> Field2D:
    """Source of the problem for ``v = u - L1(x) t - L2(x) t**2 / 2``."""
    a = as_order(alpha).alpha
    g2, g3 = math.gamma(2 - a), math.gamma(3 - a)

    def H(x, t):
        x = np.asarray(x, dtype=float)
        return (
            _eval2(G, x, t)
            - evaluate(L1x, x) * t ** (1 - a) / g2
            - evaluate(L2x, x) * t ** (2 - a) / g3
            + evaluate(L1xx, x) * t
            + 0.5 * evaluate(L2xx, x) * t**2
        )

    return H


@dataclass(frozen=True)
class SchemeMatrices:
    """Constant-coefficient tridiagonal ``P`` and ``Q`` of dimension ``N - 1``."""

    N: int
    alpha: float
    eta: float
    p_diag: float
    p_off: float
    q_diag: float
    q_off: float

    @property
    def size(self) -> int:
        return self.N - 1

    def apply_P(self, v: np.ndarray) -> np.ndarray:
        return _tridiag_mul(self.p_diag, self.p_off, v)

    def apply_Q(self, v: np.ndarray) -> np.ndarray:
        return _tridiag_mul(self.q_diag, self.q_off, v)

    def dense_P(self) -> np.ndarray:
        return _dense(self.p_diag, self.p_off, self.size)

    def dense_Q(self) -> np.ndarray:
        return _dense(self.q_diag, self.q_off, self.size)


def _tridiag_mul(diag: float, off: float, v: np.ndarray) -> np.ndarray:
    out = diag * v
    out[1:] += off * v[:-1]
    out[:-1] += off * v[1:]
    return out


def _dense(diag: float, off: float, n: int) -> np.ndarray:
    return diag * np.eye(n) + off * (np.eye(n, k=1) + np.eye(n, k=-1))


def assemble_matrices(alpha: OrderLike, tau: float, h: float, N: int) -> SchemeMatrices:
    a = as_order(alpha).alpha
    if N < 2:
        raise ValueError(f"N must be at least 2, got {N}")
    if not (tau > 0 and h > 0):
        raise ValueError("tau and h must be positive")
    eta = tau**a / h**2
    c = (1 - a / 2) * eta
    return SchemeMatrices(int(N), a, eta, 1 + 2 * c, -c, 1 - eta, eta / 2)


def eigenvalues_A(N: int) -> np.ndarray:
    """Eigenvalues ``2 - 2 cos(k pi / N)``, ``k = 1..N-1``, of the (-1, 2, -1) matrix."""
    if N < 2:
        raise ValueError(f"N must be at least 2, got {N}")
    k = np.arange(1, N)
    return 2.0 - 2.0 * np.cos(k * np.pi / N)


def spectral_radius_R(alpha: OrderLike, eta: float, N: int) -> float:
    """Spectral radius of ``P^{-1} Q``; below one for every ``eta > 0``."""
    a = as_order(alpha).alpha
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    lam = eigenvalues_A(N)
    return float(np.max(np.abs((1 - eta * lam / 2) / (1 + (1 - a / 2) * eta * lam))))


class TridiagonalFactorization:
    """Thomas elimination for a symmetric constant tridiagonal matrix, factored once."""

    def __init__(self, diag: float, off: float, n: int):
        if n < 1:
            raise ValueError("matrix dimension must be positive")
        self.n = n
        self.off = off
        d = np.empty(n)
        d[0] = diag
        for i in range(1, n):
            d[i] = diag - off * off / d[i - 1]
        self.d = d
        self.lower = off / d[:-1]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape != (self.n,):
            raise ValueError(f"rhs has shape {rhs.shape}, expected ({self.n},)")
        y = rhs.tolist()
        lower = self.lower.tolist()
        for i in range(1, self.n):
            y[i] -= lower[i - 1] * y[i - 1]
        d = self.d.tolist()
        off = self.off
        x = [0.0] * self.n
        x[-1] = y[-1] / d[-1]
        for i in range(self.n - 2, -1, -1):
            x[i] = (y[i] - off * x[i + 1]) / d[i]
        return np.array(x)


def tridiag_solve(mat: SchemeMatrices, rhs: np.ndarray) -> np.ndarray:
    """Solve ``P x = rhs``."""
    return TridiagonalFactorization(mat.p_diag, mat.p_off, mat.size).solve(rhs)


@dataclass(frozen=True)
class Field1D:
    m: int
    t: float
    values: np.ndarray


@dataclass(frozen=True)
class SubdiffusionSolution:
    """Interior values ``values[m, n-1] ~ v(x_n, t_m)``; boundary nodes are zero."""

    x: np.ndarray
    t: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[Field1D]:
        for m in range(len(self.t)):
            yield self.field(m)

    def field(self, m: int) -> Field1D:
        return Field1D(m, float(self.t[m]), self.values[m])

    def final(self) -> Field1D:
        return self.field(len(self.t) - 1)


def _source_vector(H: Field2D, x: np.ndarray, tm: float, tau: float, a: float, variant: Variant) -> np.ndarray:
    if variant is Variant.OFFGRID:
        return _eval2(H, x, tm - 0.5 * a * tau)
    return 0.5 * a * _eval2(H, x, tm - tau) + (1 - 0.5 * a) * _eval2(H, x, tm)


def solve_subdiffusion(
    problem: SubdiffusionProblem, variant: Variant | str, M: int, N: int
) -> SubdiffusionSolution:
    """March ``M`` time steps on ``N`` space intervals with the averaged or off-grid source."""
    variant = Variant(variant)
    if int(M) != M or M < 1:
        raise ValueError(f"M must be a positive integer, got {M}")
    if int(N) != N or N < 2:
        raise ValueError(f"N must be an integer >= 2, got {N}")
    M, N = int(M), int(N)
    if (M + 1) * (N - 1) > MAX_HISTORY:
        raise ValueError(f"M*N too large for in-memory history ({M}x{N})")
    a = problem.alpha.alpha
    h = 1.0 / N
    tau = problem.T / M
    mats = assemble_matrices(a, tau, h, N)
    solver = TridiagonalFactorization(mats.p_diag, mats.p_off, mats.size)
    g = -grunwald_weights(a, max(M, 1)).w
    x = h * np.arange(1, N)
    t = tau * np.arange(M + 1)
    ta = tau**a

    V = np.zeros((M + 1, N - 1))
    for m in range(1, M + 1):
        rhs = a * mats.apply_Q(V[m - 1])
        if m >= 3:
            rhs += g[2:m] @ V[m - 2 : 0 : -1]
        rhs += ta * _source_vector(problem.source, x, t[m], tau, a, variant)
        V[m] = solver.solve(rhs)
    V.setflags(write=False)
    return SubdiffusionSolution(x, t, V)


def fourier_ml_reference(g: ScalarField1D, alpha: OrderLike, x, t: float, n_terms: int, panels: int = 2000):
    """Truncated sine-series solution of ``u_t^alpha = u_xx``, ``u(x,0) = g``, zero boundaries.

    Sine coefficients are computed with composite Simpson quadrature.  Unlike
    the schemes, ``alpha = 1`` is accepted here (the classical heat equation).
    """
    a = float(alpha)
    if not 0 < a <= 1:
        raise ValueError(f"alpha must satisfy 0 < alpha <= 1, got {alpha!r}")
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if n_terms < 1:
        raise ValueError(f"n_terms must be positive, got {n_terms}")
    if panels < 1000:
        raise ValueError(f"panels must be at least 1000, got {panels}")
    panels += panels % 2
    xi = np.linspace(0.0, 1.0, panels + 1)
    gx = evaluate(g, xi)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    ta = t**a
    for n in range(1, n_terms + 1):
        cn = simpson(gx * np.sin(n * np.pi * xi), x=xi)
        decay = mittag_leffler(a, 1.0, -(n * n) * np.pi**2 * ta)
        out = out + cn * decay * np.sin(n * np.pi * x)
    return (2.0 * out)[()]


def max_admissible_terms(alpha: OrderLike, t: float) -> int:
    """Largest ``n`` with ``n**2 pi**2 t**alpha`` inside the Mittag-Leffler guard."""
    a = float(alpha)
    if t <= 0:
        return 10**6
    return max(0, int(math.floor(math.sqrt(ML_GUARD / (np.pi**2 * t**a)))))
