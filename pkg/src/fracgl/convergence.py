"""Grid-refinement studies, error tables and the catalog of worked examples."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .caputo import GridFunction, evaluate
from .ode import OdeProblem, OdeScheme, SmoothingData, build_smoothed_rhs, solve_ode
from .subdiffusion import (
    Field1D,
    SubdiffusionProblem,
    SubdiffusionSolution,
    Variant,
    build_H,
    fourier_ml_reference,
    homogenize,
    max_admissible_terms,
    solve_subdiffusion,
)
from .weights import FractionalOrder, OrderLike, as_order


@dataclass(frozen=True)
class ErrorRow:
    h: float
    tau: Optional[float]
    max_error: float
    ratio: Optional[float] = None
    order: Optional[float] = None


@dataclass(frozen=True)
class ErrorTable:
    """Rows of a refinement study; ``ratio`` and ``order`` compare each row with the previous one."""

    rows: tuple[ErrorRow, ...]

    @classmethod
    def from_errors(cls, h: Sequence[float], errors: Sequence[float], tau: Optional[Sequence[float]] = None) -> "ErrorTable":
        if len(h) != len(errors) or (tau is not None and len(tau) != len(h)):
            raise ValueError("h, errors and tau must have equal length")
        rows = []
        for i, (hi, e) in enumerate(zip(h, errors)):
            ti = None if tau is None else float(tau[i])
            if i == 0:
                rows.append(ErrorRow(float(hi), ti, float(e)))
                continue
            prev = float(errors[i - 1])
            ratio = prev / float(e) if e != 0 else math.inf
            order = math.log2(ratio) if ratio > 0 else math.nan
            rows.append(ErrorRow(float(hi), ti, float(e), ratio, order))
        return cls(tuple(rows))

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.max_error for r in self.rows])

    @property
    def orders(self) -> list[Optional[float]]:
        return [r.order for r in self.rows]

    @property
    def has_tau(self) -> bool:
        return any(r.tau is not None for r in self.rows)

    def to_csv(self, digits: int = 6) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = ["h", "tau", "max_error", "ratio", "order"] if self.has_tau else ["h", "max_error", "ratio", "order"]
        writer.writerow(cols)
        for r in self.rows:
            cells = [r.h, r.tau, r.max_error, r.ratio, r.order] if self.has_tau else [r.h, r.max_error, r.ratio, r.order]
            writer.writerow(["" if v is None else format_sig(v, digits) for v in cells])
        return buf.getvalue()

    def to_json(self, digits: int = 6) -> str:
        def cell(v):
            return None if v is None else float(format_sig(v, digits))

        rows = [
            {"h": cell(r.h), "tau": cell(r.tau), "max_error": cell(r.max_error), "ratio": cell(r.ratio), "order": cell(r.order)}
            for r in self.rows
        ]
        return json.dumps({"rows": rows}, indent=2) + "\n"


def format_sig(value: float, digits: int) -> str:
    """Format with ``digits`` significant digits, using the shortest of fixed or exponent notation."""
    return f"{float(value):.{digits}g}"


# worked examples ---------------------------------------------------------

def _example1_rhs(alpha: float) -> Callable[[np.ndarray], np.ndarray]:
    a = alpha
    g2, g3, g4, g4p = math.gamma(2 - a), math.gamma(3 - a), math.gamma(4 - a), math.gamma(4 + a)

    def f(x):
        return (
            2 * x + 3 * x**2 + 4 * x**3 + 6 * x ** (3 + a)
            + 2 * x ** (1 - a) / g2 + 6 * x ** (2 - a) / g3 + 24 * x ** (3 - a) / g4
            + g4p * x**3
        )

    return f


def example1_rhs(alpha: OrderLike) -> Callable[[np.ndarray], np.ndarray]:
    """Right-hand side whose solution is ``2x + 3x**2 + 4x**3 + 6x**(3+alpha)``."""
    return _example1_rhs(as_order(alpha).alpha)


EXAMPLE1_SMOOTHING = SmoothingData(L1=2.0, L2=6.0, L3=24.0)


def _c(x):
    return 2 * x * x * (1 - x)


def _c_xx(x):
    return 4 - 12 * x


def family_source(alpha: OrderLike, a, a_xx, b, b_xx, c, c_xx) -> Callable:
    """Source ``G`` whose solution is ``a(x) t + b(x) t**2 + c(x) t**(2+alpha)``."""
    al = as_order(alpha).alpha
    g2, g3, g3p = math.gamma(2 - al), math.gamma(3 - al), math.gamma(3 + al)

    def G(x, t):
        return (
            a(x) * t ** (1 - al) / g2
            + 2 * b(x) * t ** (2 - al) / g3
            + 0.5 * g3p * c(x) * t**2
            - a_xx(x) * t
            - b_xx(x) * t**2
            - c_xx(x) * t ** (2 + al)
        )

    return G


def _fde2_g(x):
    return x * x * (x - 1)


def _fde2_g_xx(x):
    return 6 * x - 2


@dataclass(frozen=True)
class Preset:
    """A worked example with closed-form solution.

    ``build(alpha)`` returns the problem handed to the solver; ``exact`` is
    the closed-form solution of that same problem.
    """

    name: str
    kind: str
    description: str
    alpha: float
    T: float
    default_scheme: str
    fixed_alpha: bool = False
    smoothing: Optional[SmoothingData] = None
    surface_plot: bool = False
    original: Optional[Callable] = field(default=None, repr=False, compare=False)
    _build: Callable = field(default=None, repr=False, compare=False)

    def resolve_alpha(self, alpha: Optional[OrderLike] = None) -> FractionalOrder:
        if alpha is None:
            return as_order(self.alpha)
        order = as_order(alpha)
        if self.fixed_alpha and not math.isclose(order.alpha, self.alpha, rel_tol=0, abs_tol=1e-12):
            raise ValueError(f"alpha: preset {self.name} is defined only for alpha = {self.alpha}")
        return order

    def build(self, alpha: Optional[OrderLike] = None) -> Union[OdeProblem, SubdiffusionProblem]:
        return self._build(self.resolve_alpha(alpha))

    def exact(self, alpha: Optional[OrderLike] = None) -> Callable:
        problem = self.build(alpha)
        if problem.exact is None:
            raise ValueError(f"preset {self.name} has no exact solution")
        return problem.exact


def _eq22(order: FractionalOrder) -> OdeProblem:
    a = order.alpha
    g = math.gamma(3 + a)
    return OdeProblem(order, 1.0, lambda x: 2 * x ** (2 + a) + g * x**2, lambda x: 2 * x ** (2 + a))


def _eq34(order: FractionalOrder) -> OdeProblem:
    a = order.alpha
    data = SmoothingData(EXAMPLE1_SMOOTHING.L1, EXAMPLE1_SMOOTHING.L2)
    F, _ = build_smoothed_rhs(_example1_rhs(a), data, order)
    return OdeProblem(order, 1.0, F, lambda x: 4 * x**3 + 6 * x ** (3 + a))


def _eq35(order: FractionalOrder) -> OdeProblem:
    a = order.alpha
    F, _ = build_smoothed_rhs(_example1_rhs(a), EXAMPLE1_SMOOTHING, order)
    return OdeProblem(order, 1.0, F, lambda x: 6 * x ** (3 + a))


def _eq36(order: FractionalOrder) -> OdeProblem:
    g = math.gamma(1.25)
    return OdeProblem(order, 1.0, lambda x: x**0.25 + g, lambda x: x**0.25)


def _eq37(order: FractionalOrder) -> OdeProblem:
    # the 0.25-derivative of x**1.25 is Gamma(2.25) x
    g = math.gamma(2.25)
    return OdeProblem(order, 1.0, lambda x: g * x + x**1.25, lambda x: x**1.25)


def _eq58(order: FractionalOrder) -> SubdiffusionProblem:
    a = order.alpha

    def lin(x):
        return np.sin(np.pi * x)

    def lin_xx(x):
        return -np.pi**2 * np.sin(np.pi * x)

    def quad_(x):
        return x * (1 - x)

    def quad_xx(x):
        return -2.0 + 0 * x

    G = family_source(order, lin, lin_xx, quad_, quad_xx, _c, _c_xx)
    H = build_H(G, lin, lambda x: 2 * quad_(x), lin_xx, lambda x: 2 * quad_xx(x), order)
    return SubdiffusionProblem(order, 1.0, H, lambda x, t: _c(x) * t ** (2 + a))


_FDE2_LIFT = homogenize(_fde2_g, lambda t: 0.0, lambda t: 0.0)


def _fde2_ml(order: FractionalOrder) -> SubdiffusionProblem:
    lift = _FDE2_LIFT

    def exact(x, t):
        return lift.forward(x, t, fde2_reference(order, x, t))

    # u - g satisfies the same equation with source g''
    return SubdiffusionProblem(order, 0.05, lambda x, t: _fde2_g_xx(x) + 0 * t, exact)


FDE2_MAX_TERMS = 60


def fde2_reference(alpha: OrderLike, x, t: float):
    """Truncated series solution for initial data ``x**2 (x - 1)``.

    The number of terms is capped by the Mittag-Leffler argument guard,
    which allows only a handful of terms once ``t`` reaches 0.05.
    """
    n = min(FDE2_MAX_TERMS, max_admissible_terms(alpha, float(t)))
    if n < 1:
        raise ValueError(f"t: Mittag-Leffler guard admits no terms at t={t}")
    return fourier_ml_reference(_fde2_g, alpha, x, float(t), n)


_PRESETS = {
    p.name: p
    for p in (
        Preset("eq22", "ode", "y^(a) + y = 2x^(2+a) + Gamma(3+a)x^2, solution 2x^(2+a)", 2 / 3, 1.0,
               OdeScheme.SECOND_ORDER_OFFGRID.value, _build=_eq22),
        Preset("eq34", "ode",
               "smoothed example with solution z1 = 4x^3 + 6x^(3+a); right-hand side built from L1=2, L2=6",
               0.25, 1.0, OdeScheme.SECOND_ORDER_AVERAGED.value,
               smoothing=SmoothingData(2.0, 6.0), _build=_eq34),
        Preset("eq35", "ode",
               "smoothed example with solution z2 = 6x^(3+a); right-hand side built from L1=2, L2=6, L3=24",
               0.75, 1.0, OdeScheme.THIRD_ORDER.value, smoothing=EXAMPLE1_SMOOTHING, _build=_eq35),
        Preset("eq36", "ode", "y^(0.25) + y = x^0.25 + Gamma(1.25), solution x^0.25 (not differentiable at 0)",
               0.25, 1.0, OdeScheme.SECOND_ORDER_OFFGRID.value, fixed_alpha=True, _build=_eq36),
        Preset("eq37", "ode", "y^(0.25) + y = Gamma(2.25)x + x^1.25, solution x^1.25 (no continuous y'' at 0)",
               0.25, 1.0, OdeScheme.SECOND_ORDER_OFFGRID.value, fixed_alpha=True, _build=_eq37),
        Preset("eq58", "pde",
               "sub-diffusion with solution 2x^2(1-x)t^(2+a); source from build_H, "
               "giving +4(3x-1)t^(2+a) as the c'' term",
               0.5, 1.0, Variant.OFFGRID.value, _build=_eq58),
        Preset("fde2-ml", "pde",
               "u_t^(a) = u_xx, u(x,0) = x^2(x-1) on t in [0,0.05]; solved for u - g, "
               "exact values from the truncated Fourier/Mittag-Leffler series",
               0.5, 0.05, Variant.OFFGRID.value, surface_plot=True, original=_FDE2_LIFT.inverse,
               _build=_fde2_ml),
    )
}


def presets() -> dict[str, Preset]:
    return dict(_PRESETS)


def get_preset(name: str) -> Preset:
    try:
        return _PRESETS[name]
    except KeyError:
        raise KeyError(f"preset: unknown name {name!r}; choose from {', '.join(_PRESETS)}") from None


# studies -----------------------------------------------------------------

def max_error(numeric: Union[GridFunction, SubdiffusionSolution, Iterable[Field1D]], exact: Callable) -> float:
    """Maximum absolute error: every node of an ODE grid, interior nodes at the final time for a PDE."""
    if isinstance(numeric, GridFunction):
        return float(np.max(np.abs(numeric.values - evaluate(exact, numeric.x))))
    if isinstance(numeric, SubdiffusionSolution):
        last = numeric.final()
        x = numeric.x
    else:
        fields = list(numeric)
        if not fields:
            raise ValueError("numeric: empty field sequence")
        last = fields[-1]
        x = np.arange(1, len(last.values) + 1) / (len(last.values) + 1)
    ref = np.broadcast_to(np.asarray(exact(x, last.t), dtype=float), x.shape)
    return float(np.max(np.abs(last.values - ref)))


def _steps(length: float, h: float, what: str) -> int:
    n = int(round(length / h))
    if n < 1 or not math.isclose(n * h, length, rel_tol=1e-9, abs_tol=0):
        raise ValueError(f"{what}: step {h} does not divide [0, {length}] evenly")
    return n


def refinement_study(
    preset: Union[Preset, str],
    scheme: Optional[str] = None,
    h_list: Sequence[float] = (),
    alpha: Optional[OrderLike] = None,
    tau_rule: str = "h",
) -> ErrorTable:
    """Run ``preset`` at each step in ``h_list`` and tabulate errors and observed orders.

    For PDE presets ``tau_rule`` picks ``tau = h`` or ``tau = h/2``.
    """
    if isinstance(preset, str):
        preset = get_preset(preset)
    h_list = [float(h) for h in h_list]
    if not h_list:
        raise ValueError("h: at least one step is required")
    if any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise ValueError("h: steps must be strictly decreasing")
    if tau_rule not in ("h", "h/2"):
        raise ValueError(f"tau-rule: expected 'h' or 'h/2', got {tau_rule!r}")
    problem = preset.build(alpha)
    scheme = scheme or preset.default_scheme
    errors, taus = [], []
    for h in h_list:
        if preset.kind == "ode":
            sol = solve_ode(problem, scheme, _steps(problem.T, h, "h"))
            errors.append(max_error(sol, problem.exact))
        else:
            tau = h if tau_rule == "h" else h / 2
            sol = solve_subdiffusion(problem, scheme, _steps(problem.T, tau, "tau"), _steps(1.0, h, "h"))
            errors.append(max_error(sol, problem.exact))
            taus.append(tau)
    return ErrorTable.from_errors(h_list, errors, taus if preset.kind == "pde" else None)
