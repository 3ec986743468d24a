"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 solver or domain error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np
import scipy.special

from .caputo import GridFunction, evaluate
from .convergence import format_sig, get_preset, presets, refinement_study
from .ode import OdeProblem, OdeScheme, solve_ode
from .subdiffusion import SubdiffusionProblem, SubdiffusionSolution, Variant, solve_subdiffusion
from .weights import FractionalOrder, grunwald_weights, l1_weights

EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_IO = 4

SOLUTION_DIGITS = 17
TABLE_DIGITS = 6


class CliError(Exception):
    def __init__(self, code: int, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.code = code
        self.field = field


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise CliError(EXIT_USAGE, "arguments", message)


# option handling ---------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", help="order in (0,1); decimal or fraction such as 2/3")
    p.add_argument("--preset", help="named worked example, see `study --help`")
    p.add_argument("--config", help="flat JSON file of option values; flags take precedence")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fracgl", description="Fractional difference schemes and convergence studies.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("weights", help="dump Grünwald or L1 weights")
    _common(p)
    p.add_argument("--count", type=int, help="largest weight index")
    p.add_argument("--kind", choices=("grunwald", "l1"))

    p = sub.add_parser("solve-ode", help="solve y^(alpha) + y = f on a uniform grid")
    _common(p)
    _ode_problem(p)
    p.add_argument("--h", help="step size")
    p.add_argument("--N", type=int, help="number of steps (alternative to --h)")

    p = sub.add_parser("solve-pde", help="solve the homogeneous sub-diffusion problem")
    _common(p)
    _pde_problem(p)
    _pde_grid(p)
    p.add_argument("--all-times", action="store_true", default=None, help="dump every time level")

    p = sub.add_parser(
        "study",
        help="grid-refinement error table",
        description="Presets: " + ", ".join(presets()),
    )
    _common(p)
    p.add_argument("--scheme")
    p.add_argument("--h", help="comma-separated, strictly decreasing steps")
    p.add_argument("--tau-rule", choices=("h", "h/2"))

    p = sub.add_parser("plot-data", help="columns x [t] numeric exact for external plotting")
    _common(p)
    p.add_argument("--scheme")
    p.add_argument("--h")
    p.add_argument("--N", type=int)
    p.add_argument("--tau")
    p.add_argument("--M", type=int)
    p.add_argument("--tau-rule", choices=("h", "h/2"))
    p.add_argument("--surface", action="store_true", default=None, help="all time levels of a PDE run")
    return parser


def _ode_problem(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", help="|".join(s.value for s in OdeScheme))
    p.add_argument("--f", help="inline right-hand side in x, e.g. 'gamma(3+alpha)*x**2'")
    p.add_argument("--exact", help="inline exact solution")
    p.add_argument("--T", help="interval length for inline problems (default 1)")


def _pde_problem(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", help="|".join(v.value for v in Variant))
    p.add_argument("--source", help="inline source H in x and t")
    p.add_argument("--exact", help="inline exact solution in x and t")
    p.add_argument("--T", help="final time for inline problems (default 1)")


def _pde_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--h")
    p.add_argument("--N", type=int)
    p.add_argument("--tau")
    p.add_argument("--M", type=int)
    p.add_argument("--tau-rule", choices=("h", "h/2"))


def _load_config(path: Optional[str]) -> dict[str, Any]:
    if not path:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(EXIT_IO, "config", f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_USAGE, "config", f"malformed JSON in {path}: {exc.msg}") from exc
    if not isinstance(data, dict) or any(isinstance(v, (dict, list)) and k != "h" for k, v in data.items()):
        raise CliError(EXIT_USAGE, "config", "expected a flat JSON object of option values")
    data = {k.replace("-", "_"): v for k, v in data.items()}
    if data.get("format") not in (None, "csv", "json"):
        raise CliError(EXIT_USAGE, "format", f"expected csv or json, got {data['format']!r}")
    return data


class Options:
    """Flag values layered over config-file values."""

    def __init__(self, args: argparse.Namespace, config: dict[str, Any]):
        known = set(vars(args))
        unknown = sorted(set(config) - known)
        if unknown:
            raise CliError(EXIT_USAGE, "config", f"unknown key {unknown[0]!r} for {args.command}")
        self._args = args
        self._config = config

    def get(self, name: str, default: Any = None) -> Any:
        value = getattr(self._args, name, None)
        if value is None:
            value = self._config.get(name)
        return default if value is None else value


def _float(opts: Options, name: str, default: Optional[float] = None) -> Optional[float]:
    raw = opts.get(name)
    if raw is None:
        return default
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise CliError(EXIT_USAGE, name, f"expected a number, got {raw!r}") from None
    if not math.isfinite(value) or value <= 0:
        raise CliError(EXIT_USAGE, name, f"must be positive, got {raw!r}")
    return value


def _int(opts: Options, name: str) -> Optional[int]:
    raw = opts.get(name)
    if raw is None:
        return None
    if isinstance(raw, float) and not raw.is_integer() or isinstance(raw, bool):
        raise CliError(EXIT_USAGE, name, f"expected an integer, got {raw!r}")
    try:
        value = int(raw)
    except (TypeError, ValueError):
        raise CliError(EXIT_USAGE, name, f"expected an integer, got {raw!r}") from None
    if value < 1:
        raise CliError(EXIT_USAGE, name, f"must be positive, got {raw!r}")
    return value


def _h_list(opts: Options) -> list[float]:
    raw = opts.get("h")
    if raw is None:
        raise CliError(EXIT_USAGE, "h", "a comma-separated list of steps is required")
    items = raw if isinstance(raw, list) else str(raw).split(",")
    out = []
    for item in items:
        try:
            value = float(item)
        except (TypeError, ValueError):
            raise CliError(EXIT_USAGE, "h", f"expected numbers, got {item!r}") from None
        if not value > 0 or not math.isfinite(value):
            raise CliError(EXIT_USAGE, "h", f"steps must be positive, got {item!r}")
        out.append(value)
    return out


def _alpha(opts: Options) -> Optional[FractionalOrder]:
    raw = opts.get("alpha")
    if raw is None:
        return None
    try:
        return FractionalOrder.parse(str(raw))
    except ValueError as exc:
        raise CliError(EXIT_USAGE, "alpha", str(exc).removeprefix("alpha: ")) from None


def _preset(opts: Options) -> Optional[Preset]:
    name = opts.get("preset")
    if name is None:
        return None
    try:
        return get_preset(str(name))
    except KeyError as exc:
        raise CliError(EXIT_USAGE, "preset", exc.args[0].removeprefix("preset: ")) from None


def _steps(length: float, h: float, field: str) -> int:
    n = int(round(length / h))
    if n < 1 or not math.isclose(n * h, length, rel_tol=1e-9):
        raise CliError(EXIT_USAGE, field, f"{h} does not divide [0, {length:g}] evenly")
    return n


def _grid(opts: Options, length: float, step: str, count: str, required: bool = True) -> Optional[int]:
    h, n = opts.get(step), _int(opts, count)
    if h is not None and n is not None:
        value = _float(opts, step)
        if _steps(length, value, step) != n:
            raise CliError(EXIT_USAGE, step, f"--{step} {value} is inconsistent with --{count} {n}")
        return n
    if h is not None:
        return _steps(length, _float(opts, step), step)
    if n is not None:
        return n
    if required:
        raise CliError(EXIT_USAGE, step, f"one of --{step} or --{count} is required")
    return None


# inline problems ---------------------------------------------------------

_NAMESPACE = {
    "np": np,
    "pi": math.pi,
    "e": math.e,
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "gamma": scipy.special.gamma,
}


def compile_expression(text: str, variables: Sequence[str], alpha: float, field: str) -> Callable:
    """Compile a numpy expression in ``variables`` with ``alpha`` bound."""
    try:
        code = compile(text, f"<{field}>", "eval")
    except SyntaxError as exc:
        raise CliError(EXIT_USAGE, field, f"invalid expression {text!r}: {exc.msg}") from None
    allowed = set(_NAMESPACE) | set(variables) | {"alpha"}
    bad = sorted(set(code.co_names) - allowed)
    if bad:
        raise CliError(EXIT_USAGE, field, f"unknown name {bad[0]!r} in expression")
    scope = {"__builtins__": {}, **_NAMESPACE, "alpha": alpha}

    def fn(*args):
        return eval(code, scope, dict(zip(variables, args)))

    return fn


def _ode_setup(opts: Options) -> tuple[OdeProblem, str]:
    preset, alpha, inline = _preset(opts), _alpha(opts), opts.get("f")
    if (preset is None) == (inline is None):
        raise CliError(EXIT_USAGE, "preset", "give exactly one of --preset or an inline --f")
    if preset is not None:
        if preset.kind != "ode":
            raise CliError(EXIT_USAGE, "preset", f"{preset.name} is a PDE preset; use solve-pde")
        problem = _domain(lambda: preset.build(alpha), "alpha")
        return problem, opts.get("scheme", preset.default_scheme)
    if alpha is None:
        raise CliError(EXIT_USAGE, "alpha", "required for inline problems")
    f = compile_expression(str(inline), ("x",), alpha.alpha, "f")
    exact_src = opts.get("exact")
    exact = compile_expression(str(exact_src), ("x",), alpha.alpha, "exact") if exact_src else None
    T = _float(opts, "T", 1.0)
    return OdeProblem(alpha, T, f, exact), opts.get("scheme", OdeScheme.SECOND_ORDER_OFFGRID.value)


def _pde_setup(opts: Options) -> tuple[SubdiffusionProblem, str, Optional[Preset]]:
    preset, alpha, inline = _preset(opts), _alpha(opts), opts.get("source")
    if (preset is None) == (inline is None):
        raise CliError(EXIT_USAGE, "preset", "give exactly one of --preset or an inline --source")
    if preset is not None:
        if preset.kind != "pde":
            raise CliError(EXIT_USAGE, "preset", f"{preset.name} is an ODE preset; use solve-ode")
        problem = _domain(lambda: preset.build(alpha), "alpha")
        return problem, opts.get("scheme", preset.default_scheme), preset
    if alpha is None:
        raise CliError(EXIT_USAGE, "alpha", "required for inline problems")
    H = compile_expression(str(inline), ("x", "t"), alpha.alpha, "source")
    exact_src = opts.get("exact")
    exact = compile_expression(str(exact_src), ("x", "t"), alpha.alpha, "exact") if exact_src else None
    T = _float(opts, "T", 1.0)
    return SubdiffusionProblem(alpha, T, H, exact), opts.get("scheme", Variant.OFFGRID.value), None


def _domain(fn: Callable, field: str):
    try:
        return fn()
    except ValueError as exc:
        raise CliError(EXIT_SOLVER, field, str(exc).split(": ", 1)[-1]) from None


def _check_scheme(scheme: str, kind: str) -> str:
    names = [s.value for s in OdeScheme] if kind == "ode" else [v.value for v in Variant]
    if scheme not in names:
        raise CliError(EXIT_USAGE, "scheme", f"unknown {kind} scheme {scheme!r}; choose from {', '.join(names)}")
    return scheme


def _pde_steps(opts: Options, problem: SubdiffusionProblem) -> tuple[int, int]:
    N = _grid(opts, 1.0, "h", "N")
    M = _grid(opts, problem.T, "tau", "M", required=False)
    if M is None:
        rule = opts.get("tau_rule", "h")
        tau = (1.0 / N) * (0.5 if rule == "h/2" else 1.0)
        M = _steps(problem.T, tau, "tau")
    return M, N


# output ------------------------------------------------------------------

def _fmt(value: float, digits: int) -> str:
    return format_sig(value, digits)


def _columns_to_text(names: Sequence[str], columns: Sequence[np.ndarray], fmt: str, digits: int) -> str:
    if fmt == "json":
        data = {n: [float(v) for v in c] for n, c in zip(names, columns)}
        return json.dumps(data) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in zip(*columns):
        writer.writerow([_fmt(v, digits) for v in row])
    return buf.getvalue()


def _write(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(EXIT_IO, "out", f"cannot write {out}: {exc.strerror or exc}") from None


def read_columns(path: str | Path) -> dict[str, np.ndarray]:
    """Read a CSV written by this tool back into float columns."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[i]) for r in body]) for i, name in enumerate(header)}


def emit_plot_data(solution, exact: Optional[Callable], path: Optional[str], *, surface: bool = False,
                   fmt: str = "csv", original: Optional[Callable] = None) -> str:
    """Write ``x [t] numeric exact`` columns for an ODE grid or a PDE run.

    PDE runs give the final-time interior slice unless ``surface`` is set.
    ``original(x, t, v)`` optionally maps solver values back to the
    untransformed unknown before writing.
    """
    if isinstance(solution, GridFunction):
        x = solution.x
        names, cols = ["x", "numeric"], [x, solution.values]
        if exact is not None:
            names.append("exact")
            cols.append(evaluate(exact, x))
    elif isinstance(solution, SubdiffusionSolution):
        levels = range(len(solution.t)) if surface else [len(solution.t) - 1]
        xs, ts, num, ex = [], [], [], []
        for m in levels:
            t = float(solution.t[m])
            v = solution.values[m]
            xs.append(solution.x)
            ts.append(np.full_like(solution.x, t))
            vals = v if original is None else original(solution.x, t, v)
            num.append(vals)
            if exact is not None:
                e = np.broadcast_to(np.asarray(exact(solution.x, t), dtype=float), solution.x.shape)
                ex.append(e if original is None else original(solution.x, t, e))
        names = ["x", "t", "numeric"] if surface else ["x", "numeric"]
        cols = [np.concatenate(xs)] + ([np.concatenate(ts)] if surface else []) + [np.concatenate(num)]
        if exact is not None:
            names.append("exact")
            cols.append(np.concatenate(ex))
    else:
        raise TypeError(f"unsupported solution type {type(solution).__name__}")
    text = _columns_to_text(names, cols, fmt, SOLUTION_DIGITS)
    if path is not None:
        _write(text, path)
    return text


# commands ----------------------------------------------------------------

def _cmd_weights(opts: Options) -> str:
    alpha = _alpha(opts)
    if alpha is None:
        raise CliError(EXIT_USAGE, "alpha", "required")
    count = _int(opts, "count")
    if count is None:
        raise CliError(EXIT_USAGE, "count", "required")
    kind = opts.get("kind", "grunwald")
    values = _domain(
        lambda: grunwald_weights(alpha, count).w if kind == "grunwald" else l1_weights(alpha, count).c, "count"
    )
    name = "w" if kind == "grunwald" else "c"
    return _columns_to_text(["n", name], [np.arange(count + 1), values], opts.get("format", "csv"), SOLUTION_DIGITS)


def _cmd_solve_ode(opts: Options) -> str:
    problem, scheme = _ode_setup(opts)
    scheme = _check_scheme(scheme, "ode")
    N = _grid(opts, problem.T, "h", "N")
    sol = _domain(lambda: solve_ode(problem, scheme, N), "N")
    return emit_plot_data(sol, problem.exact, None, fmt=opts.get("format", "csv"))


def _cmd_solve_pde(opts: Options) -> str:
    problem, scheme, _ = _pde_setup(opts)
    scheme = _check_scheme(scheme, "pde")
    M, N = _pde_steps(opts, problem)
    sol = _domain(lambda: solve_subdiffusion(problem, scheme, M, N), "M")
    return emit_plot_data(sol, problem.exact, None, surface=bool(opts.get("all_times")),
                          fmt=opts.get("format", "csv"))


def _cmd_study(opts: Options) -> str:
    preset = _preset(opts)
    if preset is None:
        raise CliError(EXIT_USAGE, "preset", "required for study")
    alpha = _domain(lambda: preset.resolve_alpha(_alpha(opts)), "alpha")
    scheme = _check_scheme(opts.get("scheme", preset.default_scheme), preset.kind)
    h = _h_list(opts)
    table = _domain(
        lambda: refinement_study(preset, scheme, h, alpha=alpha, tau_rule=opts.get("tau_rule", "h")), "h"
    )
    return table.to_json(TABLE_DIGITS) if opts.get("format", "csv") == "json" else table.to_csv(TABLE_DIGITS)


def _cmd_plot_data(opts: Options) -> str:
    preset = _preset(opts)
    if preset is None:
        raise CliError(EXIT_USAGE, "preset", "required for plot-data")
    alpha = _alpha(opts)
    problem = _domain(lambda: preset.build(alpha), "alpha")
    scheme = _check_scheme(opts.get("scheme", preset.default_scheme), preset.kind)
    fmt = opts.get("format", "csv")
    if preset.kind == "ode":
        N = _grid(opts, problem.T, "h", "N")
        sol = _domain(lambda: solve_ode(problem, scheme, N), "N")
        return emit_plot_data(sol, problem.exact, None, fmt=fmt)
    M, N = _pde_steps(opts, problem)
    sol = _domain(lambda: solve_subdiffusion(problem, scheme, M, N), "M")
    surface = opts.get("surface")
    if surface is None:
        surface = preset.surface_plot
    return _domain(
        lambda: emit_plot_data(sol, problem.exact, None, surface=bool(surface), fmt=fmt, original=preset.original),
        "t",
    )


_COMMANDS = {
    "weights": _cmd_weights,
    "solve-ode": _cmd_solve_ode,
    "solve-pde": _cmd_solve_pde,
    "study": _cmd_study,
    "plot-data": _cmd_plot_data,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        opts = Options(args, _load_config(args.config))
        text = _COMMANDS[args.command](opts)
        _write(text, opts.get("out"))
    except CliError as exc:
        print(f"fracgl: error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"fracgl: error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return 0


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
