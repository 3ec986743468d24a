import json
import subprocess
import sys

import numpy as np
import pytest

from fracgl.cli import EXIT_IO, EXIT_SOLVER, EXIT_USAGE, main, read_columns
from fracgl.convergence import get_preset
from fracgl.ode import solve_ode
from fracgl.subdiffusion import solve_subdiffusion


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_weights_dump(capsys):
    code, out, _ = run(capsys, "weights", "--alpha", "0.5", "--count", "2")
    assert code == 0
    assert out.splitlines() == ["n,w", "0,1", "1,-0.5", "2,-0.125"]


def test_weights_fraction_alpha_and_l1(capsys):
    code, out, _ = run(capsys, "weights", "--alpha", "1/2", "--count", "1", "--kind", "l1", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["c"][0] == pytest.approx(1.1283791670955126, rel=1e-15)


def test_study_table2(capsys):
    code, out, _ = run(
        capsys, "study", "--preset", "eq22", "--alpha", "0.6667", "--scheme", "second-order-offgrid",
        "--h", "0.05,0.025,0.0125",
    )
    assert code == 0
    header, first = out.splitlines()[:2]
    assert header == "h,max_error,ratio,order"
    h, err, ratio, order = first.split(",")
    assert h == "0.05" and float(err) == pytest.approx(0.00146501, rel=5e-3) and ratio == order == ""


def test_solve_ode_small_grid(capsys):
    code, out, _ = run(capsys, "solve-ode", "--preset", "eq22", "--scheme", "first-order", "--h", "0.5")
    rows = out.splitlines()
    assert code == 0 and rows[0] == "x,numeric,exact" and len(rows) == 4
    assert rows[1].split(",")[:2] == ["0", "0"]


def test_solve_ode_round_trip(tmp_path, capsys):
    out = tmp_path / "sol.csv"
    code, _, _ = run(capsys, "solve-ode", "--preset", "eq22", "--scheme", "l1", "--N", "37", "--out", str(out))
    assert code == 0
    cols = read_columns(out)
    direct = solve_ode(get_preset("eq22").build(), "l1", 37)
    assert np.array_equal(cols["numeric"], direct.values)
    assert np.array_equal(cols["x"], direct.x)


def test_solve_pde_round_trip(tmp_path, capsys):
    out = tmp_path / "pde.csv"
    code, _, _ = run(capsys, "solve-pde", "--preset", "eq58", "--h", "0.125", "--tau-rule", "h/2", "--out", str(out))
    assert code == 0
    direct = solve_subdiffusion(get_preset("eq58").build(), "offgrid", 16, 8)
    assert np.array_equal(read_columns(out)["numeric"], direct.final().values)


def test_solve_pde_all_times(capsys):
    code, out, _ = run(capsys, "solve-pde", "--preset", "eq58", "--N", "4", "--M", "3", "--all-times")
    rows = out.splitlines()
    assert code == 0 and rows[0] == "x,t,numeric,exact" and len(rows) == 1 + 4 * 3


def test_inline_problem(capsys):
    code, out, _ = run(
        capsys, "solve-ode", "--alpha", "2/3", "--f", "2*x**(2+alpha) + gamma(3+alpha)*x**2",
        "--exact", "2*x**(2+alpha)", "--scheme", "second-order-offgrid", "--h", "0.1",
    )
    cols = np.array([list(map(float, r.split(","))) for r in out.splitlines()[1:]])
    assert code == 0 and np.max(np.abs(cols[:, 1] - cols[:, 2])) == pytest.approx(0.005828, rel=5e-3)


def test_inline_pde(capsys):
    code, out, _ = run(capsys, "solve-pde", "--alpha", "0.5", "--source", "0*x*t", "--h", "0.25")
    assert code == 0 and all(float(r.split(",")[1]) == 0.0 for r in out.splitlines()[1:])


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"preset": "eq22", "scheme": "first-order", "h": "0.1,0.05", "alpha": "2/3"}))
    code, out, _ = run(capsys, "study", "--config", str(cfg))
    assert code == 0 and float(out.splitlines()[2].split(",")[1]) == pytest.approx(0.0560953, rel=5e-3)
    code, out, _ = run(capsys, "study", "--config", str(cfg), "--scheme", "l1")
    assert code == 0 and float(out.splitlines()[2].split(",")[1]) == pytest.approx(0.0223527, rel=5e-3)


def test_plot_data_ode(tmp_path, capsys):
    out = tmp_path / "plot.csv"
    assert run(capsys, "plot-data", "--preset", "eq34", "--h", "0.05", "--out", str(out))[0] == 0
    cols = read_columns(out)
    assert list(cols) == ["x", "numeric", "exact"] and len(cols["x"]) == 21


def test_plot_data_fde2_surface(capsys):
    code, out, _ = run(capsys, "plot-data", "--preset", "fde2-ml", "--h", "0.125", "--M", "5")
    rows = out.splitlines()
    assert code == 0 and rows[0] == "x,t,numeric,exact" and len(rows) == 1 + 7 * 6
    first = [list(map(float, r.split(","))) for r in rows[1:8]]
    # t = 0 level is the initial data x^2 (x - 1)
    for x, t, num, ex in first:
        assert t == 0 and num == pytest.approx(x * x * (x - 1), abs=1e-15)
        assert ex == pytest.approx(x * x * (x - 1), abs=1e-5)
    assert max(float(r.split(",")[1]) for r in rows[1:]) == pytest.approx(0.05)


def test_plot_data_pde_slice(capsys):
    code, out, _ = run(capsys, "plot-data", "--preset", "eq58", "--h", "0.25")
    assert code == 0 and out.splitlines()[0] == "x,numeric,exact" and len(out.splitlines()) == 4


@pytest.mark.parametrize(
    "argv, code, field",
    [
        (["study", "--preset", "nope", "--h", "0.1"], EXIT_USAGE, "preset"),
        (["weights", "--alpha", "1.5", "--count", "3"], EXIT_USAGE, "alpha"),
        (["weights", "--alpha", "x", "--count", "3"], EXIT_USAGE, "alpha"),
        (["weights", "--alpha", "0.5"], EXIT_USAGE, "count"),
        (["study", "--preset", "eq22", "--h", "0.3"], EXIT_SOLVER, "h"),
        (["study", "--preset", "eq22", "--h", "0.05,0.1"], EXIT_SOLVER, "h"),
        (["study", "--preset", "eq22", "--h", "abc"], EXIT_USAGE, "h"),
        (["study", "--preset", "eq36", "--alpha", "0.5", "--h", "0.1"], EXIT_SOLVER, "alpha"),
        (["study", "--preset", "eq22", "--scheme", "offgrid", "--h", "0.1"], EXIT_USAGE, "scheme"),
        (["solve-ode", "--preset", "eq58", "--h", "0.1"], EXIT_USAGE, "preset"),
        (["solve-ode", "--alpha", "0.5", "--f", "x", "--preset", "eq22", "--h", "0.1"], EXIT_USAGE, "preset"),
        (["solve-ode", "--alpha", "0.5", "--f", "__import__('os')", "--h", "0.1"], EXIT_USAGE, "f"),
        (["solve-ode", "--alpha", "0.5", "--f", "x +", "--h", "0.1"], EXIT_USAGE, "f"),
        (["solve-ode", "--preset", "eq22"], EXIT_USAGE, "h"),
        (["solve-ode", "--preset", "eq22", "--h", "0.1", "--N", "5"], EXIT_USAGE, "h"),
        (["solve-ode", "--preset", "eq35", "--scheme", "third-order", "--N", "2"], EXIT_SOLVER, "N"),
        (["solve-ode", "--preset", "eq22", "--h", "0.1", "--out", "/nonexistent/dir/x.csv"], EXIT_IO, "out"),
        (["study", "--config", "/nonexistent/cfg.json"], EXIT_IO, "config"),
        (["frobnicate"], EXIT_USAGE, "arguments"),
    ],
)
def test_error_paths(capsys, argv, code, field):
    got, out, err = run(capsys, *argv)
    assert got == code
    assert f"error: {field}:" in err
    assert out == ""


def test_malformed_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "study", "--config", str(bad))
    assert code == EXIT_USAGE and "config" in err
    nested = tmp_path / "nested.json"
    nested.write_text(json.dumps({"preset": {"name": "eq22"}}))
    assert run(capsys, "study", "--config", str(nested))[0] == EXIT_USAGE
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"colour": "red"}))
    code, _, err = run(capsys, "study", "--config", str(unknown))
    assert code == EXIT_USAGE and "colour" in err


def test_study_is_byte_identical(tmp_path, capsys):
    paths = [tmp_path / f"run{i}.csv" for i in range(2)]
    for p in paths:
        argv = ["study", "--preset", "eq58", "--h", "0.1,0.05,0.025", "--tau-rule", "h/2", "--out", str(p)]
        assert run(capsys, *argv)[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_module_entry_point(tmp_path):
    out = tmp_path / "w.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "fracgl", "weights", "--alpha", "0.5", "--count", "2", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and out.read_text() == "n,w\n0,1\n1,-0.5\n2,-0.125\n"
    bad = subprocess.run([sys.executable, "-m", "fracgl", "weights", "--alpha", "2"], capture_output=True, text=True)
    assert bad.returncode == EXIT_USAGE and "alpha" in bad.stderr
