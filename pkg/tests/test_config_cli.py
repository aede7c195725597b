import csv
import io
import math
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mirrorflow import mfld
from mirrorflow.cli import main, parse_grid
from mirrorflow.config import Option, echo, read_config, resolve
from mirrorflow.errors import ConfigError, InputError
from mirrorflow.fields import Geometry

FINE = ["--stencil-order", "14", "--tol", "1e-6"]


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run(*argv):
    return main([str(a) for a in argv])


def shear_file(name="s.mfld", grid="half:8x8x17"):
    assert run("generate", "--kind", "shear_mode", "--grid", grid, "--band", 2, "--out", name) == 0
    return name


def rows(path):
    return list(csv.DictReader(io.StringIO(open(path).read())))


# -- config ------------------------------------------------------------------------------------

OPTS = [
    Option("nu", "float", None, required=True),
    Option("nus", "floats", None),
    Option("l", "ints", [0]),
    Option("seed", "int", 0),
    Option("form", "str", "convective", choices=("convective", "rotational")),
    Option("restrict", "bool", False),
]


def test_precedence_default_file_flag(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nnu = 0.01  # trailing\nseed=3\n\nnus = 1e-2, 5e-3\n")
    o = resolve(OPTS, read_config(cfg), {"seed": "7"})
    assert o == {"nu": 0.01, "nus": [0.01, 0.005], "l": [0], "seed": 7, "form": "convective", "restrict": False}


def test_dashed_keys_and_later_lines_win(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("stencil-order = 4\nstencil_order = 8\n")
    assert read_config(cfg) == {"stencil_order": "8"}


@pytest.mark.parametrize(
    "text, flags",
    [
        ("nu = 0.1\nmystery = 1\n", {}),
        ("seed = 1\n", {}),
        ("nu = fast\n", {}),
        ("nu = inf\n", {}),
        ("nu = 0.1\nno equals sign\n", {}),
        ("nu = 0.1\n", {"form": "skew"}),
        ("nu = 0.1\n", {"restrict": "maybe"}),
        ("nu = 0.1\n", {"seed": "1.5"}),
    ],
)
def test_config_errors(tmp_path, text, flags):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(text)
    with pytest.raises(ConfigError):
        resolve(OPTS, read_config(cfg), flags)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        read_config(tmp_path / "absent.cfg")


def test_echo_is_sorted_and_full_precision():
    o = {"nu": 0.1, "nus": [1e-2, 2.5e-3], "seed": 3, "restrict": True, "l": [0, 1], "form": "convective", "x": None}
    assert echo("sweep", o) == (
        "# mirrorflow sweep\nform = convective\nl = 0,1\nnu = 0.1\nnus = 0.01,0.0025\nrestrict = true\nseed = 3\n"
    )


@settings(max_examples=50, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False), st.lists(st.floats(0, 1), min_size=1, max_size=4))
def test_echo_round_trips_bit_for_bit(tmp_path_factory, nu, nus):
    o = resolve(OPTS, {}, {"nu": repr(nu), "nus": ",".join(map(repr, nus))})
    path = tmp_path_factory.mktemp("echo") / "e.cfg"
    path.write_text(echo("x", o))
    again = resolve(OPTS, read_config(path), {})
    assert again == o
    assert echo("x", again) == echo("x", o)


def test_parse_grid():
    assert parse_grid("cube:16").shape == (16, 16, 16)
    g = parse_grid("half:8x6x17")
    assert g.geometry is Geometry.HALF_CUBE and g.shape == (8, 6, 17)
    s = parse_grid("slab:4x4x9", x3_min=-1.0, height=2.0)
    assert s.axes()[2][0] == -1.0 and s.axes()[2][-1] == 1.0
    assert parse_grid("half:8").shape == (8, 8, 5)
    for bad in ("torus:8", "half:8x8x16", "cube:8x8x"):
        with pytest.raises(InputError):
            parse_grid(bad)


# -- check ---------------------------------------------------------------------------------------


def test_check_passes_generated_shear(work):
    shear_file()
    assert run("check", "--in", "s.mfld", *FINE) == 0
    assert all(r["ok"] == "true" for r in rows("s.mfld.check.csv"))


def test_check_flags_counterexample_at_order_three(work):
    assert run("counterexample", "--n", 3, "--radius", 0.5, "--grid", "half:32x32x129", "--out", "v.mfld") == 0
    code = run("check", "--in", "v.mfld", "--l0", 4, "--tol", "1e-6", "--stencil-order", 8, "--report", "v.csv")
    assert code == 1
    flagged = {(r["kind"], r["order"], r["component"]) for r in rows("v.csv") if r["ok"] == "false"}
    assert flagged == {("compat", "3", "1"), ("compat", "3", "2")}


def test_check_io_errors(work, capsys):
    shear_file()
    data = open("s.mfld", "rb").read()
    open("cut.mfld", "wb").write(data[:-8])
    assert run("check", "--in", "cut.mfld") == 2
    assert "read failed" in capsys.readouterr().err
    assert run("check", "--in", "absent.mfld") == 2


def test_check_rejects_cube_data(work, capsys):
    shear_file()
    assert run("extend", "--in", "s.mfld", "--out", "c.mfld") == 0
    assert run("check", "--in", "c.mfld") == 1
    assert "check failed" in capsys.readouterr().err


# -- extend ----------------------------------------------------------------------------------------


def test_extend_then_check_round_trip(work):
    shear_file()
    assert run("extend", "--in", "s.mfld", "--out", "c.mfld", "--report", "fit.csv", "--tol", "1e-3") == 0
    assert mfld.load("c.mfld").grid.shape == (8, 8, 32)
    assert open("fit.csv").readline().strip() == "plane,component,order,jump,scale,stencil_order"
    assert run("extend", "--in", "c.mfld", "--out", "back.mfld", "--restrict") == 0
    assert open("back.mfld", "rb").read() == open("s.mfld", "rb").read()
    assert run("check", "--in", "back.mfld", *FINE) == 0


def test_extend_exit_codes(work):
    shear_file()
    assert run("extend", "--in", "s.mfld", "--out", "x.mfld", "--restrict") == 1  # not cube data
    assert run("extend", "--in", "nothing.mfld", "--out", "x.mfld") == 2
    assert run("extend", "--in", "s.mfld", "--out", "x.mfld", "--max-order", "two") == 2


# -- counterexample and generate -------------------------------------------------------------------


def test_counterexample_on_a_slab(work):
    argv = ["counterexample", "--n", 3, "--radius", 0.9, "--grid", "slab:32x32x129", "--out", "v.mfld"]
    assert run(*argv) == 0
    v = mfld.load("v.mfld")
    assert v.grid.geometry is Geometry.SLAB and v.grid.axes()[2][0] == 0.0
    assert run(*argv[:-1], "w.mfld", "--radius", 1.5) == 1  # bump leaves the slab
    assert run(*argv[:-1], "w.mfld", "--grid", "slab:32") == 2
    assert run(*argv[:-1], "w.mfld", "--center", "0,0") == 2


def test_generate_exit_codes(work):
    assert run("generate", "--kind", "random_symmetric", "--grid", "half:8x8x9", "--band", 2, "--out", "r.mfld") == 0
    assert run("generate", "--kind", "random_symmetric", "--grid", "half:8x8x9", "--band", 9, "--out", "r.mfld") == 1
    assert run("generate", "--kind", "vortex", "--grid", "half:8x8x9", "--out", "r.mfld") == 2


# -- solve -------------------------------------------------------------------------------------------


def solve_args(out, dt="0.01", T="0.1"):
    return ["solve", "--in", "s.mfld", "--nu", "0.01", "--dt", dt, "--T", T, "--out", out, *FINE]


def test_solve_writes_trajectory(work):
    shear_file()
    assert run(*solve_args("run")) == 0
    names = {p.name for p in (work / "run").iterdir()}
    assert {"cube", "compat.csv", "fit.csv", "diagnostics.csv", "resolved.cfg", "t_0000.mfld"} <= names
    last = sorted(n for n in names if n.startswith("t_"))[-1]
    u = mfld.load(work / "run" / last)
    want = oracles.shear(u.grid.mesh()[2], 0.01, 0.1)
    assert abs(u.data[0] - want).max() <= 1e-8


def test_solve_is_idempotent_and_echo_is_stable(work):
    shear_file()
    assert run(*solve_args("a")) == 0
    first = {p.relative_to(work / "a"): p.read_bytes() for p in (work / "a").rglob("*") if p.is_file()}
    assert run(*solve_args("a")) == 0
    second = {p.relative_to(work / "a"): p.read_bytes() for p in (work / "a").rglob("*") if p.is_file()}
    assert first == second
    echo_text = (work / "a" / "resolved.cfg").read_text()
    assert "dt = 0.01\n" in echo_text and "nu = 0.01\n" in echo_text
    # rerunning from the echo reproduces the run
    assert run("solve", "--config", "a/resolved.cfg", "--out", "b") == 0
    assert (work / "b" / "diagnostics.csv").read_bytes() == (work / "a" / "diagnostics.csv").read_bytes()


def test_solve_cfl_violation(work, capsys):
    shear_file()
    assert run(*solve_args("run", dt="0.25", T="0.5")) == 1  # CFL 1 along x1
    assert "CFL" in capsys.readouterr().err


def test_solve_exit_codes(work, capsys):
    shear_file()
    assert run("solve", "--in", "s.mfld", "--dt", "0.01", "--T", "0.1", "--out", "r") == 2  # nu missing
    assert "nu" in capsys.readouterr().err
    assert run(*solve_args("r", dt="-1")) == 2
    cfg = work / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert run(*solve_args("r"), "--config", cfg) == 2
    assert run("counterexample", "--n", 3, "--radius", 0.5, "--grid", "half:32x32x129", "--out", "v.mfld") == 0
    args = ["solve", "--in", "v.mfld", "--nu", "0", "--dt", "1e-3", "--T", "1e-3", "--out", "r"]
    assert run(*args, "--l0", 4, "--tol", "1e-6", "--stencil-order", 8) == 1
    assert "solve failed" in capsys.readouterr().err


def test_solve_on_the_cube(work):
    shear_file()
    assert run("extend", "--in", "s.mfld", "--out", "c.mfld") == 0
    assert run("solve", "--in", "c.mfld", "--nu", "0.01", "--dt", "0.01", "--T", "0.05", "--out", "cube") == 0
    assert (work / "cube" / "t_0005.mfld").exists()


# -- sweep and norms ---------------------------------------------------------------------------------


def test_sweep_reproduces_closed_form(work):
    shear_file()
    argv = ["sweep", "--in", "s.mfld", "--nus", "1e-2,5e-3,2.5e-3", "--dt", "1e-2", "--T", "0.5", "--out", "sw.csv"]
    assert run(*argv, *FINE) == 0
    table = rows("sw.csv")
    assert [float(r["nu"]) for r in table] == [1e-2, 5e-3, 2.5e-3]
    for r in table:
        assert abs(float(r["sup_error"]) - oracles.shear_sup_error(float(r["nu"]), 0.5)) <= 1e-6
    echo_text = open("sw.csv.resolved.cfg").read()
    assert "nus = 0.01,0.005,0.0025\n" in echo_text
    before = open("sw.csv", "rb").read()
    assert run(*argv, *FINE) == 0
    assert open("sw.csv", "rb").read() == before


def test_sweep_exit_codes(work):
    shear_file()
    base = ["sweep", "--in", "s.mfld", "--dt", "1e-2", "--T", "0.05", "--out", "sw.csv", *FINE]
    assert run(*base, "--nus", "1e-2,1e-2") == 2
    assert run(*base, "--nus", "") == 2
    assert run(*base[:2], "gone.mfld", *base[3:], "--nus", "1e-2") == 2
    cfl = ["sweep", "--in", "s.mfld", "--dt", "0.25", "--T", "0.5", "--out", "sw.csv", "--nus", "1e-2", *FINE]
    assert run(*cfl) == 1  # CFL in the reference run


def test_norms(work, capsys):
    shear_file(grid="half:8x8x33")
    assert run("norms", "--in", "s.mfld", "--l", "0,1", "--out", "n.csv") == 0
    table = rows("n.csv")
    assert float(table[0]["half_norm"]) == pytest.approx(math.sqrt(2), rel=1e-12)
    assert float(table[0]["cube_norm"]) == pytest.approx(2.0, rel=1e-12)
    assert all(float(r["ratio"]) == pytest.approx(math.sqrt(2), rel=1e-12) for r in table)
    assert run("extend", "--in", "s.mfld", "--out", "c.mfld") == 0
    assert run("norms", "--in", "c.mfld") == 1
    assert run("norms", "--in", "s.mfld", "--l", "x") == 2


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "mirrorflow.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for name in ("check", "extend", "counterexample", "solve", "sweep", "norms"):
        assert name in out.stdout
