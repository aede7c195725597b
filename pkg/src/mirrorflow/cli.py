"""mirrorflow command line.

Exit codes: 0 success, 1 domain or validation failure, 2 I/O or configuration error.
Every command writes a resolved-config echo next to its main output.
"""
from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path
from typing import Any

from . import mfld
from .compatibility import check_compat, counterexample_field
from .config import Option, echo, read_config, resolve
from .errors import DomainError, InputError
from .fields import Geometry, GridSpec
from .pipeline import INITIAL_KINDS, SweepError, inviscid_sweep, make_initial_data, norm_equivalence_report, solve_slip
from .reflection import DEFAULT_STENCIL_ORDER, fit_report, mirror_extend_periodic, mirror_extend_slab, restrict_half
from .solver import SolverConfig, solve, write_trajectory


class Stage(Exception):
    """Wraps an error with the name of the pipeline stage that raised it."""

    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage
        self.exc = exc


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (DomainError, InputError, OSError, ValueError) as exc:
        raise Stage(name, exc) from exc


def _read(path: str):
    return _stage("read", mfld.load, path)


def _write_text(path: str | Path, text: str) -> None:
    def go():
        p = Path(path)
        if p.parent and not p.parent.exists():
            p.parent.mkdir(parents=True)
        p.write_text(text)

    _stage("write", go)


_GRID_RE = re.compile(r"^(cube|half|slab):(\d+)(?:x(\d+)x(\d+))?$")


def parse_grid(text: str, x3_min: float = 0.0, height: float = 1.0) -> GridSpec:
    """``cube:32``, ``half:32x32x17`` or ``slab:32x32x129`` (slab extents from the options)."""
    m = _GRID_RE.match(text.strip())
    if not m:
        raise InputError(f"bad grid {text!r}; expected e.g. half:32x32x17")
    kind, a, b, c = m.groups()
    n1 = int(a)
    n2, n3 = (int(b), int(c)) if b else (None, None)
    try:
        if kind == "cube":
            return GridSpec.periodic_cube(n1, n2, n3)
        if kind == "half":
            return GridSpec.half_cube(n1, n2, n3)
        if n2 is None:
            raise InputError("a slab grid needs n1xn2xn3")
        return GridSpec.slab(n1, n2, n3, x3_min=x3_min, height=height)
    except ValueError as exc:
        raise InputError(f"bad grid {text!r}: {exc}") from None


# -- commands ----------------------------------------------------------------------------


def _stencil():
    return Option("stencil_order", "int", DEFAULT_STENCIL_ORDER, "accuracy order of one-sided stencils")


def _solver_opts():
    return [
        Option("nu", "float", None, "kinematic viscosity", required=True),
        Option("dt", "float", None, "time step", required=True),
        Option("T", "float", None, "final time", required=True),
        Option("snap_every", "int", None, "snapshot cadence in steps (default: about 50 snapshots)"),
        Option("cfl_limit", "float", 0.5, "CFL safety limit"),
        Option("cfl_action", "str", "abort", "abort or warn on CFL violation", choices=("abort", "warn")),
        Option("form", "str", "convective", "nonlinear term form", choices=("convective", "rotational")),
    ]


def _slip_opts():
    return [
        Option("l0", "int", 2, "highest trace order checked (odd orders 3..l0)"),
        Option("tol", "float", 1e-8, "relative tolerance of the boundary checks"),
        _stencil(),
    ]


def cmd_check(o: dict[str, Any]) -> tuple[int, str]:
    f = _read(o["in"])
    report = _stage("check", check_compat, f, o["l0"], o["tol"], o["stencil_order"])
    path = o["report"] or o["in"] + ".check.csv"
    _write_text(path, report.to_csv())
    print(report.summary())
    return (0 if report.passed else 1), path


def cmd_extend(o):
    f = _read(o["in"])
    if o["restrict"]:
        out = _stage("extend", restrict_half, f)
    elif f.grid.geometry is Geometry.HALF_CUBE:
        out = _stage("extend", mirror_extend_periodic, f)
    else:
        out = _stage("extend", mirror_extend_slab, f)
    _stage("write", mfld.save, o["out"], out)
    print(f"wrote {out.grid.describe()} to {o['out']}")
    if o["report"] and not o["restrict"]:
        rep = _stage("fit", fit_report, out, o["max_order"], o["stencil_order"])
        _write_text(o["report"], rep.to_csv())
        bad = rep.failures(o["tol"])
        for e in bad:
            print(f"jump x3={e.plane:+g} component={e.component} order={e.order} jump={e.jump:.3e} scale={e.scale:.3e}")
        print(f"{len(bad)} of {len(rep.entries)} traces do not fit at tol={o['tol']:g}")
    return 0, o["out"]


def cmd_counterexample(o):
    grid = _stage("grid", parse_grid, o["grid"], o["x3_min"], o["height"])
    center = o["center"]
    if center is None:
        c3 = -0.5 if grid.geometry is Geometry.HALF_CUBE else 0.0
        center = [0.0, 0.0, c3]
    if len(center) != 3:
        raise Stage("grid", InputError("center needs three coordinates"))
    v = _stage("counterexample", counterexample_field, o["n"], center, o["radius"], grid)
    _stage("write", mfld.save, o["out"], v)
    print(f"wrote counterexample n={o['n']} on {grid.describe()} to {o['out']}")
    return 0, o["out"]


def cmd_generate(o):
    grid = _stage("grid", parse_grid, o["grid"])
    f = _stage("generate", make_initial_data, o["kind"], grid, o["band"], o["seed"])
    _stage("write", mfld.save, o["out"], f)
    print(f"wrote {o['kind']} on {grid.describe()} to {o['out']}")
    return 0, o["out"]


def _solver_config(o) -> SolverConfig:
    return _stage(
        "config",
        SolverConfig,
        nu=o["nu"],
        dt=o["dt"],
        t_end=o["T"],
        snap_every=o["snap_every"],
        cfl_limit=o["cfl_limit"],
        cfl_action=o["cfl_action"],
        form=o["form"],
    )


def cmd_solve(o):
    f = _read(o["in"])
    cfg = _solver_config(o)
    out = Path(o["out"])
    if f.grid.geometry is Geometry.HALF_CUBE:
        half, report, fit = _stage("solve", solve_slip, f, o["l0"], cfg, o["tol"], o["stencil_order"])
        cube = half.cube
        _stage("write", write_trajectory, cube, out / "cube")
        for i, snap in enumerate(half.snapshots):
            _stage("write", mfld.save, out / f"t_{i:04d}.mfld", snap)
        _write_text(out / "compat.csv", report.to_csv())
        _write_text(out / "fit.csv", fit.to_csv())
        _write_text(out / "diagnostics.csv", cube.diagnostics_csv())
    elif f.grid.geometry is Geometry.PERIODIC_CUBE:
        cube = _stage("solve", solve, f, cfg)
        _stage("write", write_trajectory, cube, out)
    else:
        raise Stage("solve", InputError("solve needs half-cube or periodic-cube data"))
    print(f"{len(cube.snapshots)} snapshots to t={cube.times[-1]!r}; final energy {cube.energy[-1]!r}")
    return 0, str(out / "resolved.cfg")


def cmd_sweep(o):
    f = _read(o["in"])
    cfg = _solver_config(dict(o, nu=0.0))
    try:
        res = inviscid_sweep(
            f, o["nus"], o["l"], cfg, l0=o["l0"], tol=o["tol"], stencil_order=o["stencil_order"], seed=o["seed"],
            descriptor=o["in"],
        )
        code = 0
    except SweepError as exc:
        res = exc.partial
        print(f"sweep: {exc}", file=sys.stderr)
        code = 1
    except (DomainError, ValueError) as exc:
        raise Stage("sweep", exc) from exc
    _write_text(o["out"], res.to_csv())
    for r in res.rows:
        flag = " FAILED" if r.failed else ""
        print(f"nu={r.nu!r} sup_error={r.sup_error!r} final_error={r.final_error!r}{flag}")
    return code, o["out"]


def cmd_norms(o):
    f = _read(o["in"])
    a = _stage("extend", mirror_extend_periodic, f)
    lines = ["l,half_norm,cube_norm,ratio"]
    for l in o["l"]:
        r = _stage("norms", norm_equivalence_report, f, a, l)
        lines.append(f"{l},{r.half_norm!r},{r.cube_norm!r},{r.ratio!r}")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if o["out"]:
        _write_text(o["out"], text)
    return 0, o["out"] or o["in"] + ".norms"


COMMANDS = {
    "check": (
        cmd_check,
        "validate slip and compatibility conditions of half-cube or slab data",
        [Option("in", "str", None, "input MFLD file", required=True), *_slip_opts(),
         Option("report", "str", None, "CSV report path (default <in>.check.csv)")],
    ),
    "extend": (
        cmd_extend,
        "mirror-extend half-cube or slab data (or restrict cube data with --restrict)",
        [Option("in", "str", None, "input MFLD file", required=True),
         Option("out", "str", None, "output MFLD file", required=True),
         Option("report", "str", None, "fit report CSV of the extension"),
         Option("max_order", "int", 3, "highest normal derivative in the fit report"),
         Option("tol", "float", 1e-6, "relative jump threshold for flagged rows"),
         _stencil(),
         Option("restrict", "bool", False, "restrict a periodic-cube field to the half cube")],
    ),
    "counterexample": (
        cmd_counterexample,
        "write the compactly supported field failing only compatibility order n",
        [Option("n", "int", None, "failing order", required=True),
         Option("radius", "float", None, "bump radius", required=True),
         Option("grid", "str", None, "grid, e.g. slab:32x32x129 or half:64x64x33", required=True),
         Option("center", "floats", None, "bump center on a boundary plane (default: origin of the face)"),
         Option("x3_min", "float", 0.0, "slab bottom"),
         Option("height", "float", 1.0, "slab height"),
         Option("out", "str", None, "output MFLD file", required=True)],
    ),
    "generate": (
        cmd_generate,
        "write compatible initial data on the half cube",
        [Option("kind", "str", None, "data kind", required=True, choices=INITIAL_KINDS),
         Option("grid", "str", None, "half-cube grid, e.g. half:32x32x17", required=True),
         Option("band", "int", 4, "highest wavenumber index per axis"),
         Option("seed", "int", 0, "random seed"),
         Option("out", "str", None, "output MFLD file", required=True)],
    ),
    "solve": (
        cmd_solve,
        "solve with slip conditions (half-cube input) or on the periodic cube",
        [Option("in", "str", None, "initial data MFLD file", required=True), *_solver_opts(), *_slip_opts(),
         Option("out", "str", None, "output directory", required=True)],
    ),
    "sweep": (
        cmd_sweep,
        "vanishing-viscosity sweep against one Euler reference",
        [Option("in", "str", None, "half-cube initial data", required=True),
         Option("nus", "floats", None, "comma-separated viscosities", required=True),
         Option("l", "int", 0, "Sobolev index of the error norm"),
         *[op for op in _solver_opts() if op.name != "nu"], *_slip_opts(),
         Option("seed", "int", None, "seed recorded with the results"),
         Option("out", "str", None, "output CSV", required=True)],
    ),
    "norms": (
        cmd_norms,
        "half-cube versus extension Sobolev norms",
        [Option("in", "str", None, "half-cube MFLD file", required=True),
         Option("l", "ints", [0], "comma-separated Sobolev indices"),
         Option("out", "str", None, "output CSV")],
    ),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mirrorflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text, options) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--echo", help="path of the resolved-config echo")
        for op in options:
            # values stay as text so file and flag go through one parser
            if op.kind == "bool":
                p.add_argument(op.flag, dest=op.name, action="store_const", const="true", default=None, help=op.help)
            else:
                p.add_argument(op.flag, dest=op.name, default=None, metavar=op.kind.upper(), help=op.help)
    return parser


def _echo_path(name: str, o: dict, main_output: str) -> Path:
    if name == "solve":
        return Path(o["out"]) / "resolved.cfg"
    return Path(str(main_output) + ".resolved.cfg")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    name = args.command
    fn, _, options = COMMANDS[name]
    try:
        file_values = read_config(args.config) if args.config else {}
        flags = {op.name: getattr(args, op.name) for op in options}
        o = resolve(options, file_values, flags)
        code, main_output = fn(o)
        _write_text(args.echo or _echo_path(name, o, main_output), echo(name, o))
        return code
    except Stage as s:
        exc = s.exc
        code = 1 if isinstance(exc, DomainError) else 2
        print(f"mirrorflow {name}: {s.stage} failed: {exc}", file=sys.stderr)
        return code
    except InputError as exc:
        print(f"mirrorflow {name}: config failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
