"""Validate, mirror-extend, solve on the cube, restrict: slip-boundary flows on the half cube.

Half-cube Sobolev norms are measured on the extension and divided by sqrt(2);
for l = 0 this is exactly the trapezoidal L2 norm over the half cube.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import spectral
from .compatibility import CompatReport, check_compat
from .errors import CompatibilityError, DomainError, GeometryError, MismatchError, ResolutionError
from .fields import Geometry, GridSpec, VectorField, require
from .reflection import (
    DEFAULT_STENCIL_ORDER,
    FitReport,
    cube_symmetry_G,
    fit_report,
    mirror_extend_periodic,
    restrict_half,
)
from .solver import SolverConfig, Trajectory, solve

SQRT2 = math.sqrt(2.0)
INITIAL_KINDS = ("shear_mode", "random_symmetric", "taylor_green_like")


@dataclass
class HalfTrajectory:
    """Restriction of a cube trajectory to the half cube, snapshot by snapshot."""

    grid: GridSpec
    times: list[float]
    steps: list[int]
    snapshots: list[VectorField]
    cube: Trajectory

    @property
    def final(self) -> VectorField:
        return self.snapshots[-1]


def restrict_trajectory(traj: Trajectory) -> HalfTrajectory:
    half = [restrict_half(s) for s in traj.snapshots]
    return HalfTrajectory(traj.grid.half(), list(traj.times), list(traj.steps), half, traj)


def solve_slip(
    f: VectorField,
    l0: int,
    cfg: SolverConfig,
    tol: float = 1e-8,
    stencil_order: int = DEFAULT_STENCIL_ORDER,
) -> tuple[HalfTrajectory, CompatReport, FitReport]:
    """Solve with slip boundary conditions on the half cube.

    The data must pass the slip and compatibility checks up to order ``l0``;
    otherwise :class:`CompatibilityError` carries the failing report.
    """
    require(f.grid, Geometry.HALF_CUBE)
    report = check_compat(f, l0, tol, stencil_order)
    if not report.passed:
        worst = report.failures()[0]
        raise CompatibilityError(
            f"initial data rejected: {worst.kind} order {worst.order} component {worst.component} "
            f"at x3={worst.plane:+g} (residual {worst.residual:.3e}, scale {worst.scale:.3e})",
            report,
        )
    a = mirror_extend_periodic(f)
    fit = fit_report(a, max(l0, 0), stencil_order)
    traj = solve(a, cfg)
    return restrict_trajectory(traj), report, fit


# -- norms -------------------------------------------------------------------------------


def half_sobolev_norm(f: VectorField, l: int) -> float:
    """H^l norm on the half cube, taken as the extension's cube norm over sqrt(2)."""
    require(f.grid, Geometry.HALF_CUBE)
    return spectral.sobolev_norm(mirror_extend_periodic(f), l) / SQRT2


def _multi_indices(order: int):
    for a1 in range(order + 1):
        for a2 in range(order + 1 - a1):
            yield a1, a2, order - a1 - a2


def half_quadrature_norm(f: VectorField, a: VectorField, l: int) -> float:
    """H^l norm over the half cube from derivatives of the extension and trapezoidal x3 weights.

    Uses (1 + |k|^2)^l = sum over multi-indices |alpha| <= l of
    C(l, |alpha|) |alpha|! / alpha! k^(2 alpha).
    """
    grid = f.grid
    q = a.grid.n3 // 4
    w = grid.x3_weights() * grid.spacing[0] * grid.spacing[1]
    wn = spectral.wavenumbers(a.grid)
    u_hat = spectral.rfft3(a.data)
    total = 0.0
    for m in range(l + 1):
        for alpha in _multi_indices(m):
            coef = math.comb(l, m) * math.factorial(m) / math.prod(math.factorial(x) for x in alpha)
            mult = 1.0
            for kap, kd, p in zip(wn.kappa, wn.kd, alpha):
                # odd powers drop the Nyquist mode to stay real
                if p:
                    mult = mult * (1j * (kd if p % 2 else kap)) ** p
            d = spectral.irfft3(mult * u_hat, a.grid.shape)[..., q : 3 * q + 1]
            total += coef * float(np.sum(d**2 * w))
    return math.sqrt(total)


@dataclass(frozen=True)
class NormEquivalence:
    half_norm: float
    cube_norm: float
    ratio: float
    l: int


def norm_equivalence_report(f: VectorField, a: VectorField, l: int) -> NormEquivalence:
    """Half-cube norm of ``f``, cube norm of its extension ``a`` and their ratio.

    A zero field reports ratio 1.
    """
    require(f.grid, Geometry.HALF_CUBE)
    require(a.grid, Geometry.PERIODIC_CUBE)
    if a.grid != f.grid.embedding_cube() or not restrict_half(a).equals(f) or not cube_symmetry_G(a).equals(a):
        raise MismatchError("the cube field is not the mirror extension of the half-cube field")
    if l < 0:
        raise ValueError("l must be nonnegative")
    half = half_quadrature_norm(f, a, l)
    cube = spectral.sobolev_norm(a, l)
    ratio = cube / half if half > 0 else 1.0
    return NormEquivalence(half, cube, ratio, l)


# -- initial data ------------------------------------------------------------------------


def make_initial_data(kind: str, grid: GridSpec, band: int = 4, seed: int = 0) -> VectorField:
    """Divergence-free, G-symmetric, band-limited data restricted to the half cube.

    The cube field is symmetrized with (I + G)/2 and then Leray projected, so
    every odd normal derivative of the tangential components vanishes on the faces.
    """
    require(grid, Geometry.HALF_CUBE)
    cube = grid.embedding_cube()
    if kind not in INITIAL_KINDS:
        raise ValueError(f"unknown initial data kind {kind!r}; choose from {', '.join(INITIAL_KINDS)}")
    if band < 1 or band > min(cube.shape) / 3:
        raise ResolutionError(f"band {band} must lie in [1, {min(cube.shape) // 3}] for grid {cube.shape}")
    if kind == "shear_mode":
        return VectorField.from_function(grid, lambda x1, x2, x3: (np.cos(2 * np.pi * x3) + 0 * x1, 0 * x1, 0 * x1))
    if kind == "taylor_green_like":
        c = np.cos(2 * np.pi * cube.mesh()[2])
        x1, x2, _ = cube.mesh()
        u = np.stack([np.sin(np.pi * x1) * np.cos(np.pi * x2) * c, -np.cos(np.pi * x1) * np.sin(np.pi * x2) * c, 0 * c])
        a = VectorField(cube, u)
    else:
        rng = np.random.default_rng(seed)
        wn = spectral.wavenumbers(cube)
        inside = (np.abs(wn.k[0]) <= band) & (np.abs(wn.k[1]) <= band) & (np.abs(wn.k[2]) <= band)
        shape = (3,) + wn.kappa2.shape
        coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        coeffs *= inside / (1.0 + wn.k[0] ** 2 + wn.k[1] ** 2 + wn.k[2] ** 2)
        a = VectorField(cube, spectral.irfft3(coeffs, cube.shape))
    a = (a + cube_symmetry_G(a)) * 0.5
    a = spectral.to_physical(spectral.leray_project(spectral.to_spectral(a)))
    # projection commutes with G only up to rounding; re-impose exact symmetry
    a = (a + cube_symmetry_G(a)) * 0.5
    peak = a.max_abs()
    if peak > 0 and kind == "random_symmetric":
        a = a * (1.0 / peak)
    return restrict_half(a)


# -- viscosity sweep -----------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    nu: float
    sup_error: float
    final_error: float
    l: int
    T: float
    failed: str = ""


@dataclass
class SweepResult:
    rows: list[SweepRow]
    grid: GridSpec
    dt: float
    seed: int | None = None
    descriptor: str = ""
    reference: HalfTrajectory | None = field(default=None, repr=False)

    @property
    def nus(self) -> list[float]:
        return [r.nu for r in self.rows]

    @property
    def sup_errors(self) -> list[float]:
        return [r.sup_error for r in self.rows]

    @property
    def complete(self) -> bool:
        return not any(r.failed for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["nu", "sup_error", "final_error", "l", "T", "grid", "dt", "seed"])
        seed = "" if self.seed is None else self.seed
        gdesc = "x".join(str(n) for n in self.grid.shape)
        for r in self.rows:
            w.writerow([repr(r.nu), repr(r.sup_error), repr(r.final_error), r.l, repr(r.T), gdesc, repr(self.dt), seed])
        return buf.getvalue()


class SweepError(DomainError):
    def __init__(self, message, partial: SweepResult):
        super().__init__(message)
        self.partial = partial


def max_workers(n_jobs: int) -> int:
    env = os.environ.get("MIRRORFLOW_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            pass
    return max(1, min(cap, n_jobs))


def _errors(run: Trajectory, ref: Trajectory, l: int) -> tuple[float, float]:
    if run.steps != ref.steps:
        raise MismatchError("member and reference trajectories have different snapshot times")
    errs = [spectral.sobolev_norm(u - u0, l) / SQRT2 for u, u0 in zip(run.snapshots, ref.snapshots)]
    return max(errs), errs[-1]


def inviscid_sweep(
    f: VectorField | Sequence[VectorField],
    nus: Sequence[float],
    l: int,
    cfg: SolverConfig,
    *,
    limit: VectorField | None = None,
    l0: int = 2,
    tol: float = 1e-8,
    stencil_order: int = DEFAULT_STENCIL_ORDER,
    seed: int | None = None,
    descriptor: str = "",
) -> SweepResult:
    """sup over snapshot times of ||u_nu - u_0||_{H^l(half cube)} for each nu.

    ``f`` is one half-cube field, or one per entry of ``nus`` with ``limit``
    the inviscid data.  The Euler reference runs once; members run in threads.
    Rows come out in decreasing nu.
    """
    nus = [float(v) for v in nus]
    if not nus or any(v < 0 or not math.isfinite(v) for v in nus):
        raise ValueError("nus must be a nonempty list of finite nonnegative numbers")
    if len(set(nus)) != len(nus):
        raise ValueError("nus contains duplicates")
    if isinstance(f, VectorField):
        data = {nu: f for nu in nus}
        limit = f if limit is None else limit
    else:
        if len(f) != len(nus):
            raise ValueError("need one field per viscosity")
        if limit is None:
            raise ValueError("a nu-dependent family needs the inviscid limit data")
        data = dict(zip(nus, f))
    order = sorted(nus, reverse=True)
    grids = {g.grid for g in data.values()} | {limit.grid}
    if len(grids) != 1:
        raise GeometryError("all sweep members must share one grid")

    ref_half, _, _ = solve_slip(limit, l0, replace(cfg, nu=0.0), tol, stencil_order)
    ref = ref_half.cube

    def member(nu: float) -> SweepRow:
        if nu == 0.0 and data[nu] is limit:
            return SweepRow(nu, 0.0, 0.0, l, cfg.n_steps * cfg.dt)
        try:
            run, _, _ = solve_slip(data[nu], l0, replace(cfg, nu=nu), tol, stencil_order)
            sup, fin = _errors(run.cube, ref, l)
            return SweepRow(nu, sup, fin, l, cfg.n_steps * cfg.dt)
        except DomainError as exc:
            return SweepRow(nu, math.nan, math.nan, l, cfg.n_steps * cfg.dt, failed=str(exc))

    with ThreadPoolExecutor(max_workers=max_workers(len(order))) as pool:
        rows = list(pool.map(member, order))
    result = SweepResult(rows, limit.grid.embedding_cube(), cfg.dt, seed, descriptor, ref_half)
    bad = [r for r in rows if r.failed]
    if bad:
        raise SweepError(f"{len(bad)} sweep member(s) failed; first: nu={bad[0].nu!r}: {bad[0].failed}", result)
    return result
