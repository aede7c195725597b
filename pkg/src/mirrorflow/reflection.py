"""Mirror reflections, mirror extensions and boundary-trace fitting diagnostics.

The reflection about the plane x3 = c maps a vector field ``v`` to::

    (T v)(x) = (v1(x'), v2(x'), -v3(x')),   x' = (x1, x2, 2c - x3)

On the periodic cube the reflections about x3 = 1/2 and x3 = -1/2 coincide
(x3 -> 1 - x3 mod 2); that involution is called ``G`` here and its fixed points
are exactly the double-mirror extensions of half-cube data.

All maps permute samples and flip signs; nothing is interpolated, so every
involution is bit-exact.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .errors import AlignmentError, GeometryError, ResolutionError
from .fields import Geometry, GridSpec, VectorField, require
from .stencils import Side, band_scale, derivative_at, limit_from_side, truncation_bound

DEFAULT_STENCIL_ORDER = 6


def _reflection_index(grid: GridSpec, c: float) -> np.ndarray:
    d3 = grid.spacing[2]
    t = 2 * (c - grid.x3_min) / d3
    J = int(round(t))
    if abs(t - J) > 1e-9:
        raise AlignmentError(f"reflection plane x3={c} does not map grid planes onto grid planes")
    j = np.arange(grid.n3)
    if grid.periodic_x3:
        return (J - j) % grid.n3
    if J != grid.n3 - 1:
        raise AlignmentError(f"grid is not symmetric about x3={c}")
    return J - j


def reflect_scalar(p: np.ndarray, grid: GridSpec, plane: float = 0.0) -> np.ndarray:
    return np.asarray(p)[..., _reflection_index(grid, plane)]


def reflect_T(f: VectorField, plane: float = 0.0) -> VectorField:
    """Mirror ``f`` about x3 = ``plane``: tangential components even, normal odd."""
    out = f.data[..., _reflection_index(f.grid, plane)].copy()
    out[2] = -out[2]
    return VectorField(f.grid, out)


def cube_symmetry_G(f: VectorField) -> VectorField:
    """x3 -> 1 - x3 (mod 2) on the periodic cube, third component negated."""
    require(f.grid, Geometry.PERIODIC_CUBE)
    return reflect_T(f, 0.5)


def mirror_extend_slab(f: VectorField) -> VectorField:
    """Extend data on a slab x3 in [0, h] to the symmetric slab [-h, h]."""
    g = f.grid
    require(g, Geometry.SLAB)
    if g.plane_index(0.0) != 0:
        raise AlignmentError("mirror extension needs a slab whose lowest plane is x3 = 0")
    h = g.lengths[2]
    ext = GridSpec.slab(g.n1, g.n2, 2 * g.n3 - 1, x3_min=-h, height=2 * h, tangential=g.lengths[:2])
    below = f.data[..., :0:-1].copy()
    below[2] = -below[2]
    return VectorField(ext, np.concatenate([below, f.data], axis=-1))


def mirror_extend_periodic(f: VectorField) -> VectorField:
    """Double mirror of half-cube data onto the periodic cube.

    Branches, with ``a~`` the half-cube data::

        x3 in [-1/2, 1/2]:  a = a~
        x3 in (1/2, 1):     a_i(x) = a~_i(x1, x2, 1 - x3),  a_3 = -a~_3(x1, x2, 1 - x3)
        x3 in [-1, -1/2):   a_i(x) = a~_i(x1, x2, -1 - x3), a_3 = -a~_3(x1, x2, -1 - x3)

    On the faces themselves the half-cube samples are used unchanged, so the
    result is G-invariant exactly when a~_3 vanishes on both faces.
    """
    require(f.grid, Geometry.HALF_CUBE)
    cube = f.grid.embedding_cube()
    n3 = cube.n3
    q = n3 // 4
    if f.grid.n3 != 2 * q + 1:
        raise AlignmentError("half cube does not embed in the periodic cube")
    out = np.empty((3,) + cube.shape)
    out[..., q : 3 * q + 1] = f.data
    # x3 in (1/2, 1): 1 - x3 lands on half index 5q - j
    j = np.arange(3 * q + 1, n3)
    out[..., j] = f.data[..., 5 * q - j]
    out[2, ..., j] = -f.data[2, ..., 5 * q - j]
    # x3 in [-1, -1/2): -1 - x3 lands on half index q - j
    j = np.arange(0, q)
    out[..., j] = f.data[..., q - j]
    out[2, ..., j] = -f.data[2, ..., q - j]
    return VectorField(cube, out)


def restrict_half(a: VectorField) -> VectorField:
    """Copy the samples with x3 in [-1/2, 1/2]."""
    require(a.grid, Geometry.PERIODIC_CUBE)
    half = a.grid.half()
    q = a.grid.n3 // 4
    return VectorField(half, a.data[..., q : 3 * q + 1])


def symmetry_defect(a: VectorField, eps: float = 1e-300) -> float:
    """||a - G a|| / max(||a||, eps) in the discrete L2 norm."""
    diff = a.data - cube_symmetry_G(a).data
    num = float(np.sqrt(np.sum(diff**2)))
    den = float(np.sqrt(np.sum(a.data**2)))
    return num / max(den, eps)


# -- fitting diagnostics ----------------------------------------------------------


@dataclass(frozen=True)
class FitEntry:
    plane: float
    component: int  # 1, 2 or 3
    order: int
    jump: float
    scale: float
    stencil_order: int
    bound: float = 0.0  # truncation bound of the jump (both sides)

    def fits(self, tol: float) -> bool:
        return self.jump <= tol * self.scale


@dataclass
class FitReport:
    entries: list[FitEntry] = field(default_factory=list)

    def entry(self, plane: float, component: int, order: int) -> FitEntry:
        for e in self.entries:
            if e.plane == plane and e.component == component and e.order == order:
                return e
        raise KeyError((plane, component, order))

    def select(self, orders=None, components=None) -> list[FitEntry]:
        return [
            e
            for e in self.entries
            if (orders is None or e.order in orders) and (components is None or e.component in components)
        ]

    def failures(self, tol: float, orders=None) -> list[FitEntry]:
        return [e for e in self.select(orders) if not e.fits(tol)]

    def fits(self, tol: float, orders=None) -> bool:
        return not self.failures(tol, orders)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["plane", "component", "order", "jump", "scale", "stencil_order"])
        for e in self.entries:
            w.writerow([repr(e.plane), e.component, e.order, repr(e.jump), repr(e.scale), e.stencil_order])
        return buf.getvalue()


def reflection_planes(grid: GridSpec) -> list[tuple[float, Side, Side]]:
    """Planes where a field built by mirroring may fail to fit, with both sides."""
    n3 = grid.n3
    if grid.geometry is Geometry.PERIODIC_CUBE:
        if n3 % 4:
            raise AlignmentError(f"faces x3=+-1/2 are not grid planes for n3={n3}")
        avail = n3 // 2 + 1
        out = []
        for c in (-0.5, 0.5):
            p = grid.plane_index(c)
            out.append((c, Side(p, 1, avail, n3, True), Side(p, -1, avail, n3, True)))
        return out
    if grid.geometry is Geometry.SLAB:
        p = grid.plane_index(0.0)
        return [(0.0, Side(p, 1, n3 - p, n3, False), Side(p, -1, p + 1, n3, False))]
    raise GeometryError("fit reports need a periodic cube or a slab containing x3 = 0 in its interior")


def fit_report(a: VectorField, max_order: int, stencil_order: int = DEFAULT_STENCIL_ORDER) -> FitReport:
    """Jumps between one-sided traces of d^m a_j / dx3^m across each reflection plane.

    Only pure normal derivatives are examined: tangential derivatives of a
    trace that fits also fit.
    """
    if max_order < 0:
        raise ValueError("max_order must be nonnegative")
    h = a.grid.spacing[2]
    q = stencil_order
    report = FitReport()
    for c, above, below in reflection_planes(a.grid):
        need = max(max_order + q, q + 3)
        for side in (above, below):
            if need > side.available:
                raise ResolutionError(
                    f"order {max_order} at accuracy {q} needs {need} planes on each side of x3={c}, "
                    f"have {side.available}"
                )
        for j in range(3):
            comp = a.data[j]
            for m in range(max_order + 1):
                scale = max(band_scale(comp, above, m, q, h), band_scale(comp, below, m, q, h))
                if m == 0:
                    # both sides share the plane sample, so compare the limits from either side;
                    # q + 2 nodes give the polynomial exactness of the order-2 stencil
                    t_up, b_up = limit_from_side(comp, above, q + 2)
                    t_dn, b_dn = limit_from_side(comp, below, q + 2)
                    bound = b_up + b_dn
                else:
                    t_up = derivative_at(comp, above, m, q, h)
                    t_dn = derivative_at(comp, below, m, q, h)
                    bound = truncation_bound(comp, above, m, q, h) + truncation_bound(comp, below, m, q, h)
                jump = float(np.max(np.abs(t_up - t_dn)))
                report.entries.append(FitEntry(c, j + 1, m, jump, scale, q, bound))
    return report


# -- symmetric gradient ---------------------------------------------------------------


@dataclass(frozen=True)
class SymmetricGradientReport:
    max_deviation: float
    relative_deviation: float
    signs: dict
    deviations: dict

    def holds(self, tol: float) -> bool:
        return self.relative_deviation <= tol


def symmetric_gradient(f: VectorField) -> np.ndarray:
    g = spectral.velocity_gradient(f)
    return 0.5 * (g + g.transpose(1, 0, 2, 3, 4))


def check_symmetric_gradient_rule(f: VectorField, plane: float = 0.0) -> SymmetricGradientReport:
    """Compare D(T u)_ij(x) with +-D(u)_ij(x'), sign - iff index 3 appears exactly once."""
    require(f.grid, Geometry.PERIODIC_CUBE)
    idx = _reflection_index(f.grid, plane)
    d_u = symmetric_gradient(f)
    d_tu = symmetric_gradient(reflect_T(f, plane))
    signs, devs = {}, {}
    worst = 0.0
    for i in range(3):
        for j in range(3):
            s = -1.0 if (i == 2) != (j == 2) else 1.0
            dev = float(np.max(np.abs(d_tu[i, j] - s * d_u[i, j][..., idx])))
            signs[(i + 1, j + 1)] = int(s)
            devs[(i + 1, j + 1)] = dev
            worst = max(worst, dev)
    scale = float(np.max(np.abs(d_u)))
    rel = worst / scale if scale > 0 else worst
    return SymmetricGradientReport(worst, rel, signs, devs)
