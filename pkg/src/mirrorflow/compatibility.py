"""Slip-boundary and compatibility checks on half-domain data.

All checks read traces from the data side of each face with one-sided
finite differences and report residuals next to a field scale; a residual
passes when ``residual <= tol * scale``.  Nothing here modifies the data.

Faces: the half cube has x3 = -1/2 and x3 = 1/2; a slab has x3 = 0.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .errors import AlignmentError, GeometryError, ResolutionError, SupportError
from .fields import Geometry, GridSpec, VectorField, require
from .reflection import DEFAULT_STENCIL_ORDER, reflection_planes
from .stencils import Side, band_scale, derivative_at, truncation_bound


@dataclass(frozen=True)
class CompatEntry:
    plane: float
    kind: str  # normal | vorticity | compat | forced | divergence
    order: int
    component: int  # 1..3, or 0 for scalar quantities
    residual: float
    scale: float
    bound: float = 0.0

    def ok(self, tol: float) -> bool:
        return self.residual <= tol * self.scale


SLIP_KINDS = ("normal", "vorticity")


@dataclass
class CompatReport:
    tol_used: float
    l0: int | None = None
    entries: list[CompatEntry] = field(default_factory=list)

    def select(self, *kinds: str) -> list[CompatEntry]:
        return [e for e in self.entries if not kinds or e.kind in kinds]

    @property
    def slip_residuals(self) -> dict:
        out: dict = {}
        for e in self.select(*SLIP_KINDS):
            d = out.setdefault(e.plane, {})
            d[e.kind] = max(d.get(e.kind, 0.0), e.residual)
        return out

    @property
    def compat_residuals(self) -> dict:
        out: dict = {}
        if self.l0 is not None:
            for k in range(3, self.l0 + 1, 2):
                out[k] = {}
        for e in self.select("compat"):
            d = out.setdefault(e.order, {})
            d[e.plane] = max(d.get(e.plane, 0.0), e.residual)
        return out

    @property
    def forced_residuals(self) -> dict:
        out: dict = {}
        for e in self.select("forced", "divergence"):
            key = "divergence" if e.kind == "divergence" else f"d{e.order}u{e.component}"
            out[key] = max(out.get(key, 0.0), e.residual)
        return out

    def failures(self, *kinds: str) -> list[CompatEntry]:
        return [e for e in self.select(*kinds) if not e.ok(self.tol_used)]

    @property
    def slip_ok(self) -> bool:
        return not self.failures(*SLIP_KINDS)

    @property
    def compat_ok(self) -> bool:
        return not self.failures("compat")

    @property
    def forced_ok(self) -> bool:
        return not self.failures("forced", "divergence")

    @property
    def passed(self) -> bool:
        return not self.failures()

    def extend(self, other: "CompatReport") -> "CompatReport":
        self.entries.extend(other.entries)
        if other.l0 is not None:
            self.l0 = other.l0
        return self

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["plane", "kind", "order", "component", "residual", "scale", "ok"])
        for e in self.entries:
            ok = "true" if e.ok(self.tol_used) else "false"
            w.writerow([repr(e.plane), e.kind, e.order, e.component, repr(e.residual), repr(e.scale), ok])
        return buf.getvalue()

    def summary(self) -> str:
        lines = []
        for e in self.entries:
            flag = "ok  " if e.ok(self.tol_used) else "FAIL"
            lines.append(
                f"{flag} x3={e.plane:+g} {e.kind:<10} order={e.order} comp={e.component} "
                f"residual={e.residual:.3e} scale={e.scale:.3e}"
            )
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"{verdict} (tol={self.tol_used:g})")
        return "\n".join(lines)


# -- faces ------------------------------------------------------------------------


def data_faces(grid: GridSpec) -> list[tuple[float, Side]]:
    """Boundary planes of half-domain data and the side the data lies on."""
    n3 = grid.n3
    if grid.geometry is Geometry.HALF_CUBE:
        return [(-0.5, Side(0, 1, n3, n3, False)), (0.5, Side(n3 - 1, -1, n3, n3, False))]
    if grid.geometry is Geometry.SLAB:
        p = grid.plane_index(0.0)
        if p < n3 - 1:
            return [(0.0, Side(p, 1, n3 - p, n3, False))]
        return [(0.0, Side(p, -1, p + 1, n3, False))]
    raise GeometryError("slip checks need half-cube or slab data")


def tangential_derivative(plane: np.ndarray, axis: int, length: float) -> np.ndarray:
    """Spectral derivative along ``axis`` (0 -> x1, 1 -> x2) of a plane or a whole component."""
    n = plane.shape[axis]
    k = np.fft.fftfreq(n, 1.0 / n)
    k[np.abs(k) == n / 2] = 0.0
    kappa = 2 * np.pi / length * k
    shape = [1] * plane.ndim
    shape[axis] = n
    return np.real(np.fft.ifft(1j * kappa.reshape(shape) * np.fft.fft(plane, axis=axis), axis=axis))


def _face_values(data: np.ndarray, side: Side) -> np.ndarray:
    return data[..., side.plane]


def check_slip(f: VectorField, tol: float = 1e-8, stencil_order: int = DEFAULT_STENCIL_ORDER) -> CompatReport:
    """Residuals of u3 = 0 and d3 u_j = d_j u3 (j = 1, 2) on every face.

    The normal residual is scaled by max |u|; the vorticity residual by the
    largest d3 u_j within one stencil width of the face or d_j u3 on it.
    """
    h = f.grid.spacing[2]
    q = stencil_order
    scale = f.max_abs()
    report = CompatReport(tol)
    for c, side in data_faces(f.grid):
        u3 = _face_values(f.data[2], side)
        report.entries.append(CompatEntry(c, "normal", 0, 3, float(np.max(np.abs(u3))), scale))
        for j in range(2):
            d3u = derivative_at(f.data[j], side, 1, q, h)
            dju3 = tangential_derivative(u3, j, f.grid.lengths[j])
            res = float(np.max(np.abs(d3u - dju3)))
            sc = max(band_scale(f.data[j], side, 1, q, h), float(np.max(np.abs(dju3))))
            bound = truncation_bound(f.data[j], side, 1, q, h)
            report.entries.append(CompatEntry(c, "vorticity", 1, j + 1, res, sc, bound))
    return report


def check_compat(
    f: VectorField, l0: int, tol: float = 1e-8, stencil_order: int = DEFAULT_STENCIL_ORDER
) -> CompatReport:
    """Slip residuals plus d3^k u_j on every face for odd k in [3, l0], j = 1, 2.

    For ``l0 <= 2`` there are no compatibility conditions and the compat part
    passes vacuously.
    """
    if l0 < 0:
        raise ValueError("l0 must be nonnegative")
    h = f.grid.spacing[2]
    q = stencil_order
    report = check_slip(f, tol, stencil_order)
    report.l0 = l0
    for k in range(3, l0 + 1, 2):
        for c, side in data_faces(f.grid):
            if k + q > side.available:
                raise ResolutionError(f"order {k} at accuracy {q} needs {k + q} planes, have {side.available}")
            for j in range(2):
                d = derivative_at(f.data[j], side, k, q, h)
                res = float(np.max(np.abs(d)))
                sc = band_scale(f.data[j], side, k, q, h)
                bound = truncation_bound(f.data[j], side, k, q, h)
                report.entries.append(CompatEntry(c, "compat", k, j + 1, res, sc, bound))
    return report


def _fits_by_zero(comp, above, below, m, q, h, c, kind, component):
    up = derivative_at(comp, above, m, q, h)
    dn = derivative_at(comp, below, m, q, h)
    res = float(max(np.max(np.abs(up)), np.max(np.abs(dn))))
    sc = max(band_scale(comp, above, m, q, h), band_scale(comp, below, m, q, h))
    bound = max(truncation_bound(comp, above, m, q, h), truncation_bound(comp, below, m, q, h))
    return CompatEntry(c, kind, m, component, res, sc, bound)


def forced_traces_report(
    f: VectorField,
    extended: VectorField,
    l0: int = 2,
    tol: float = 1e-8,
    stencil_order: int = DEFAULT_STENCIL_ORDER,
) -> CompatReport:
    """Traces that slip plus zero divergence force to vanish on the extension.

    Reports a3, d3 a_j (j = 1, 2) and d3^2 a3 on both sides of each face, the
    order k+1 normal trace of a3 for every odd k with k + 1 <= l0, and the
    divergence trace of ``f`` itself.  A failing divergence is reported, not raised.
    """
    expected = {Geometry.HALF_CUBE: Geometry.PERIODIC_CUBE, Geometry.SLAB: Geometry.SLAB}
    if expected.get(f.grid.geometry) is not extended.grid.geometry:
        raise GeometryError("extended field does not match the data geometry")
    h = extended.grid.spacing[2]
    q = stencil_order
    report = CompatReport(tol, l0)
    for c, above, below in reflection_planes(extended.grid):
        a = extended.data
        report.entries.append(_fits_by_zero(a[2], above, below, 0, q, h, c, "forced", 3))
        for j in range(2):
            report.entries.append(_fits_by_zero(a[j], above, below, 1, q, h, c, "forced", j + 1))
        report.entries.append(_fits_by_zero(a[2], above, below, 2, q, h, c, "forced", 3))
        for k in range(3, l0, 2):
            report.entries.append(_fits_by_zero(a[2], above, below, k + 1, q, h, c, "forced", 3))
    hf = f.grid.spacing[2]
    for c, side in data_faces(f.grid):
        d1 = tangential_derivative(_face_values(f.data[0], side), 0, f.grid.lengths[0])
        d2 = tangential_derivative(_face_values(f.data[1], side), 1, f.grid.lengths[1])
        d3 = derivative_at(f.data[2], side, 1, q, hf)
        div = d1 + d2 + d3
        sc = float(np.max(np.abs(d1) + np.abs(d2) + np.abs(d3)))
        report.entries.append(CompatEntry(c, "divergence", 1, 0, float(np.max(np.abs(div))), sc))
    return report


def cube_slip_residuals(a: VectorField) -> tuple[float, float]:
    """Relative max |a3| and max |omega x n| on the faces x3 = +-1/2 of a cube field.

    Derivatives are spectral on the cube, so for a smooth G-invariant field this
    measures the slip conditions of its restriction without stencil error.
    """
    require(a.grid, Geometry.PERIODIC_CUBE)
    planes = [a.grid.plane_index(c) for c in (-0.5, 0.5)]
    omega = spectral.curl(a).data
    u_scale = a.max_abs()
    w_scale = float(np.max(np.abs(omega)))
    normal = max(float(np.max(np.abs(a.data[2][..., p]))) for p in planes)
    tang = max(float(np.max(np.abs(omega[:2][..., p]))) for p in planes)
    return (normal / u_scale if u_scale else normal, tang / w_scale if w_scale else tang)


# -- counterexample -----------------------------------------------------------------

_S_CUT = 1 - 1e-6  # exp(1 - 1/(1-s)) underflows to 0 beyond this


def bump(x1, x2, x3, center, radius):
    """rho = exp(1 - 1/(1 - |x-c|^2/r^2)) in the ball, 0 outside; with gradient and Hessian."""
    d = [np.asarray(x, float) - c for x, c in zip((x1, x2, x3), center)]
    r2 = radius**2
    s = (d[0] ** 2 + d[1] ** 2 + d[2] ** 2) / r2
    inside = s < _S_CUT
    si = np.where(inside, s, 0.0)
    one_m = 1.0 - si
    rho = np.where(inside, np.exp(1.0 - 1.0 / one_m), 0.0)
    g1 = -1.0 / one_m**2
    g2 = -2.0 / one_m**3
    ds = [2 * di / r2 for di in d]
    grad = [rho * g1 * dsi for dsi in ds]
    hess = [[rho * ((g2 + g1**2) * ds[i] * ds[j] + (g1 * 2 / r2 if i == j else 0.0)) for j in range(3)] for i in range(3)]
    return rho, grad, hess


def _counterexample_setup(n, center, radius, grid):
    if n < 2 or int(n) != n:
        raise ValueError(f"n must be an integer >= 2, got {n}")
    if radius <= 0:
        raise ValueError("radius must be positive")
    if grid.geometry not in (Geometry.SLAB, Geometry.HALF_CUBE):
        raise GeometryError("the counterexample lives on a slab or half cube")
    center = tuple(float(c) for c in center)
    if not any(abs(center[2] - p) < 1e-12 for p in grid.boundary_planes):
        raise AlignmentError(f"center x3={center[2]} is not on a boundary plane")
    for i in range(2):
        if abs(center[i]) + radius > grid.lengths[i] / 2 + 1e-12:
            raise SupportError(f"bump leaves the periodic box along x{i + 1}")
    _, _, x3 = grid.axes()
    for b in (x3[0], x3[-1]):
        if abs(b - center[2]) > 1e-12 and abs(b - center[2]) < radius - 1e-12:
            raise SupportError(f"bump support reaches the boundary x3={b:g}")
    for i, d in enumerate(grid.spacing):
        if radius / d < 8:
            raise ResolutionError(f"only {radius / d:.1f} points across the radius along x{i + 1}; need 8")
    return center


def counterexample_parts(n: int, center, radius: float, grid: GridSpec):
    """Velocity and analytic Jacobian of v = curl(rho * t^(n+1) (1, 1, 0)), t = x3 - c3."""
    center = _counterexample_setup(n, center, radius, grid)
    x1, x2, x3 = grid.mesh()
    rho, grad, hess = bump(x1, x2, x3, center, radius)
    t = x3 - center[2]
    p = n + 1
    tp, tp1 = t**p, t ** (p - 1)
    tp2 = t ** (p - 2)
    # phi = rho t^p
    phi = [grad[0] * tp, grad[1] * tp, grad[2] * tp + p * rho * tp1]
    phi_13 = hess[0][2] * tp + p * grad[0] * tp1
    phi_23 = hess[1][2] * tp + p * grad[1] * tp1
    phi_33 = hess[2][2] * tp + 2 * p * grad[2] * tp1 + p * (p - 1) * rho * tp2
    phi_11 = hess[0][0] * tp
    phi_12 = hess[0][1] * tp
    phi_22 = hess[1][1] * tp
    v = np.stack([-phi[2], phi[2], phi[0] - phi[1]])
    jac = np.stack(
        [
            np.stack([-phi_13, -phi_23, -phi_33]),
            np.stack([phi_13, phi_23, phi_33]),
            np.stack([phi_11 - phi_12, phi_12 - phi_22, phi_13 - phi_23]),
        ]
    )
    return v, jac


def counterexample_field(n: int, center, radius: float, grid: GridSpec) -> VectorField:
    """Divergence-free field meeting slip and every compatibility order below n, failing order n.

    On the face, d3^n v = rho * (n+1)! * (-1, 1, 0) while all lower normal
    derivatives vanish.
    """
    v, _ = counterexample_parts(n, center, radius, grid)
    return VectorField(grid, v)


def counterexample_divergence(n: int, center, radius: float, grid: GridSpec) -> tuple[float, float]:
    """(max |div v|, max |grad v|) from the analytic Jacobian."""
    _, jac = counterexample_parts(n, center, radius, grid)
    div = jac[0, 0] + jac[1, 1] + jac[2, 2]
    return float(np.max(np.abs(div))), float(np.max(np.abs(jac)))
