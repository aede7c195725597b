"""Grids and sampled vector fields.

Three geometries are supported:

* ``PERIODIC_CUBE``: the cube (-1, 1)^3, periodic in every direction.  Samples
  sit at ``-1 + j*dx`` and exclude the duplicate endpoint.
* ``HALF_CUBE``: (-1, 1)^2 x [-1/2, 1/2], periodic in x1 and x2, with the two
  slip faces x3 = -1/2 and x3 = 1/2 both included as grid planes.
* ``SLAB``: periodic tangential box times a closed interval in x3 that contains
  the flat boundary x3 = 0 as a grid plane.

Arrays are stored as ``data[c, i1, i2, i3]`` (component first, then x1, x2, x3).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AlignmentError, GeometryError


class Geometry(enum.IntEnum):
    PERIODIC_CUBE = 0
    HALF_CUBE = 1
    SLAB = 2


_ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    geometry: Geometry
    n1: int
    n2: int
    n3: int
    lengths: tuple[float, float, float]
    x3_min: float

    def __post_init__(self):
        object.__setattr__(self, "geometry", Geometry(self.geometry))
        object.__setattr__(self, "lengths", tuple(float(v) for v in self.lengths))
        object.__setattr__(self, "x3_min", float(self.x3_min))
        for name in ("n1", "n2", "n3"):
            n = getattr(self, name)
            if int(n) != n or n < 2:
                raise ValueError(f"{name} must be an integer >= 2, got {n}")
            object.__setattr__(self, name, int(n))
        for name in ("n1", "n2"):
            n = getattr(self, name)
            if n < 4 or n % 2:
                raise ValueError(f"{name} must be even and >= 4, got {n}")
        if any(v <= 0 for v in self.lengths):
            raise ValueError(f"lengths must be positive, got {self.lengths}")
        if self.geometry is Geometry.PERIODIC_CUBE:
            if self.n3 < 4 or self.n3 % 2:
                raise ValueError(f"n3 must be even and >= 4 on the periodic cube, got {self.n3}")
            if self.lengths != (2.0, 2.0, 2.0) or self.x3_min != -1.0:
                raise ValueError("the periodic cube is fixed to (-1, 1)^3")
        elif self.geometry is Geometry.HALF_CUBE:
            if self.n3 < 3 or self.n3 % 2 == 0:
                raise ValueError(
                    f"half-cube n3 must be odd and >= 3 so both faces embed in the cube, got {self.n3}"
                )
            if self.lengths != (2.0, 2.0, 1.0) or self.x3_min != -0.5:
                raise ValueError("the half cube is fixed to (-1, 1)^2 x [-1/2, 1/2]")
        else:
            if self.n3 < 2:
                raise ValueError("a slab needs at least two x3 planes")
            # x3 = 0 must be a grid plane
            self.plane_index(0.0)

    # -- constructors -----------------------------------------------------

    @classmethod
    def periodic_cube(cls, n1: int, n2: int | None = None, n3: int | None = None) -> "GridSpec":
        n2 = n1 if n2 is None else n2
        n3 = n1 if n3 is None else n3
        return cls(Geometry.PERIODIC_CUBE, n1, n2, n3, (2.0, 2.0, 2.0), -1.0)

    @classmethod
    def half_cube(cls, n1: int, n2: int | None = None, n3: int | None = None) -> "GridSpec":
        """``n3`` counts x3 points including both faces (must be odd)."""
        n2 = n1 if n2 is None else n2
        n3 = n1 // 2 + 1 if n3 is None else n3
        return cls(Geometry.HALF_CUBE, n1, n2, n3, (2.0, 2.0, 1.0), -0.5)

    @classmethod
    def slab(
        cls,
        n1: int,
        n2: int,
        n3: int,
        x3_min: float = 0.0,
        height: float = 1.0,
        tangential: tuple[float, float] = (2.0, 2.0),
    ) -> "GridSpec":
        return cls(Geometry.SLAB, n1, n2, n3, (tangential[0], tangential[1], height), x3_min)

    # -- geometry ---------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    @property
    def periodic_x3(self) -> bool:
        return self.geometry is Geometry.PERIODIC_CUBE

    @property
    def spacing(self) -> tuple[float, float, float]:
        L1, L2, L3 = self.lengths
        d3 = L3 / self.n3 if self.periodic_x3 else L3 / (self.n3 - 1)
        return (L1 / self.n1, L2 / self.n2, d3)

    @property
    def volume(self) -> float:
        L1, L2, L3 = self.lengths
        return L1 * L2 * L3

    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        L1, L2, _ = self.lengths
        d1, d2, d3 = self.spacing
        x1 = -L1 / 2 + d1 * np.arange(self.n1)
        x2 = -L2 / 2 + d2 * np.arange(self.n2)
        x3 = self.x3_min + d3 * np.arange(self.n3)
        return x1, x2, x3

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    @property
    def boundary_planes(self) -> tuple[float, ...]:
        if self.geometry is Geometry.PERIODIC_CUBE:
            return ()
        if self.geometry is Geometry.HALF_CUBE:
            return (-0.5, 0.5)
        return (0.0,)

    def plane_index(self, c: float) -> int:
        """Index of the x3 grid plane at ``c``; raises if ``c`` is off-grid."""
        d3 = self.spacing[2]
        t = (c - self.x3_min) / d3
        j = int(round(t))
        if abs(t - j) > _ALIGN_TOL:
            raise AlignmentError(f"plane x3={c} is not a grid plane")
        if self.periodic_x3:
            return j % self.n3
        if not 0 <= j < self.n3:
            raise AlignmentError(f"plane x3={c} lies outside the grid")
        return j

    def embedding_cube(self) -> "GridSpec":
        """Periodic cube whose middle half is this half cube."""
        if self.geometry is not Geometry.HALF_CUBE:
            raise GeometryError("only a half cube embeds in the periodic cube")
        return GridSpec.periodic_cube(self.n1, self.n2, 2 * (self.n3 - 1))

    def half(self) -> "GridSpec":
        """Half cube sitting in the middle of this periodic cube."""
        if self.geometry is not Geometry.PERIODIC_CUBE:
            raise GeometryError("only the periodic cube has a half cube")
        if self.n3 % 4:
            raise AlignmentError(f"faces x3=+-1/2 are not grid planes for n3={self.n3}")
        return GridSpec.half_cube(self.n1, self.n2, self.n3 // 2 + 1)

    def x3_weights(self) -> np.ndarray:
        """Quadrature weights along x3 (rectangle if periodic, trapezoid otherwise)."""
        d3 = self.spacing[2]
        w = np.full(self.n3, d3)
        if not self.periodic_x3:
            w[0] = w[-1] = d3 / 2
        return w

    def describe(self) -> str:
        return f"{self.geometry.name}:{self.n1}x{self.n2}x{self.n3}"


def require(grid: GridSpec, *geometries: Geometry) -> None:
    if grid.geometry not in geometries:
        names = ", ".join(g.name for g in geometries)
        raise GeometryError(f"expected {names} grid, got {grid.geometry.name}")


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class VectorField:
    """Three real components sampled on a grid."""

    grid: GridSpec
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.shape != (3,) + self.grid.shape:
            raise ValueError(f"data shape {arr.shape} does not match grid {(3,) + self.grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("vector field contains NaN or Inf")
        if arr.flags.writeable:
            arr = _frozen(arr)
        object.__setattr__(self, "data", arr)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "VectorField":
        return cls(grid, np.zeros((3,) + grid.shape))

    @classmethod
    def from_components(cls, grid: GridSpec, u1, u2, u3) -> "VectorField":
        shape = grid.shape
        return cls(grid, np.stack([np.broadcast_to(np.asarray(u, float), shape) for u in (u1, u2, u3)]))

    @classmethod
    def from_function(cls, grid: GridSpec, fn: Callable) -> "VectorField":
        """``fn(x1, x2, x3)`` on the broadcast mesh returns the three components."""
        return cls.from_components(grid, *fn(*grid.mesh()))

    def __getitem__(self, c: int) -> np.ndarray:
        return self.data[c]

    def replace(self, data) -> "VectorField":
        return VectorField(self.grid, data)

    def _check(self, other: "VectorField") -> None:
        if other.grid != self.grid:
            raise GeometryError("fields live on different grids")

    def __add__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(self.grid, self.data + other.data)

    def __sub__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(self.grid, self.data - other.data)

    def __mul__(self, alpha: float) -> "VectorField":
        return VectorField(self.grid, alpha * self.data)

    __rmul__ = __mul__

    def __neg__(self) -> "VectorField":
        return VectorField(self.grid, -self.data)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    def l2_norm(self) -> float:
        """L2 norm by quadrature (trapezoid in x3 on non-periodic grids)."""
        d1, d2, _ = self.grid.spacing
        sq = np.sum(self.data**2, axis=(0, 1, 2))
        return float(np.sqrt(d1 * d2 * np.dot(sq, self.grid.x3_weights())))

    def equals(self, other: "VectorField") -> bool:
        """Bit-exact comparison."""
        return self.grid == other.grid and np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class SpectralVectorField:
    """Unnormalized real-to-complex Fourier coefficients on the periodic cube.

    ``coeffs[c, k1, k2, k3]`` with the x1 axis halved (``n1 // 2 + 1`` entries);
    k2 and k3 follow the usual FFT ordering.
    """

    grid: GridSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        require(self.grid, Geometry.PERIODIC_CUBE)
        arr = np.asarray(self.coeffs, dtype=np.complex128)
        expected = (3, self.grid.n1 // 2 + 1, self.grid.n2, self.grid.n3)
        if arr.shape != expected:
            raise ValueError(f"coefficient shape {arr.shape} does not match {expected}")
        if arr.flags.writeable:
            arr = arr.copy()
            arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)
