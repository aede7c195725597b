"""One-sided finite-difference estimates of normal derivatives at a grid plane.

A stencil of accuracy order ``q`` for the ``m``-th derivative uses the ``m + q``
consecutive planes starting at the boundary plane and moving into one side.
Weights are computed exactly (Fornberg's recursion in rational arithmetic) and
only then rounded to float, so high-order stencils stay clean.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ResolutionError

EPS = np.finfo(float).eps


def fornberg(z, xs, max_order: int) -> list[list[Fraction]]:
    """Exact weights ``c[j][m]`` for derivative ``m`` at ``z`` from nodes ``xs``."""
    z = Fraction(z)
    xs = [Fraction(x) for x in xs]
    n = len(xs)
    c = [[Fraction(0)] * (max_order + 1) for _ in range(n)]
    c[0][0] = Fraction(1)
    c1 = Fraction(1)
    c4 = xs[0] - z
    for i in range(1, n):
        mn = min(i, max_order)
        c2 = Fraction(1)
        c5 = c4
        c4 = xs[i] - z
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2
            for k in range(mn, 0, -1):
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3
            c[j][0] = c4 * c[j][0] / c3
        c1 = c2
    return c


@functools.lru_cache(maxsize=None)
def _exact_weights(m: int, q: int) -> tuple[Fraction, ...]:
    c = fornberg(0, range(m + q), m)
    return tuple(row[m] for row in c)


@functools.lru_cache(maxsize=None)
def one_sided_weights(m: int, q: int) -> np.ndarray:
    """Unit-spacing weights on nodes 0, 1, ..., m+q-1 for the m-th derivative at 0."""
    if m < 0 or q < 1:
        raise ValueError(f"need derivative order >= 0 and accuracy order >= 1, got m={m}, q={q}")
    w = np.array([float(x) for x in _exact_weights(m, q)])
    w.flags.writeable = False
    return w


@functools.lru_cache(maxsize=None)
def error_constant(m: int, q: int) -> float:
    """Leading truncation coefficient: estimate - exact ~ C * h^q * f^(m+q)."""
    p = m + q
    s = sum(w * Fraction(i) ** p for i, w in enumerate(_exact_weights(m, q)))
    return float(s / math.factorial(p))


@dataclass(frozen=True)
class Side:
    """A plane index and a direction (+1 toward increasing x3, -1 toward decreasing)."""

    plane: int
    direction: int
    available: int  # planes usable on this side, the plane itself included
    n3: int
    periodic: bool

    def indices(self, start: int, count: int) -> np.ndarray:
        idx = self.plane + self.direction * (start + np.arange(count))
        if self.periodic:
            return idx % self.n3
        return idx


def _need(side: Side, m: int, q: int) -> None:
    if m + q > side.available:
        raise ResolutionError(
            f"derivative order {m} at accuracy {q} needs {m + q} planes, only {side.available} available"
        )


def derivative_at(data: np.ndarray, side: Side, m: int, q: int, h: float, offset: int = 0) -> np.ndarray:
    """One-sided estimate of d^m/dx3^m at ``offset`` planes away from the side's plane.

    ``data`` has x3 as its last axis; the result drops that axis.
    """
    _need(side, m, q)
    if offset + m + q > side.available:
        raise ResolutionError("stencil runs past the available planes")
    w = one_sided_weights(m, q)
    vals = np.take(data, side.indices(offset, m + q), axis=-1)
    return (vals @ w) / (side.direction * h) ** m


def band_width(side: Side, m: int, q: int) -> int:
    _need(side, m, q)
    return min(m + q, side.available - (m + q) + 1)


def band_scale(data: np.ndarray, side: Side, m: int, q: int, h: float) -> float:
    """max |d^m f| over the planes covered by one stencil width, estimated from the same side."""
    best = 0.0
    for j in range(band_width(side, m, q)):
        best = max(best, float(np.max(np.abs(derivative_at(data, side, m, q, h, offset=j)))))
    return best


def truncation_bound(data: np.ndarray, side: Side, m: int, q: int, h: float) -> float:
    """Estimated error of :func:`derivative_at` at the plane.

    Sum of the leading truncation term, with f^(m+q) taken from a first-order
    one-sided difference over one stencil width, and a rounding term
    4 eps * sum|w_i f_i| / h^m.
    """
    _need(side, m, q)
    w = one_sided_weights(m, q)
    vals = np.take(data, side.indices(0, m + q), axis=-1)
    rounding = 4 * EPS * float(np.max(np.abs(vals) @ np.abs(w))) / h**m
    p = m + q
    high = 0.0
    if p + 1 <= side.available:
        wp = one_sided_weights(p, 1)
        span = min(m + q, side.available - p)
        for j in range(span):
            v = np.take(data, side.indices(j, p + 1), axis=-1)
            high = max(high, float(np.max(np.abs(v @ wp))) / h**p)
    return abs(error_constant(m, q)) * h**q * high + rounding


@functools.lru_cache(maxsize=None)
def extrapolation_weights(npts: int) -> np.ndarray:
    """Weights on nodes 1, ..., npts for the value at 0 (degree npts-1 extrapolation)."""
    c = fornberg(0, range(1, npts + 1), 0)
    w = np.array([float(row[0]) for row in c])
    w.flags.writeable = False
    return w


def limit_from_side(data: np.ndarray, side: Side, npts: int) -> tuple[np.ndarray, float]:
    """Value at the plane as the limit from one side, ignoring the plane's own sample.

    Extrapolates from the ``npts`` planes beyond it.  The error is
    h^npts f^(npts) at some point of the stencil; the bound estimates that by
    the npts-th difference of the next npts+1 planes, when they exist, and
    adds rounding.
    """
    if npts + 1 > side.available:
        raise ResolutionError(f"extrapolation from {npts} planes needs {npts + 1}, have {side.available}")
    w = extrapolation_weights(npts)
    vals = np.take(data, side.indices(1, npts), axis=-1)
    bound = 4 * EPS * float(np.max(np.abs(vals) @ np.abs(w)))
    if npts + 2 <= side.available:
        diff = np.take(data, side.indices(1, npts + 1), axis=-1) @ one_sided_weights(npts, 1)
        bound += float(np.max(np.abs(diff)))
    return vals @ w, bound
