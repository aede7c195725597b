"""Fourier transforms and exact spectral calculus on the periodic cube.

Conventions: the forward transform is unnormalized and the inverse divides by
``n1*n2*n3`` (``scipy.fft`` "backward" norm).  Each axis has period 2, so the
integer wavevector ``k`` corresponds to the physical wavenumber ``pi*k``.
First derivatives drop the Nyquist mode so that real fields stay real; the
Laplacian and Sobolev multipliers keep it.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .fields import Geometry, GridSpec, SpectralVectorField, VectorField, require

# rfftn halves the last listed axis, which is x1 here
_AXES = (3, 2, 1)
_SCALAR_AXES = (2, 1, 0)


@dataclass(frozen=True)
class Wavenumbers:
    k: tuple[np.ndarray, np.ndarray, np.ndarray]  # integer wavevectors, broadcastable
    kappa: tuple[np.ndarray, np.ndarray, np.ndarray]  # physical, Nyquist kept
    kd: tuple[np.ndarray, np.ndarray, np.ndarray]  # physical, Nyquist zeroed (derivatives)
    kappa2: np.ndarray  # |kappa|^2 with Nyquist kept
    kd2: np.ndarray  # |kd|^2
    dealias: np.ndarray  # boolean two-thirds mask
    weight: np.ndarray  # Parseval weight of each rfft coefficient


@functools.lru_cache(maxsize=32)
def wavenumbers(grid: GridSpec) -> Wavenumbers:
    require(grid, Geometry.PERIODIC_CUBE)
    n1, n2, n3 = grid.shape
    k1 = np.arange(n1 // 2 + 1, dtype=float)
    k2 = sfft.fftfreq(n2, 1.0 / n2)
    k3 = sfft.fftfreq(n3, 1.0 / n3)
    ks = (k1[:, None, None], k2[None, :, None], k3[None, None, :])
    scales = [2 * np.pi / L for L in grid.lengths]
    kappa = tuple(s * k for s, k in zip(scales, ks))
    kd = []
    for kap, k, n in zip(kappa, ks, grid.shape):
        kd.append(np.where(np.abs(k) == n / 2, 0.0, kap))
    kappa2 = kappa[0] ** 2 + kappa[1] ** 2 + kappa[2] ** 2
    kd2 = kd[0] ** 2 + kd[1] ** 2 + kd[2] ** 2
    mask = (np.abs(ks[0]) <= n1 / 3) & (np.abs(ks[1]) <= n2 / 3) & (np.abs(ks[2]) <= n3 / 3)
    w1 = np.full(n1 // 2 + 1, 2.0)
    w1[0] = 1.0
    w1[-1] = 1.0  # Nyquist plane (n1 even)
    weight = np.broadcast_to(w1[:, None, None], kappa2.shape)
    out = Wavenumbers(ks, kappa, tuple(kd), kappa2, kd2, mask, weight)
    for arr in (*out.kappa, *out.kd, out.kappa2, out.kd2, out.dealias):
        arr.flags.writeable = False
    return out


# -- transforms ----------------------------------------------------------------


def rfft3(data: np.ndarray) -> np.ndarray:
    """Forward transform of a (3, n1, n2, n3) array."""
    return sfft.rfftn(data, axes=_AXES)


def irfft3(coeffs: np.ndarray, shape: tuple[int, int, int]) -> np.ndarray:
    n1, n2, n3 = shape
    return sfft.irfftn(coeffs, s=(n3, n2, n1), axes=_AXES)


def rfft_scalar(s: np.ndarray) -> np.ndarray:
    return sfft.rfftn(s, axes=_SCALAR_AXES)


def irfft_scalar(c: np.ndarray, shape: tuple[int, int, int]) -> np.ndarray:
    n1, n2, n3 = shape
    return sfft.irfftn(c, s=(n3, n2, n1), axes=_SCALAR_AXES)


def to_spectral(f: VectorField) -> SpectralVectorField:
    require(f.grid, Geometry.PERIODIC_CUBE)
    return SpectralVectorField(f.grid, rfft3(f.data))


def to_physical(g: SpectralVectorField) -> VectorField:
    return VectorField(g.grid, irfft3(g.coeffs, g.grid.shape))


def spectral_l2_norm(g: SpectralVectorField) -> float:
    """L2 norm from coefficients; equals the physical quadrature norm (Parseval)."""
    return sobolev_norm_hat(g.coeffs, g.grid, 0)


# -- calculus --------------------------------------------------------------------


def divergence_hat(u_hat: np.ndarray, grid: GridSpec) -> np.ndarray:
    kd = wavenumbers(grid).kd
    return 1j * (kd[0] * u_hat[0] + kd[1] * u_hat[1] + kd[2] * u_hat[2])


def curl_hat(u_hat: np.ndarray, grid: GridSpec) -> np.ndarray:
    k1, k2, k3 = wavenumbers(grid).kd
    u1, u2, u3 = u_hat
    return 1j * np.stack([k2 * u3 - k3 * u2, k3 * u1 - k1 * u3, k1 * u2 - k2 * u1])


def gradient_hat(s_hat: np.ndarray, grid: GridSpec) -> np.ndarray:
    kd = wavenumbers(grid).kd
    return 1j * np.stack([np.broadcast_to(k, s_hat.shape) * s_hat for k in kd])


def divergence(f: VectorField) -> np.ndarray:
    require(f.grid, Geometry.PERIODIC_CUBE)
    return irfft_scalar(divergence_hat(rfft3(f.data), f.grid), f.grid.shape)


def curl(f: VectorField) -> VectorField:
    require(f.grid, Geometry.PERIODIC_CUBE)
    return VectorField(f.grid, irfft3(curl_hat(rfft3(f.data), f.grid), f.grid.shape))


def gradient(s: np.ndarray, grid: GridSpec) -> VectorField:
    require(grid, Geometry.PERIODIC_CUBE)
    s = np.asarray(s, dtype=float)
    if s.shape != grid.shape:
        raise ValueError(f"scalar shape {s.shape} does not match grid {grid.shape}")
    return VectorField(grid, irfft3(gradient_hat(rfft_scalar(s), grid), grid.shape))


def laplacian(f: VectorField) -> VectorField:
    require(f.grid, Geometry.PERIODIC_CUBE)
    k2 = wavenumbers(f.grid).kappa2
    return VectorField(f.grid, irfft3(-k2 * rfft3(f.data), f.grid.shape))


def velocity_gradient(f: VectorField) -> np.ndarray:
    """``G[i, j] = d u_i / d x_j`` as a (3, 3, n1, n2, n3) array."""
    require(f.grid, Geometry.PERIODIC_CUBE)
    kd = wavenumbers(f.grid).kd
    u_hat = rfft3(f.data)
    shape = f.grid.shape
    return np.stack([irfft3(1j * np.stack([kd[j] * u_hat[i] for j in range(3)]), shape) for i in range(3)])


def advect_hat(u_hat: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Dealiased coefficients of (u . grad) u given the coefficients of u."""
    wn = wavenumbers(grid)
    shape = grid.shape
    u = irfft3(u_hat, shape)
    out = np.empty_like(u_hat)
    for i in range(3):
        du = irfft3(1j * np.stack([kd * u_hat[i] for kd in wn.kd]), shape)
        prod = u[0] * du[0] + u[1] * du[1] + u[2] * du[2]
        out[i] = rfft_scalar(prod)
    out *= wn.dealias
    return out


def advect(u: VectorField) -> VectorField:
    """(u . grad) u, products formed in physical space, two-thirds dealiased."""
    require(u.grid, Geometry.PERIODIC_CUBE)
    return VectorField(u.grid, irfft3(advect_hat(rfft3(u.data), u.grid), u.grid.shape))


def leray_project_hat(u_hat: np.ndarray, grid: GridSpec) -> np.ndarray:
    wn = wavenumbers(grid)
    kd = wn.kd
    k2 = np.where(wn.kd2 == 0, 1.0, wn.kd2)
    kdotu = (kd[0] * u_hat[0] + kd[1] * u_hat[1] + kd[2] * u_hat[2]) / k2
    return u_hat - np.stack([k * kdotu for k in kd])


def leray_project(g: SpectralVectorField) -> SpectralVectorField:
    """Apply I - k k^T / |k|^2 mode by mode; the mean mode is untouched."""
    return SpectralVectorField(g.grid, leray_project_hat(g.coeffs, g.grid))


def dealias(g: SpectralVectorField) -> SpectralVectorField:
    return SpectralVectorField(g.grid, g.coeffs * wavenumbers(g.grid).dealias)


# -- norms -----------------------------------------------------------------------


def sobolev_norm_hat(u_hat: np.ndarray, grid: GridSpec, l: int) -> float:
    wn = wavenumbers(grid)
    n = grid.n1 * grid.n2 * grid.n3
    power = np.sum(np.abs(u_hat) ** 2, axis=0) * wn.weight
    if l:
        power = power * (1.0 + wn.kappa2) ** l
    return float(np.sqrt(grid.volume * np.sum(power)) / n)


def sobolev_norm(f: VectorField, l: int = 0) -> float:
    """(sum_k (1+|kappa|^2)^l |u_k|^2 vol)^(1/2) with normalized coefficients u_k."""
    require(f.grid, Geometry.PERIODIC_CUBE)
    if l < 0 or int(l) != l:
        raise ValueError(f"Sobolev index must be a nonnegative integer, got {l}")
    return sobolev_norm_hat(rfft3(f.data), f.grid, int(l))
