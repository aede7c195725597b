"""MFLD binary field dumps.

Layout (all little-endian)::

    magic     4 bytes  b"MFLD"
    version   u32      1 or 2
    geometry  u8       0 periodic cube, 1 half cube, 2 slab
    n1 n2 n3  3 x u32
    [version 2 only] L1 L2 L3 x3_min   4 x float64
    u1, u2, u3         n1*n2*n3 float64 each, x1 fastest

Cube and half-cube extents are fixed, so those are written as version 1.  Slabs
carry their extents and are written as version 2; a version-1 slab is read with
the default extents (-1, 1)^2 x [0, 1].
"""
from __future__ import annotations

import os
import struct

import numpy as np

from .errors import FormatError
from .fields import Geometry, GridSpec, VectorField

MAGIC = b"MFLD"
_HEAD = struct.Struct("<4sIB3I")
_EXTENT = struct.Struct("<4d")
_SLAB_DEFAULT = ((2.0, 2.0, 1.0), 0.0)


def encode(f: VectorField) -> bytes:
    g = f.grid
    version = 2 if g.geometry is Geometry.SLAB else 1
    parts = [_HEAD.pack(MAGIC, version, int(g.geometry), g.n1, g.n2, g.n3)]
    if version == 2:
        parts.append(_EXTENT.pack(*g.lengths, g.x3_min))
    body = np.stack([f.data[c].ravel(order="F") for c in range(3)]).astype("<f8")
    parts.append(body.tobytes())
    return b"".join(parts)


def decode(buf: bytes) -> VectorField:
    if len(buf) < _HEAD.size:
        raise FormatError(f"file too short for an MFLD header ({len(buf)} bytes)")
    magic, version, tag, n1, n2, n3 = _HEAD.unpack_from(buf, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version not in (1, 2):
        raise FormatError(f"unsupported MFLD version {version}")
    try:
        geometry = Geometry(tag)
    except ValueError:
        raise FormatError(f"unknown geometry tag {tag}") from None
    offset = _HEAD.size
    if version == 2:
        if len(buf) < offset + _EXTENT.size:
            raise FormatError("truncated extent block")
        L1, L2, L3, x3_min = _EXTENT.unpack_from(buf, offset)
        offset += _EXTENT.size
        lengths = (L1, L2, L3)
    elif geometry is Geometry.SLAB:
        lengths, x3_min = _SLAB_DEFAULT
    elif geometry is Geometry.HALF_CUBE:
        lengths, x3_min = (2.0, 2.0, 1.0), -0.5
    else:
        lengths, x3_min = (2.0, 2.0, 2.0), -1.0
    try:
        grid = GridSpec(geometry, n1, n2, n3, lengths, x3_min)
    except Exception as exc:
        raise FormatError(f"invalid grid in header: {exc}") from None
    npts = n1 * n2 * n3
    expected = offset + 3 * npts * 8
    if len(buf) != expected:
        raise FormatError(f"expected {expected} bytes, found {len(buf)}")
    body = np.frombuffer(buf, dtype="<f8", count=3 * npts, offset=offset).astype(np.float64)
    data = body.reshape(3, npts)
    data = np.stack([data[c].reshape((n1, n2, n3), order="F") for c in range(3)])
    if not np.all(np.isfinite(data)):
        raise FormatError("field contains NaN or Inf")
    return VectorField(grid, data)


def save(path: str | os.PathLike, f: VectorField) -> None:
    with open(path, "wb") as fh:
        fh.write(encode(f))


def load(path: str | os.PathLike) -> VectorField:
    with open(path, "rb") as fh:
        return decode(fh.read())
