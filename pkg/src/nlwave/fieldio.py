"""NLWF binary field files and CSV diagnostics.

Layout (little-endian)::

    b"NLWF" | u32 version (=1) | u32 rank | rank x u64 dims | float64 values

Dims are slowest-varying first, i.e. ``(t, y, x)`` for space-time fields.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import FieldFormatError, GridTooSmallError
from .grid import SpaceTimeGrid, SpaceTimeScalarField

MAGIC = b"NLWF"
VERSION = 1
MAX_RANK = 8


def write_array(path, values):
    values = np.ascontiguousarray(values, dtype="<f8")
    header = MAGIC + struct.pack("<II", VERSION, values.ndim) + struct.pack(f"<{values.ndim}Q", *values.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(values.tobytes(order="C"))


def read_array(path):
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != MAGIC:
        raise FieldFormatError(f"{path}: missing NLWF magic")
    version, rank = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise FieldFormatError(f"{path}: unsupported version {version}")
    if rank > MAX_RANK:
        raise FieldFormatError(f"{path}: rank {rank} too large")
    offset = 12 + 8 * rank
    if len(data) < offset:
        raise FieldFormatError(f"{path}: truncated header")
    dims = struct.unpack_from(f"<{rank}Q", data, 12)
    count = 1
    for d in dims:
        count *= d
        if count * 8 > len(data):
            raise FieldFormatError(f"{path}: shape {dims} does not fit in {len(data)} bytes")
    if len(data) - offset != count * 8:
        raise FieldFormatError(f"{path}: expected {count} values, file holds {(len(data) - offset) / 8:g}")
    if rank == 3:
        nt, ny, nx = dims
        if nx < 3 or ny < 3 or nt < 2:
            raise GridTooSmallError(f"{path}: header dims {dims} violate the minimum grid size")
    return np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(dims).astype(np.float64)


def write_field(path, field):
    write_array(path, field.values)


def read_field(path, grid=None):
    """Read a space-time field.

    The file carries only array dims; extents come from ``grid`` when given,
    otherwise a unit-extent grid (T = Lx = Ly = 1) of matching size is used.
    """
    values = read_array(path)
    if values.ndim != 3:
        raise FieldFormatError(f"{path}: expected a rank-3 field, got rank {values.ndim}")
    if grid is None:
        nt, ny, nx = values.shape
        grid = SpaceTimeGrid(nx, ny, nt)
    elif values.shape != grid.shape:
        raise FieldFormatError(f"{path}: shape {values.shape} does not match grid {grid.shape}")
    return SpaceTimeScalarField(grid, values)


def fmt(value):
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]
