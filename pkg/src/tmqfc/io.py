"""Serialization of Green matrices, envelopes and result tables.

Green-matrix files are little-endian::

    magic      8 bytes   b"TMQFCGF\\0"
    version    uint32
    basis      uint32    0 = delta, 1 = fourier
    n_points   uint64    simulation grid size
    n_block    uint64    block dimension
    dt         float64   fs
    t_start    float64   fs
    wl_signal  float64   nm
    wl_register float64  nm

followed by the blocks ss, sr, rs, rr, each row-major with interleaved
real and imaginary float64 parts. Every file is written to a temporary
name and renamed, so a failed run never leaves a half-written output.
"""

from __future__ import annotations

import csv
import io
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import MatrixFormatError
from .grid import Envelope, TemporalGrid
from .green import DELTA, FOURIER, GreenFunction

MAGIC = b"TMQFCGF\0"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIIQQdddd")
_BASIS_CODES = {DELTA: 0, FOURIER: 1}


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def matrix_bytes(g: GreenFunction) -> bytes:
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, _BASIS_CODES[g.basis], g.grid.n_points, g.n_basis,
                          g.grid.dt, g.grid.t_start, g.signal_wavelength, g.register_wavelength)
    body = b"".join(np.ascontiguousarray(b, dtype="<c16").tobytes()
                    for b in (g.G_ss, g.G_sr, g.G_rs, g.G_rr))
    return header + body


def dump_matrix(g: GreenFunction, path) -> None:
    atomic_write_bytes(path, matrix_bytes(g))


def load_matrix(path) -> GreenFunction:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise MatrixFormatError(f"{path}: truncated header ({len(data)} of {_HEADER.size} bytes)")
    magic, version, basis_code, n_points, m, dt, t_start, wl_s, wl_r = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MatrixFormatError(f"{path}: not a Green-matrix file (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise MatrixFormatError(f"{path}: format version {version} is not supported "
                                f"(this build reads version {FORMAT_VERSION})")
    basis = {v: k for k, v in _BASIS_CODES.items()}.get(basis_code)
    if basis is None:
        raise MatrixFormatError(f"{path}: unknown basis code {basis_code}")
    if basis == DELTA and m != n_points or m > n_points:
        raise MatrixFormatError(f"{path}: block size {m} inconsistent with {n_points} grid points")
    expected = _HEADER.size + 4 * m * m * 16
    if len(data) != expected:
        raise MatrixFormatError(f"{path}: expected {expected} bytes for 4 blocks of {m}x{m}, "
                                f"found {len(data)}")
    flat = np.frombuffer(data, dtype="<c16", offset=_HEADER.size).astype(complex)
    blocks = flat.reshape(4, m, m)
    grid = TemporalGrid(int(n_points), t_start, dt)
    return GreenFunction(grid, *(b.copy() for b in blocks), basis, wl_s, wl_r)


def format_value(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".17g")


def table_text(axes, rows) -> str:
    """CSV with a header row, LF line endings and round-trip float precision."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(axes)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_table(path, axes, rows) -> None:
    atomic_write_bytes(path, table_text(axes, rows).encode("utf-8"))


def read_table(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def write_envelope(path, env: Envelope) -> None:
    rows = zip(env.grid.times, env.samples.real, env.samples.imag)
    write_table(path, ("time_fs", "real", "imag"), rows)
