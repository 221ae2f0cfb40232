"""Reader/writer for the NSSF1 binary field format.

Layout: ``b"NSSF"``, version byte (1), flags byte (bit0 pressure present,
bits 1-3 periodicity of x, y, z), then little-endian ``4 x u32`` dims
``(nx, ny, nz, nt)``, ``8 x f64`` box ``(x0, x1, y0, y1, z0, z1, t_a, t_b)``
and the f64 payload ordered (slowest to fastest) time, component
``(u1, u2, u3[, P])``, z, y, x.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .field import Grid, SampledField

MAGIC = b"NSSF"
VERSION = 1
_HEADER = struct.Struct("<4sBB4I8d")
HEADER_SIZE = _HEADER.size


class NSSFError(ValueError):
    """Malformed NSSF1 data; ``offset`` is the byte position of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def encode(fld: SampledField) -> bytes:
    nx, ny, nz = fld.grid.shape
    flags = int(fld.pressure is not None)
    for i, per in enumerate(fld.grid.periodic):
        flags |= int(per) << (i + 1)
    header = _HEADER.pack(MAGIC, VERSION, flags, nx, ny, nz, fld.nt, *fld.box)
    # internal (nt, c, x, y, z) -> file (nt, c, z, y, x)
    comps = [fld.velocity]
    if fld.pressure is not None:
        comps.append(fld.pressure[:, None])
    data = np.concatenate(comps, axis=1).transpose(0, 1, 4, 3, 2)
    return header + np.ascontiguousarray(data, dtype="<f8").tobytes()


def parse_header(buf: bytes) -> dict:
    """Validate the fixed-size header and return its fields."""
    if len(buf) < HEADER_SIZE:
        raise NSSFError(f"truncated header: {len(buf)} bytes, need {HEADER_SIZE}", len(buf))
    magic, version, flags, nx, ny, nz, nt, *box = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise NSSFError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise NSSFError(f"unsupported version {version}", 4)
    if flags >> 4:
        raise NSSFError(f"reserved flag bits set in {flags:#04x}", 5)
    if min(nx, ny, nz, nt) < 2:
        raise NSSFError(f"dims {(nx, ny, nz, nt)} must all be >= 2", 6)
    return {"dims": (nx, ny, nz, nt), "box": tuple(box[:6]), "t_range": (box[6], box[7]),
            "pressure": bool(flags & 1),
            "periodic": tuple(bool(flags >> (i + 1) & 1) for i in range(3))}


def decode(buf: bytes) -> SampledField:
    head = parse_header(buf)
    nx, ny, nz, nt = head["dims"]
    box = head["box"] + head["t_range"]
    has_p, periodic = head["pressure"], head["periodic"]
    ncomp = 4 if has_p else 3
    expected = nt * ncomp * nz * ny * nx * 8
    payload = len(buf) - HEADER_SIZE
    if payload != expected:
        raise NSSFError(f"payload is {payload} bytes, header implies {expected}",
                        HEADER_SIZE + min(payload, expected))
    data = np.frombuffer(buf, dtype="<f8", offset=HEADER_SIZE)
    bad = np.nonzero(~np.isfinite(data))[0]
    if bad.size:
        raise NSSFError("non-finite value in payload", HEADER_SIZE + 8 * int(bad[0]))
    data = data.reshape(nt, ncomp, nz, ny, nx).transpose(0, 1, 4, 3, 2)
    try:
        grid = Grid((nx, ny, nz), box[0:6:2], box[1:6:2], periodic)
        return SampledField(grid, (box[6], box[7]), data[:, :3],
                            data[:, 3] if has_p else None)
    except ValueError as exc:
        raise NSSFError(str(exc), 22) from exc


def write(path: str | os.PathLike, fld: SampledField) -> None:
    with open(path, "wb") as fh:
        fh.write(encode(fld))


def read(path: str | os.PathLike) -> SampledField:
    with open(path, "rb") as fh:
        return decode(fh.read())


def read_header(path: str | os.PathLike) -> dict:
    with open(path, "rb") as fh:
        return parse_header(fh.read(HEADER_SIZE))
