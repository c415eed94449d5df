"""Binary raster grid format (magic "TDM1").

Layout, all little-endian:
  bytes 0..3    magic b"TDM1"
  bytes 4..7    u32 width
  bytes 8..11   u32 height
  bytes 12..15  u32 flags (bit 0: aggregate=sum)
  then width*height f32 density values, row-major, top row first
  then width*height u16 dominant-POI ordinals (0xFFFF = none), same order

Ordinals index the owning scenario's ascending POI id list.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"TDM1"
FLAG_AGGREGATE_SUM = 0x1
NONE_ORDINAL = 0xFFFF


@dataclass(frozen=True)
class GridData:
    width: int
    height: int
    flags: int
    density: np.ndarray  # (H, W) float32, top row first
    dominant: np.ndarray  # (H, W) uint16 ordinals


def encode_grid(raster) -> bytes:
    H, W = raster.value.shape
    if len(raster.poi_ids) >= NONE_ORDINAL:
        raise ValueError("too many POIs for u16 ordinals")
    flags = FLAG_AGGREGATE_SUM if raster.params.aggregate == "sum" else 0
    header = MAGIC + struct.pack("<III", W, H, flags)
    dens = np.ascontiguousarray(raster.value[::-1], dtype="<f4")
    dom = raster.dominant[::-1]
    ords = np.full(dom.shape, NONE_ORDINAL, dtype="<u2")
    for o, pid in enumerate(raster.poi_ids):
        ords[dom == pid] = o
    return header + dens.tobytes() + ords.tobytes()


def decode_grid(buf: bytes) -> GridData:
    if len(buf) < 16 or buf[:4] != MAGIC:
        raise ValueError("not a TDM1 grid")
    w, h, flags = struct.unpack_from("<III", buf, 4)
    n = w * h
    need = 16 + n * 4 + n * 2
    if len(buf) != need:
        raise ValueError(f"truncated grid: expected {need} bytes, got {len(buf)}")
    dens = np.frombuffer(buf, dtype="<f4", count=n, offset=16).reshape(h, w)
    dom = np.frombuffer(buf, dtype="<u2", count=n, offset=16 + n * 4).reshape(h, w)
    return GridData(width=w, height=h, flags=flags, density=dens.copy(), dominant=dom.copy())
