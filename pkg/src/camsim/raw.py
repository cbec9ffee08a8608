"""Raw mosaicked images and their 16-bit PGM container."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CFA_PATTERNS = {
    # channel index per 2x2 tile position, row-major; 0=R, 1=G, 2=B
    "RGGB": ((0, 1), (1, 2)),
    "BGGR": ((2, 1), (1, 0)),
    "GRBG": ((1, 0), (2, 1)),
    "GBRG": ((1, 2), (0, 1)),
    "MONO": ((1, 1), (1, 1)),
}
CHANNELS = ("r", "g", "b")


def check_cfa(pattern: str) -> str:
    p = str(pattern).upper()
    if p not in CFA_PATTERNS:
        raise ValueError(f"unknown CFA pattern {pattern!r}; expected one of {sorted(CFA_PATTERNS)}")
    return p


def channel_map(pattern: str, rows: int, cols: int) -> np.ndarray:
    """Channel index (0=R, 1=G, 2=B) of every pixel."""
    tile = np.array(CFA_PATTERNS[check_cfa(pattern)], dtype=np.int64)
    return np.tile(tile, ((rows + 1) // 2, (cols + 1) // 2))[:rows, :cols]


@dataclass(frozen=True, eq=False)
class DigitalImage:
    values: np.ndarray = field(repr=False)  # (rows, cols) integer DN
    bits: int = 12
    cfa_pattern: str = "RGGB"

    def __post_init__(self):
        object.__setattr__(self, "cfa_pattern", check_cfa(self.cfa_pattern))
        if not 1 <= int(self.bits) <= 16:
            raise ValueError("bits must be in [1, 16]")
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise ValueError("raw image must be 2-D")
        if np.any(v < 0) or np.any(v > self.max_dn):
            raise ValueError(f"DN values must lie in [0, {self.max_dn}]")
        object.__setattr__(self, "values", v.astype(np.uint16))

    @property
    def max_dn(self) -> int:
        return (1 << int(self.bits)) - 1

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def channels(self) -> np.ndarray:
        return channel_map(self.cfa_pattern, *self.values.shape)

    def __eq__(self, other):
        if not isinstance(other, DigitalImage):
            return NotImplemented
        return (self.bits == other.bits and self.cfa_pattern == other.cfa_pattern
                and np.array_equal(self.values, other.values))

    __hash__ = None


def write_pgm(img: DigitalImage, path) -> None:
    """Binary 16-bit big-endian PGM; the comment line carries CFA and bit depth."""
    h, w = img.values.shape
    header = f"P5\n# cfa={img.cfa_pattern} bits={img.bits}\n{w} {h}\n65535\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(img.values.astype(">u2").tobytes())


def _tokens(data: bytes):
    """Yield (token, end_offset) for the PGM/PPM header, collecting comments."""
    pos = 0
    comments = []
    tokens = []
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            end = data.index(b"\n", pos)
            comments.append(data[pos + 1:end].decode("ascii", "replace").strip())
            pos = end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos].decode("ascii"))
    return tokens, comments, pos + 1


def read_pgm(path) -> DigitalImage:
    data = Path(path).read_bytes()
    try:
        tokens, comments, offset = _tokens(data)
    except (ValueError, IndexError):
        raise ValueError(f"{path}: truncated PGM header") from None
    if tokens[0] != "P5":
        raise ValueError(f"{path}: not a binary PGM (P5)")
    w, h, maxval = (int(t) for t in tokens[1:4])
    meta = {}
    for c in comments:
        meta.update(re.findall(r"(\w+)=(\S+)", c))
    dtype = ">u2" if maxval > 255 else "u1"
    pixels = np.frombuffer(data[offset:offset + w * h * np.dtype(dtype).itemsize], dtype=dtype)
    if pixels.size != w * h:
        raise ValueError(f"{path}: expected {w * h} samples, found {pixels.size}")
    bits = int(meta.get("bits", max(8, int(maxval).bit_length())))
    return DigitalImage(pixels.reshape(h, w), bits, meta.get("cfa", "MONO"))


def write_ppm16(rgb: np.ndarray, path, max_value: float) -> None:
    """Write an (H, W, 3) float raster as a 16-bit PPM scaled by ``max_value``."""
    rgb = np.asarray(rgb, dtype=np.float64)
    h, w, _ = rgb.shape
    scaled = np.clip(np.round(rgb / max_value * 65535.0), 0, 65535).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(scaled.tobytes())
