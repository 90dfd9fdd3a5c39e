"""On-disk formats.

TensorFile layout (all integers little-endian)::

    offset  size        field
    0       4           magic b"PET1"
    4       1           dtype: 0 = uint16, 1 = float32, 2 = uint32
    5       1           ndim (2 or 3)
    6       4 * ndim    dims, uint32 each
    ...     prod(dims) * itemsize   payload, row-major (last axis fastest)

A 2x3 uint16 tensor starts ``50 45 54 31 00 02 02 00 00 00 03 00 00 00``
followed by 12 payload bytes.

Label rasters are also written as 16-bit binary PGM (P5, maxval 65535,
big-endian samples as the PGM format requires).
"""
from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from .errors import BadMagic, DimOverflow, TensorFormatError, TruncatedPayload, UnknownSourceId
from .labels import CategoryTaxonomy, encode_label

MAGIC = b"PET1"
DTYPES = {0: np.dtype("<u2"), 1: np.dtype("<f4"), 2: np.dtype("<u4")}
CODES = {np.dtype(v).newbyteorder("="): k for k, v in DTYPES.items()}
MAX_ELEMENTS = 1 << 32


def _dtype_code(dtype) -> int:
    dt = np.dtype(dtype).newbyteorder("=")
    try:
        return CODES[dt]
    except KeyError:
        raise TensorFormatError(f"unsupported dtype {dtype}; use uint16, float32 or uint32") from None


def encode_tensor(array) -> bytes:
    a = np.asarray(array)
    code = _dtype_code(a.dtype)
    if a.ndim not in (2, 3):
        raise TensorFormatError(f"tensors must be 2-D or 3-D, got {a.ndim}-D")
    if any(n >= 1 << 32 for n in a.shape):
        raise DimOverflow(f"dimension too large for uint32: {a.shape}")
    header = MAGIC + struct.pack("<BB", code, a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape)
    return header + np.ascontiguousarray(a, dtype=DTYPES[code]).tobytes()


def decode_tensor(data: bytes) -> np.ndarray:
    if len(data) < 6:
        raise TruncatedPayload(f"header needs at least 6 bytes, got {len(data)}")
    if data[:4] != MAGIC:
        raise BadMagic(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    code, ndim = data[4], data[5]
    if code not in DTYPES:
        raise TensorFormatError(f"unknown dtype code {code}")
    if ndim not in (2, 3):
        raise TensorFormatError(f"ndim must be 2 or 3, got {ndim}")
    end = 6 + 4 * ndim
    if len(data) < end:
        raise TruncatedPayload("file ends inside the dimension table")
    dims = struct.unpack(f"<{ndim}I", data[6:end])
    count = 1
    for n in dims:
        count *= n
    if count >= MAX_ELEMENTS:
        raise DimOverflow(f"dims {dims} describe {count} elements")
    dt = DTYPES[code]
    need = count * dt.itemsize
    have = len(data) - end
    if have < need:
        raise TruncatedPayload(f"payload has {have} bytes, dims {dims} need {need}")
    if have > need:
        raise TensorFormatError(f"{have - need} trailing bytes after payload for dims {dims}")
    return np.frombuffer(data, dtype=dt, count=count, offset=end).reshape(dims).astype(dt.newbyteorder("="))


def write_tensor(path, array) -> None:
    Path(path).write_bytes(encode_tensor(array))


def read_tensor(path) -> np.ndarray:
    return decode_tensor(Path(path).read_bytes())


def labels_to_tensor(labels) -> np.ndarray:
    """Label map as uint32 (fails loudly on negative or oversized values)."""
    a = np.asarray(labels)
    if a.size and (a.min() < 0 or a.max() >= 1 << 32):
        raise TensorFormatError("labels must lie in [0, 2**32)")
    return a.astype(np.uint32)


def write_pgm16(path, labels) -> None:
    a = np.asarray(labels)
    if a.ndim != 2:
        raise TensorFormatError(f"graymaps are 2-D, got shape {a.shape}")
    if a.size and (a.min() < 0 or a.max() > 0xFFFF):
        raise TensorFormatError(f"label {int(a.max())} does not fit a 16-bit graymap")
    h, w = a.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n65535\n" % (w, h))
        f.write(a.astype(">u2").tobytes())


def read_pgm16(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise BadMagic(f"not a binary graymap: {tokens[0]!r}")
    w, h, maxval = (int(t) for t in tokens[1:])
    pos += 1
    dt = ">u2" if maxval > 255 else "u1"
    need = w * h * np.dtype(dt).itemsize
    if len(data) - pos < need:
        raise TruncatedPayload(f"graymap payload too short for {w}x{h}")
    return np.frombuffer(data, dtype=dt, count=w * h, offset=pos).reshape(h, w).astype(np.uint16)


def read_panoptic_rgb(path, table: dict, taxonomy: CategoryTaxonomy) -> np.ndarray:
    """Decode an RGB panoptic PNG (id = R + 256 G + 65536 B) through a translation table.

    ``table`` maps source id -> (category, instance_id).
    """
    from PIL import Image

    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"), dtype=np.int64)
    ids = rgb[..., 0] + 256 * rgb[..., 1] + 65536 * rgb[..., 2]
    uniq, inv = np.unique(ids, return_inverse=True)
    missing = [int(u) for u in uniq if int(u) not in table]
    if missing:
        raise UnknownSourceId(f"source id(s) {missing[:10]} missing from the translation table")
    encoded = np.array([encode_label(*table[int(u)], taxonomy) for u in uniq], dtype=np.int64)
    return encoded[inv].reshape(ids.shape)


def label_colors(labels) -> np.ndarray:
    """Deterministic RGB colour per label; non-edge pixels are black."""
    a = np.asarray(labels, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (a + np.uint64(1)) * np.uint64(0x9E3779B97F4A7C15)
        z ^= z >> np.uint64(29)
    rgb = np.stack([(z >> np.uint64(s)) & np.uint64(0xFF) for s in (8, 24, 40)], axis=-1).astype(np.uint8)
    rgb |= 0x30
    rgb[a == 0] = 0
    return rgb


def write_visualization(path, labels) -> None:
    from PIL import Image

    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    Image.fromarray(label_colors(labels), mode="RGB").save(path)
