"""Named-tensor container: the on-disk format shared by VGG weight files,
generator parameter blobs, and session archives.

Layout (all integers little-endian):

    magic      4 bytes
    version    u32
    header_len u32
    header     UTF-8 JSON, header_len bytes
    blocks     repeated until EOF:
                   name_len u16, name (UTF-8),
                   ndim u8, dims u32 * ndim,
                   payload float32 * prod(dims)
"""

from __future__ import annotations

import json
import struct
from io import BytesIO
from typing import BinaryIO

import numpy as np


class FormatError(ValueError):
    """Raised when a container fails structural validation."""


def write_container(
    stream: BinaryIO,
    magic: bytes,
    version: int,
    header: dict,
    tensors: dict[str, np.ndarray],
) -> None:
    if len(magic) != 4:
        raise ValueError("magic must be exactly 4 bytes")
    header_bytes = json.dumps(header).encode("utf-8")
    stream.write(magic)
    stream.write(struct.pack("<I", version))
    stream.write(struct.pack("<I", len(header_bytes)))
    stream.write(header_bytes)
    for name, tensor in tensors.items():
        arr = np.ascontiguousarray(tensor, dtype=np.float32)
        name_bytes = name.encode("utf-8")
        stream.write(struct.pack("<H", len(name_bytes)))
        stream.write(name_bytes)
        stream.write(struct.pack("<B", arr.ndim))
        stream.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        stream.write(arr.tobytes())


def to_bytes(magic: bytes, version: int, header: dict, tensors: dict[str, np.ndarray]) -> bytes:
    buf = BytesIO()
    write_container(buf, magic, version, header, tensors)
    return buf.getvalue()


def _read_exact(stream: BinaryIO, n: int, what: str) -> bytes:
    data = stream.read(n)
    if len(data) != n:
        raise FormatError(f"truncated stream while reading {what}")
    return data


def read_container(
    stream: BinaryIO,
    expect_magic: bytes,
    max_version: int,
) -> tuple[int, dict, dict[str, np.ndarray]]:
    """Parse a container, returning (version, header, tensors).

    Raises FormatError on bad magic, unsupported version, or truncation.
    """
    magic = stream.read(4)
    if magic != expect_magic:
        raise FormatError(f"bad magic: expected {expect_magic!r}, got {magic!r}")
    version = struct.unpack("<I", _read_exact(stream, 4, "version"))[0]
    if version < 1 or version > max_version:
        raise FormatError(f"unsupported version {version} (max supported {max_version})")
    header_len = struct.unpack("<I", _read_exact(stream, 4, "header length"))[0]
    header_bytes = _read_exact(stream, header_len, "header")
    try:
        header = json.loads(header_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"corrupt header: {exc}") from exc

    tensors: dict[str, np.ndarray] = {}
    while True:
        prefix = stream.read(2)
        if len(prefix) == 0:
            break
        if len(prefix) != 2:
            raise FormatError("truncated stream while reading block name length")
        name_len = struct.unpack("<H", prefix)[0]
        name = _read_exact(stream, name_len, "block name").decode("utf-8")
        ndim = struct.unpack("<B", _read_exact(stream, 1, f"ndim of {name}"))[0]
        dims = struct.unpack(f"<{ndim}I", _read_exact(stream, 4 * ndim, f"dims of {name}"))
        count = int(np.prod(dims)) if ndim else 1
        payload = _read_exact(stream, 4 * count, f"payload of {name}")
        tensors[name] = np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
    return version, header, tensors


def from_bytes(data: bytes, expect_magic: bytes, max_version: int):
    return read_container(BytesIO(data), expect_magic, max_version)
