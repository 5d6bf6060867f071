"""Versioned binary container used for every serialized object.

Layout (little-endian)::

    b"LSKETCH\\0"  magic, 8 bytes
    u16          format version
    u16          reserved (0)
    u32          header length in bytes
    header       UTF-8 JSON: {"kind", "meta", "arrays": [{name, dtype, shape, offset, nbytes}]}
    padding      to an 8-byte boundary
    blobs        raw C-order array data, each padded to 8 bytes; offsets are
                 relative to the start of the blob section

The JSON header is written with sorted keys and no whitespace so identical
objects serialize to identical bytes.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from .errors import IngestError

MAGIC = b"LSKETCH\0"
VERSION = 1
_PREFIX = struct.Struct("<HHI")


def _pad(k: int) -> int:
    return (-k) % 8


def pack(kind: str, meta: dict, arrays: dict[str, np.ndarray]) -> bytes:
    table = []
    blobs = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        raw = arr.tobytes()
        table.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape),
                      "offset": offset, "nbytes": len(raw)})
        blobs.append(raw + b"\0" * _pad(len(raw)))
        offset += len(raw) + _pad(len(raw))
    header = json.dumps({"kind": kind, "meta": meta, "arrays": table},
                        sort_keys=True, separators=(",", ":")).encode()
    head = MAGIC + _PREFIX.pack(VERSION, 0, len(header)) + header
    head += b"\0" * _pad(len(head))
    return head + b"".join(blobs)


def unpack(data: bytes, kind: str | None = None) -> tuple[dict, dict[str, np.ndarray]]:
    if len(data) < len(MAGIC) + _PREFIX.size or data[: len(MAGIC)] != MAGIC:
        raise IngestError("not a lapsketch container (bad magic)")
    version, _, hlen = _PREFIX.unpack_from(data, len(MAGIC))
    if version != VERSION:
        raise IngestError(f"unsupported container version {version}")
    start = len(MAGIC) + _PREFIX.size
    header = json.loads(data[start: start + hlen].decode())
    if kind is not None and header["kind"] != kind:
        raise IngestError(f"expected a {kind!r} container, found {header['kind']!r}")
    base = start + hlen
    base += _pad(base)
    arrays = {}
    for ent in header["arrays"]:
        lo = base + ent["offset"]
        buf = data[lo: lo + ent["nbytes"]]
        arrays[ent["name"]] = np.frombuffer(buf, dtype=np.dtype(ent["dtype"])).reshape(ent["shape"]).copy()
    return header["meta"], arrays


def peek_kind(data: bytes) -> str:
    start = len(MAGIC) + _PREFIX.size
    if data[: len(MAGIC)] != MAGIC:
        raise IngestError("not a lapsketch container (bad magic)")
    _, _, hlen = _PREFIX.unpack_from(data, len(MAGIC))
    return json.loads(data[start: start + hlen].decode())["kind"]
