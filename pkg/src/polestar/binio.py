"""Single-file binary container used by every persisted artifact.

Layout (little-endian throughout)::

    magic     4 bytes   artifact-specific, e.g. b"PTG1"
    version   1 byte
    hdr_len   u32       length of the JSON header
    header    hdr_len   UTF-8 JSON: metadata + array directory
    blobs     ...       raw array bytes, in directory order
    crc32     u32       of everything above

The JSON header keeps the formats debuggable; numeric bulk lives in the raw
blobs.  A version byte bump invalidates old files (VersionMismatch), any byte
damage trips the checksum (CorruptFile).
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from .errors import CorruptFile, VersionMismatch


def write_artifact(path: str, magic: bytes, version: int, header: dict, arrays: dict[str, np.ndarray]) -> None:
    assert len(magic) == 4
    directory = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        blob = arr.tobytes()
        directory.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape), "nbytes": len(blob)})
        blobs.append(blob)
    header_bytes = json.dumps({"meta": header, "arrays": directory}, sort_keys=True).encode("utf-8")
    body = magic + struct.pack("<B", version) + struct.pack("<I", len(header_bytes)) + header_bytes + b"".join(blobs)
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(struct.pack("<I", zlib.crc32(body)))


def read_artifact(path: str, magic: bytes, version: int) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 13:
        raise CorruptFile(f"{path}: truncated")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise CorruptFile(f"{path}: checksum mismatch")
    if body[:4] != magic:
        raise CorruptFile(f"{path}: bad magic {body[:4]!r}, expected {magic!r}")
    (file_version,) = struct.unpack("<B", body[4:5])
    if file_version != version:
        raise VersionMismatch(f"{path}: format version {file_version}, engine expects {version}")
    (hdr_len,) = struct.unpack("<I", body[5:9])
    try:
        header = json.loads(body[9 : 9 + hdr_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptFile(f"{path}: unreadable header") from exc
    arrays = {}
    offset = 9 + hdr_len
    for entry in header["arrays"]:
        nbytes = entry["nbytes"]
        chunk = body[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise CorruptFile(f"{path}: truncated array {entry['name']!r}")
        arrays[entry["name"]] = np.frombuffer(chunk, dtype=np.dtype(entry["dtype"])).reshape(entry["shape"]).copy()
        offset += nbytes
    return header["meta"], arrays
