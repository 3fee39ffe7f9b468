"""Checkpoint container format.

Byte layout (all integers little-endian):

    [0:8]    magic b"MOLFUSE1"
    [8:12]   uint32 header length H
    [12:12+H] UTF-8 JSON header with sorted keys:
             {"format_version": 1,
              "config_digest": "<sha256 hex of the canonical config JSON>",
              "config": {...},
              "tensors": [{"name", "shape", "offset", "nbytes"}, ...]}
    [12+H:]  payload: raw little-endian float64 arrays, row-major, packed in
             tensor-name order; offsets are relative to the payload start.

The digest covers ``json.dumps(config, sort_keys=True, separators=(",", ":"))``;
loading rejects a header whose digest does not match its own config unless
forced. Writing is deterministic: identical config + arrays give identical
bytes.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"MOLFUSE1"
FORMAT_VERSION = 1


class DigestMismatchError(ValueError):
    pass


def config_digest(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_checkpoint(path: str | Path, config: dict, arrays: dict[str, np.ndarray]) -> None:
    entries = []
    payload = bytearray()
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name], dtype="<f8")
        entries.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "offset": len(payload),
                "nbytes": arr.nbytes,
            }
        )
        payload.extend(arr.tobytes())
    header = {
        "format_version": FORMAT_VERSION,
        "config_digest": config_digest(config),
        "config": config,
        "tensors": entries,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(payload)
    tmp.replace(path)


def load_checkpoint(path: str | Path, force: bool = False) -> tuple[dict, dict[str, np.ndarray]]:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: not a molfusion checkpoint (bad magic)")
    (header_len,) = struct.unpack("<I", raw[8:12])
    header = json.loads(raw[12 : 12 + header_len].decode("utf-8"))
    if header.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {header.get('format_version')}")
    config = header["config"]
    if not force and header["config_digest"] != config_digest(config):
        raise DigestMismatchError(
            f"{path}: config digest mismatch (checkpoint corrupted or edited); "
            "pass force=True to load anyway"
        )
    payload = raw[12 + header_len :]
    arrays = {}
    for entry in header["tensors"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        arr = np.frombuffer(payload[start : start + nbytes], dtype="<f8")
        arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return config, arrays
