"""Binary parameter checkpoints.

Layout, all little-endian: magic b"T2VN", u32 version, u32 config JSON
length, config JSON (UTF-8), then every parameter tensor in declaration
order as raw 32-bit floats. Round-trips bit-exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .model import ModelConfig, Params, init_params

__all__ = ["save_checkpoint", "load_checkpoint", "CheckpointError"]

MAGIC = b"T2VN"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(params: Params, config: ModelConfig, path: str | Path) -> None:
    config_json = config.to_json().encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(config_json)))
        fh.write(config_json)
        for tensor in params.values():
            fh.write(np.ascontiguousarray(
                tensor.data, dtype="<f4").tobytes())


def load_checkpoint(path: str | Path) -> tuple[Params, ModelConfig]:
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise CheckpointError("bad magic: not a model checkpoint")
    version, json_len = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    try:
        config = ModelConfig.from_json(blob[12:12 + json_len].decode("utf-8"))
    except Exception as exc:
        raise CheckpointError(f"unreadable config block: {exc}") from exc
    params = init_params(config)
    expected = 12 + json_len + 4 * sum(t.data.size for t in params.values())
    if len(blob) != expected:
        raise CheckpointError(
            f"checkpoint holds {len(blob)} bytes, expected {expected}")
    offset = 12 + json_len
    for tensor in params.values():
        count = tensor.data.size
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        offset += count * 4
        tensor.data = arr.reshape(tensor.data.shape).copy()
    return params, config
