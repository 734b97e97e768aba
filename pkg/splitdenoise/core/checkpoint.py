"""
The SNDW weight checkpoint format.

    magic   b"SNDW"
    version u16
    records, repeated to end of file:
        name length u32, name (UTF-8), rank u32, dims u32[rank],
        values float64[prod(dims)]

Every integer and float is little-endian. Values round-trip bit-exactly.
"""

import logging
import struct
from pathlib import Path
from typing import Any, Dict, Mapping, Union

import numpy as np

from ..exceptions import CheckpointError
from .tensor import Array

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"SNDW"
CHECKPOINT_VERSION = 1

_PREAMBLE = struct.Struct("<4sH")
_U32 = struct.Struct("<I")


def encode_checkpoint(tensors: Mapping[str, Array]) -> bytes:
    chunks = [_PREAMBLE.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION)]
    for name, values in tensors.items():
        array = np.asarray(values, dtype=np.float64)
        encoded_name = name.encode("utf-8")
        chunks.append(_U32.pack(len(encoded_name)))
        chunks.append(encoded_name)
        chunks.append(_U32.pack(array.ndim))
        chunks.extend(_U32.pack(dim) for dim in array.shape)
        chunks.append(np.ascontiguousarray(array).astype("<f8").tobytes())
    return b"".join(chunks)


def decode_checkpoint(raw: bytes) -> Dict[str, Array]:
    if len(raw) < _PREAMBLE.size:
        raise CheckpointError("file is shorter than the checkpoint header")
    magic, version = _PREAMBLE.unpack_from(raw, 0)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")

    tensors: Dict[str, Array] = {}
    offset = _PREAMBLE.size
    try:
        while offset < len(raw):
            (name_length,) = _U32.unpack_from(raw, offset)
            offset += _U32.size
            name = raw[offset : offset + name_length].decode("utf-8")
            if len(name.encode("utf-8")) != name_length:
                raise CheckpointError("record name is truncated")
            offset += name_length
            (rank,) = _U32.unpack_from(raw, offset)
            offset += _U32.size
            dims = struct.unpack_from(f"<{rank}I", raw, offset)
            offset += 4 * rank
            count = int(np.prod(dims, dtype=np.int64))
            end = offset + 8 * count
            if end > len(raw):
                raise CheckpointError(f"record {name!r} is truncated")
            values = np.frombuffer(raw[offset:end], dtype="<f8").astype(np.float64)
            tensors[name] = values.reshape(dims)
            offset = end
    except (struct.error, UnicodeDecodeError) as err:
        raise CheckpointError(f"malformed record at byte {offset}: {err}") from err
    return tensors


def save_checkpoint(path: Union[str, Path], tensors: Mapping[str, Array]) -> None:
    Path(path).write_bytes(encode_checkpoint(tensors))
    log.info("Wrote %s tensors to %s", len(tensors), path)


def load_checkpoint(path: Union[str, Path]) -> Dict[str, Array]:
    try:
        raw = Path(path).read_bytes()
    except OSError as err:
        raise CheckpointError(f"cannot read {path}: {err}") from err
    return decode_checkpoint(raw)


def pack_settings(prefix: str, settings: Mapping[str, Any]) -> Dict[str, Array]:
    """Numeric, boolean and tuple settings as named float64 tensors."""

    return {
        prefix + name: np.asarray(value, dtype=np.float64)
        for name, value in settings.items()
    }


def unpack_settings(tensors: Dict[str, Array], prefix: str) -> Dict[str, Any]:
    """Remove the `prefix` tensors from `tensors` and return them as plain values."""

    settings: Dict[str, Any] = {}
    for name in [name for name in tensors if name.startswith(prefix)]:
        values = tensors.pop(name)
        settings[name[len(prefix) :]] = values.tolist()
    return settings
