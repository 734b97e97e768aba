"""
The binary frame exchanged between client and embedding server.

    magic "SND1" | version u16 | msg_type u8 | n u32 | d u32 | payload | crc u32

All integers are little-endian. The payload is n·d little-endian 32-bit
floats in row-major order, and the CRC-32 covers the header and payload.
Error frames carry a NUL-padded UTF-8 message "<CODE_NAME>: <text>" as their
payload, with n = 1 and d = ceil(len / 4).
"""

import math
import struct
import zlib
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional, Tuple

import numpy as np

from ..core.tensor import Array
from ..exceptions import (
    BadMagicError,
    CrcMismatchError,
    FrameDimensionError,
    FrameError,
    FrameErrorCode,
    TruncatedFrameError,
    UnknownMessageError,
    VersionMismatchError,
)

MAGIC = b"SND1"
PROTOCOL_VERSION = 1
WIRE_DTYPE = np.dtype("<f4")
FLOAT_BYTES = WIRE_DTYPE.itemsize
MAX_DIMENSION = 2**32 - 1

HEADER = struct.Struct("<4sHBII")
CRC = struct.Struct("<I")
HEADER_SIZE = HEADER.size
CRC_SIZE = CRC.size
FRAME_OVERHEAD = HEADER_SIZE + CRC_SIZE
MEDIA_TYPE = "application/octet-stream"


class MessageType(IntEnum):
    EMBED_REQUEST = 1
    EMBED_RESPONSE = 2
    ERROR = 3


@dataclass(frozen=True)
class Frame:
    """One decoded frame. `payload` holds the raw little-endian body bytes."""

    msg_type: MessageType
    n: int
    d: int
    payload: bytes
    version: int = PROTOCOL_VERSION

    def rows(self) -> Array:
        """The payload as an n x d float64 matrix."""

        if self.msg_type == MessageType.ERROR:
            raise UnknownMessageError("error frames carry a message, not rows")
        values = np.frombuffer(self.payload, dtype=WIRE_DTYPE)
        return values.astype(np.float64).reshape(self.n, self.d)

    @property
    def size(self) -> int:
        return FRAME_OVERHEAD + len(self.payload)


def to_wire(values: Array) -> Array:
    """Round 64-bit values to the nearest 32-bit float, ties to even."""

    return np.asarray(values, dtype=np.float64).astype(WIRE_DTYPE)


def matrix_frame(msg_type: MessageType, values: Array) -> Frame:
    rows = np.asarray(values, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.ndim != 2:
        raise FrameDimensionError(f"frame payload must be 2-D, got shape {rows.shape}")
    n, d = rows.shape
    return Frame(msg_type, n, d, np.ascontiguousarray(to_wire(rows)).tobytes())


def embed_request(x_tilde: Array) -> Frame:
    return matrix_frame(MessageType.EMBED_REQUEST, x_tilde)


def embed_response(embedding: Array) -> Frame:
    return matrix_frame(MessageType.EMBED_RESPONSE, np.asarray(embedding).reshape(1, -1))


def error_frame(code: FrameErrorCode, text: str) -> Frame:
    message = f"{code.name}: {text}".encode("utf-8")
    d = max(1, math.ceil(len(message) / FLOAT_BYTES))
    return Frame(MessageType.ERROR, 1, d, message.ljust(FLOAT_BYTES * d, b"\0"))


def read_error(frame: Frame) -> Tuple[Optional[FrameErrorCode], str]:
    """The error code named by an Error frame, when known, and its text."""

    message = frame.payload.rstrip(b"\0").decode("utf-8", errors="replace")
    name, _, text = message.partition(": ")
    code = FrameErrorCode.__members__.get(name)
    return (code, text) if code is not None else (None, message)


def encode_frame(frame: Frame) -> bytes:
    if not (0 <= frame.n <= MAX_DIMENSION and 0 <= frame.d <= MAX_DIMENSION):
        raise FrameDimensionError(f"frame shape ({frame.n}, {frame.d}) does not fit in u32")
    if len(frame.payload) != FLOAT_BYTES * frame.n * frame.d:
        raise FrameDimensionError(
            f"payload holds {len(frame.payload)} bytes, shape ({frame.n}, {frame.d}) "
            f"needs {FLOAT_BYTES * frame.n * frame.d}"
        )
    body = HEADER.pack(MAGIC, frame.version, int(frame.msg_type), frame.n, frame.d) + frame.payload
    return body + CRC.pack(zlib.crc32(body))


def decode_frame(data: bytes) -> Frame:
    """
    Parse and validate one frame. Checks run in a fixed order: minimum
    length, magic, version, exact length, CRC, then message type.
    """

    if len(data) < FRAME_OVERHEAD:
        raise TruncatedFrameError(f"{len(data)} bytes is shorter than a frame header")
    magic, version, msg_type, n, d = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"expected magic {MAGIC!r}, got {magic!r}")
    if version != PROTOCOL_VERSION:
        raise VersionMismatchError(
            f"protocol version {version} is not supported (expected {PROTOCOL_VERSION})"
        )
    expected = FRAME_OVERHEAD + FLOAT_BYTES * n * d
    if len(data) != expected:
        raise TruncatedFrameError(
            f"shape ({n}, {d}) needs {expected} bytes, got {len(data)}"
        )
    (crc,) = CRC.unpack_from(data, expected - CRC_SIZE)
    if zlib.crc32(data[: expected - CRC_SIZE]) != crc:
        raise CrcMismatchError("frame checksum does not match its contents")
    try:
        kind = MessageType(msg_type)
    except ValueError as err:
        raise UnknownMessageError(f"unknown message type {msg_type}") from err
    return Frame(kind, n, d, bytes(data[HEADER_SIZE : expected - CRC_SIZE]), version)


def frame_for_error(err: FrameError) -> Frame:
    return error_frame(err.code, err.message)
