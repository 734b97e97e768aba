"""The split-inference wire protocol: frames, the frame server, transports and client sessions."""

from .accounting import payload_accounting
from .client import Session, client_request
from .frames import (
    FRAME_OVERHEAD,
    MAGIC,
    PROTOCOL_VERSION,
    Frame,
    MessageType,
    decode_frame,
    embed_request,
    embed_response,
    encode_frame,
    error_frame,
    read_error,
    to_wire,
)
from .server import FrameServer
from .transport import HttpTransport, InProcessTransport, Transport

__all__ = [
    "FRAME_OVERHEAD",
    "Frame",
    "FrameServer",
    "HttpTransport",
    "InProcessTransport",
    "MAGIC",
    "MessageType",
    "PROTOCOL_VERSION",
    "Session",
    "Transport",
    "client_request",
    "decode_frame",
    "embed_request",
    "embed_response",
    "encode_frame",
    "error_frame",
    "payload_accounting",
    "read_error",
    "to_wire",
]
