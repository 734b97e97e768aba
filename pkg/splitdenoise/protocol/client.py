import logging
from threading import Lock
from typing import Optional
from uuid import uuid4

import numpy as np

from ..config import ClientSettings
from ..core.tensor import Array
from ..exceptions import ContractError, DimensionError, ServerError, UnknownMessageError
from ..model.encoder import EmbeddingRole, SentenceEmbedding
from .frames import (
    PROTOCOL_VERSION,
    MessageType,
    decode_frame,
    embed_request,
    encode_frame,
    read_error,
)
from .transport import HttpTransport, Transport

log = logging.getLogger(__name__)


class Session:
    """
    A client's connection to one embedding server. Requests on a session are
    serialized: at most one is in flight at a time.
    """

    def __init__(self, transport: Transport, session_id: Optional[str] = None) -> None:
        self.transport = transport
        self.session_id = session_id or uuid4().hex
        self.version = PROTOCOL_VERSION
        self._in_flight = Lock()

    @classmethod
    def from_settings(cls, settings: ClientSettings) -> "Session":
        """Open a session against the HTTP endpoint named in the client settings."""

        return cls(HttpTransport(settings.endpoint, settings.timeout_seconds))

    def exchange(self, data: bytes) -> bytes:
        with self._in_flight:
            return self.transport.exchange(data)

    def __repr__(self) -> str:
        return f"Session(id={self.session_id}, transport={type(self.transport).__name__})"


def client_request(x_tilde: Array, session: Session) -> SentenceEmbedding:
    """
    Send privatized token rows to the server and return the noisy sentence
    embedding e_n it computes.
    """

    rows = np.asarray(x_tilde, dtype=np.float64)
    if rows.ndim != 2:
        raise DimensionError(f"token matrix must be 2-D, got shape {rows.shape}")
    response = decode_frame(session.exchange(encode_frame(embed_request(rows))))

    if response.msg_type == MessageType.ERROR:
        code, text = read_error(response)
        raise ServerError(f"{code.name if code else 'UNKNOWN'}: {text}")
    if response.msg_type != MessageType.EMBED_RESPONSE:
        raise UnknownMessageError(f"expected an EmbedResponse, got {response.msg_type.name}")
    if response.n != 1 or response.d != rows.shape[1]:
        raise ContractError(
            f"response shape ({response.n}, {response.d}) does not match one "
            f"{rows.shape[1]}-wide embedding"
        )
    log.debug("Session %s: %s tokens embedded", session.session_id, rows.shape[0])
    return SentenceEmbedding(response.rows()[0], EmbeddingRole.NOISY)
