# pylint: disable=import-outside-toplevel

"""Byte transports between a client session and the frame server."""

import logging
from asyncio import TimeoutError as AsyncTimeoutError
from asyncio import run
from sys import platform, version_info
from threading import Lock
from typing import Protocol

from aiohttp import (
    ClientConnectionError,
    ClientResponseError,
    ClientSession,
    ClientTimeout,
)

from ..exceptions import TransportError
from .frames import MEDIA_TYPE
from .server import FrameServer

log = logging.getLogger(__name__)

EMBED_PATH = "/embed"


class Transport(Protocol):
    """Moves one request frame to the server and returns its response frame."""

    def exchange(self, data: bytes) -> bytes:
        ...


class ByteCounter:
    """Running totals of the bytes a transport has moved."""

    def __init__(self) -> None:
        self._lock = Lock()
        self.bytes_sent = 0
        self.bytes_received = 0
        self.requests = 0

    def record(self, sent: int, received: int) -> None:
        with self._lock:
            self.bytes_sent += sent
            self.bytes_received += received
            self.requests += 1


class InProcessTransport(ByteCounter):
    """Calls the frame server directly; used for deterministic runs and tests."""

    def __init__(self, server: FrameServer) -> None:
        super().__init__()
        self.server = server

    def exchange(self, data: bytes) -> bytes:
        response = self.server.handle(bytes(data))
        self.record(len(data), len(response))
        return response


class HttpTransport(ByteCounter):
    """
    Posts frames to the `/embed` endpoint of a running embedding server.
    """

    def __init__(self, endpoint: str, timeout_seconds: float = 120.0) -> None:
        super().__init__()
        self.endpoint = endpoint.rstrip("/")
        self.timeout_seconds = timeout_seconds

    def exchange(self, data: bytes) -> bytes:
        self.__set_event_loop()
        return run(self.exchange_async(data))

    async def exchange_async(self, data: bytes) -> bytes:
        async with ClientSession(
            self.endpoint,
            headers={"Content-Type": MEDIA_TYPE},
            timeout=ClientTimeout(connect=3.05, total=self.timeout_seconds),
        ) as session:
            try:
                async with session.post(EMBED_PATH, data=data) as resp:
                    resp.raise_for_status()
                    response = await resp.read()
            except ClientConnectionError as err:
                raise TransportError(f"cannot reach {self.endpoint}: {err}") from err
            except AsyncTimeoutError as err:
                raise TransportError(
                    f"no response from {self.endpoint} within {self.timeout_seconds}s"
                ) from err
            except ClientResponseError as err:
                raise TransportError(f"HTTP {err.status}: {err.message}") from err

        self.record(len(data), len(response))
        log.debug("Exchanged %s bytes for %s with %s", len(data), len(response), self.endpoint)
        return response

    @staticmethod
    def __set_event_loop() -> None:
        """
        Helps to work around a bug in the default Windows event loop for Python 3.8+
        by changing the default event loop in Windows processes.
        """

        if (
            version_info[0] == 3
            and version_info[1] >= 8
            and platform.lower().startswith("win")
        ):
            from asyncio import (  # type: ignore[attr-defined]
                WindowsSelectorEventLoopPolicy,
                set_event_loop_policy,
            )

            set_event_loop_policy(WindowsSelectorEventLoopPolicy())
