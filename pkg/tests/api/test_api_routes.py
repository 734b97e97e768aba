# pylint: disable=redefined-outer-name

from pathlib import Path
from typing import Generator

import numpy as np
import pytest
from fastapi import status
from fastapi.testclient import TestClient

from splitdenoise.api.main import create_app, load_server_encoder
from splitdenoise.config import ServerSettings
from splitdenoise.exceptions import FrameErrorCode
from splitdenoise.model import save_encoder
from splitdenoise.protocol import (
    FrameServer,
    MessageType,
    decode_frame,
    embed_request,
    encode_frame,
    read_error,
)


@pytest.fixture(scope="module")
def frame_server() -> Generator:
    """
    Yield a frame server around the toy encoder the server settings describe.
    """

    yield FrameServer(load_server_encoder(ServerSettings(vocab_size=40, dim=8, model_seed=1)))


@pytest.fixture(scope="module")
def client(frame_server: FrameServer) -> Generator:
    yield TestClient(create_app(frame_server))


def test_health(client: TestClient) -> None:
    """Test that the /health endpoint responds"""

    response = client.get("/health")

    assert response.status_code == status.HTTP_200_OK
    assert response.json() == {"status": "healthy", "dim": 8, "protocol_version": 1}


def test_embed(client: TestClient, frame_server: FrameServer) -> None:
    """Test that /embed answers a request frame exactly as the frame server does"""

    request = encode_frame(embed_request(np.random.default_rng(0).normal(size=(4, 8))))
    response = client.post(
        "/embed", content=request, headers={"Content-Type": "application/octet-stream"}
    )

    assert response.status_code == status.HTTP_200_OK
    assert response.headers["content-type"] == "application/octet-stream"
    assert response.content == frame_server.handle(request)
    assert decode_frame(response.content).msg_type == MessageType.EMBED_RESPONSE


def test_embed_malformed(client: TestClient) -> None:
    """Test that a malformed body is answered with an Error frame"""

    response = client.post("/embed", content=b"XXXX" + bytes(20))

    assert response.status_code == status.HTTP_200_OK
    assert read_error(decode_frame(response.content))[0] == FrameErrorCode.BAD_MAGIC


def test_checkpoint_encoder(tmp_path: Path, frame_server: FrameServer) -> None:
    """Test that a configured checkpoint replaces the seeded toy encoder"""

    path = tmp_path / "encoder.sndw"
    save_encoder(path, frame_server.encoder)
    loaded = load_server_encoder(ServerSettings(checkpoint_path=str(path)))

    request = encode_frame(embed_request(np.ones((3, 8))))
    assert FrameServer(loaded).handle(request) == frame_server.handle(request)
