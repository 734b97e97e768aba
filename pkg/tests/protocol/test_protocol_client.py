# pylint: disable=redefined-outer-name

import ast
import socket
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Generator, List

import numpy as np
import pytest

import splitdenoise
from splitdenoise.exceptions import ContractError, FrameErrorCode, ServerError, TransportError
from splitdenoise.model import EmbeddingRole, EncoderWeights, encode, init_toy_model
from splitdenoise.protocol import (
    FrameServer,
    HttpTransport,
    InProcessTransport,
    MessageType,
    Session,
    client_request,
    decode_frame,
    embed_request,
    embed_response,
    encode_frame,
    payload_accounting,
    read_error,
    to_wire,
)
from splitdenoise.schemas import EncoderConfig

PACKAGE_ROOT = Path(splitdenoise.__file__).parent


@pytest.fixture(scope="module")
def encoder() -> Generator:
    """
    Yield a small seeded encoder with 8-wide embeddings.
    """

    _, weights = init_toy_model(
        EncoderConfig(vocab_size=50, dim=8, layers=1, n_head=2, d_kv=4, d_ff=16, seed=3)
    )
    yield weights


@pytest.fixture()
def server(encoder: EncoderWeights) -> Generator:
    yield FrameServer(encoder)


@pytest.fixture()
def silent_endpoint() -> Generator:
    """
    Yield the URL of a listening socket that accepts connections and never replies.
    """

    listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    listener.bind(("127.0.0.1", 0))
    listener.listen(8)
    yield f"http://127.0.0.1:{listener.getsockname()[1]}"
    listener.close()


class FixedTransport:
    """Answers every request with the same bytes."""

    def __init__(self, response: bytes) -> None:
        self.response = response

    def exchange(self, data: bytes) -> bytes:
        return self.response


class TestClientRequest:
    def test_matches_direct_encode(self, encoder: EncoderWeights, server: FrameServer) -> None:
        x_tilde = np.random.default_rng(0).normal(size=(6, 8))
        embedding = client_request(x_tilde, Session(InProcessTransport(server)))

        assert embedding.role == EmbeddingRole.NOISY
        rounded_input = to_wire(x_tilde).astype(np.float64)
        expected = to_wire(encode(rounded_input, encoder).vector).astype(np.float64)
        assert np.array_equal(embedding.vector, expected)
        assert np.max(np.abs(embedding.vector - encode(x_tilde, encoder).vector)) <= 1e-5

    def test_sequential_requests(self, server: FrameServer) -> None:
        session = Session(InProcessTransport(server))
        first = client_request(np.ones((3, 8)), session)
        second = client_request(np.ones((5, 8)), session)
        assert first.dim == second.dim == 8

    def test_response_width_mismatch(self) -> None:
        session = Session(FixedTransport(encode_frame(embed_response(np.zeros(9)))))
        with pytest.raises(ContractError):
            client_request(np.ones((2, 8)), session)

    def test_request_width_mismatch(self, server: FrameServer) -> None:
        with pytest.raises(ServerError) as err:
            client_request(np.ones((2, 6)), Session(InProcessTransport(server)))
        assert FrameErrorCode.DIMENSION_MISMATCH.name in str(err.value)

    def test_sequence_length_cap(self, server: FrameServer) -> None:
        with pytest.raises(ServerError) as err:
            client_request(np.zeros((513, 8)), Session(InProcessTransport(server)))
        assert FrameErrorCode.SEQUENCE_TOO_LONG.name in str(err.value)

    def test_unreachable_server(self) -> None:
        session = Session(HttpTransport("http://127.0.0.1:1", timeout_seconds=5.0))
        with pytest.raises(TransportError):
            client_request(np.ones((2, 8)), session)

    def test_silent_server_times_out(self, silent_endpoint: str) -> None:
        """Test that a server that accepts but never answers is a transport failure"""

        session = Session(HttpTransport(silent_endpoint, timeout_seconds=0.5))
        with pytest.raises(TransportError) as err:
            client_request(np.ones((2, 8)), session)
        assert "no response" in str(err.value)


class TestFrameServer:
    def test_malformed_frame_then_valid(self, server: FrameServer) -> None:
        error = decode_frame(server.handle(b"not a frame at all"))
        assert error.msg_type == MessageType.ERROR
        assert read_error(error)[0] == FrameErrorCode.TRUNCATED

        answer = decode_frame(server.handle(encode_frame(embed_request(np.ones((2, 8))))))
        assert answer.msg_type == MessageType.EMBED_RESPONSE

    def test_rejects_response_frames(self, server: FrameServer) -> None:
        error = decode_frame(server.handle(encode_frame(embed_response(np.ones(8)))))
        assert read_error(error)[0] == FrameErrorCode.UNKNOWN_MESSAGE

    def test_empty_request(self, server: FrameServer) -> None:
        error = decode_frame(server.handle(encode_frame(embed_request(np.zeros((0, 8))))))
        assert read_error(error)[0] == FrameErrorCode.INTERNAL

    def test_concurrent_clients_match_serial(self, server: FrameServer) -> None:
        generator = np.random.default_rng(5)
        requests = [
            encode_frame(embed_request(generator.normal(size=(int(generator.integers(1, 12)), 8))))
            for _ in range(100)
        ]
        serial = [server.handle(request) for request in requests]

        def client(_: int) -> List[bytes]:
            session = Session(InProcessTransport(server))
            return [session.exchange(request) for request in requests]

        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(client, range(8)))
        assert all(result == serial for result in results)


class TestPayloadAccounting:
    def test_formula(self) -> None:
        accounting = payload_accounting(128, 32)
        assert accounting.upload_payload == 16384
        assert accounting.download_payload == 128
        assert accounting.upload_bytes == 16384 + 19

    def test_linear_in_n(self) -> None:
        small, large = payload_accounting(64, 32), payload_accounting(128, 32)
        assert large.upload_payload == 2 * small.upload_payload
        assert large.download_payload == small.download_payload

    def test_measured_bytes(self, server: FrameServer) -> None:
        transport = InProcessTransport(server)
        client_request(np.ones((10, 8)), Session(transport))
        expected = payload_accounting(10, 8)
        assert transport.bytes_sent == expected.upload_bytes
        assert transport.bytes_received == expected.download_bytes
        assert transport.requests == 1
        assert expected.as_metrics() == {
            "bytes_up": float(expected.upload_bytes),
            "bytes_down": float(expected.download_bytes),
        }


def imported_modules(path: Path) -> List[str]:
    """Absolute names of every module imported by the file at `path`."""

    package = ".".join(path.relative_to(PACKAGE_ROOT.parent).with_suffix("").parts[:-1])
    names = []
    for node in ast.walk(ast.parse(path.read_text(encoding="utf-8"))):
        if isinstance(node, ast.Import):
            names.extend(alias.name for alias in node.names)
        elif isinstance(node, ast.ImportFrom):
            if node.level:
                base = package.split(".")[: len(package.split(".")) - node.level + 1]
                names.append(".".join(base + ([node.module] if node.module else [])))
            else:
                names.append(node.module or "")
    return names


def test_server_side_never_imports_client_state() -> None:
    """The embedding server can only reach the encoder and the frame codec."""

    forbidden = (
        "splitdenoise.privacy",
        "splitdenoise.denoiser",
        "splitdenoise.evaluation",
        "splitdenoise.harness",
        "splitdenoise.protocol.client",
        "splitdenoise.protocol.transport",
    )
    server_files = [PACKAGE_ROOT / "protocol" / "server.py", *(PACKAGE_ROOT / "api").rglob("*.py")]
    for path in server_files:
        for name in imported_modules(path):
            assert not name.startswith(forbidden), f"{path.name} imports {name}"
    assert "splitdenoise.model.encoder" in imported_modules(PACKAGE_ROOT / "protocol" / "server.py")
