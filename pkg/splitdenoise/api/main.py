import logging
from datetime import datetime
from http import HTTPStatus
from typing import Callable

from fastapi import FastAPI, Request, Response
from uvicorn import run

from ..config import ServerSettings
from ..exceptions import TransportError
from ..model.encoder import EncoderWeights, init_toy_model, load_encoder
from ..protocol.server import FrameServer
from ..schemas.model import EncoderConfig
from .router import api_router

log = logging.getLogger(__name__)


def create_app(frame_server: FrameServer) -> FastAPI:
    """Build the embedding API around one frame server."""

    app = FastAPI(title="splitdenoise")
    app.state.frame_server = frame_server
    app.include_router(api_router)

    @app.middleware("http")
    async def log_request(request: Request, call_next: Callable) -> Response:
        """
        Log basic information about every request handled by the server.
        """

        start = datetime.now()
        response = await call_next(request)
        handler_time = round((datetime.now() - start).total_seconds() * 1000, 3)
        log.info(
            'Request received (handled in %sms):\t"%s %s" %s',
            handler_time,
            request.method,
            request.url.path,
            f"{response.status_code} {HTTPStatus(response.status_code).phrase}",
        )
        return response

    return app


def load_server_encoder(server_config: ServerSettings) -> EncoderWeights:
    """
    The served encoder: a checkpoint when one is configured, otherwise the
    seeded toy model.
    """

    if server_config.checkpoint_path:
        log.info("Loading encoder checkpoint %s", server_config.checkpoint_path)
        return load_encoder(server_config.checkpoint_path)
    _, encoder = init_toy_model(
        EncoderConfig(
            vocab_size=server_config.vocab_size,
            dim=server_config.dim,
            seed=server_config.model_seed,
        )
    )
    return encoder


def run_webserver(server_config: ServerSettings, encoder: EncoderWeights) -> None:
    """
    Manages the API server lifecycle.
    """

    frame_server = FrameServer(encoder, server_config.max_sequence_length)
    log.info(
        "Starting the embedding server on %s:%s (d = %s)...",
        server_config.host,
        server_config.port,
        frame_server.dim,
    )
    try:
        run(
            create_app(frame_server),
            host=server_config.host,
            log_level=logging.WARNING,
            log_config=None,
            port=server_config.port,
        )
    except (OSError, SystemExit) as err:
        raise TransportError(
            f"cannot serve on {server_config.host}:{server_config.port}: {err}"
        ) from err
    log.info("Server stopped. Goodbye!")
