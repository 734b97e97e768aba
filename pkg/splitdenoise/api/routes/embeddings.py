from fastapi import APIRouter, Request, Response, status
from fastapi.concurrency import run_in_threadpool

from ...protocol.frames import MEDIA_TYPE
from ...protocol.server import FrameServer

embedding_router = APIRouter(tags=["Embeddings"])


@embedding_router.post(
    "/embed",
    response_class=Response,
    responses={status.HTTP_200_OK: {"content": {MEDIA_TYPE: {}}}},
    status_code=status.HTTP_200_OK,
)
async def embed(request: Request) -> Response:
    """
    Answer one EmbedRequest frame. Malformed or rejected requests are answered
    with an Error frame, so the HTTP status is always 200.
    """

    server: FrameServer = request.app.state.frame_server
    body = await request.body()
    answer = await run_in_threadpool(server.handle, body)
    return Response(content=answer, media_type=MEDIA_TYPE)
