from fastapi import APIRouter, Request, status
from fastapi.responses import JSONResponse

from ...protocol.frames import PROTOCOL_VERSION

health_router = APIRouter(tags=["Health"])


@health_router.get("/health", status_code=status.HTTP_200_OK)
async def health(request: Request) -> JSONResponse:
    """Confirm that the API is running and report the served model width."""

    return JSONResponse(
        {
            "status": "healthy",
            "dim": request.app.state.frame_server.dim,
            "protocol_version": PROTOCOL_VERSION,
        }
    )
