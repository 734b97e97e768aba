from fastapi import APIRouter

from .routes.embeddings import embedding_router
from .routes.health import health_router

api_router = APIRouter()
api_router.include_router(embedding_router)
api_router.include_router(health_router)
