from contextlib import asynccontextmanager
from typing import AsyncGenerator

import torch
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from core.config import settings
from core.exceptions import DoGanError, generic_exception_handler, unified_exception_handler
from core.logger import get_logger, setup_logging
from routers import games as games_router
from routers import health as health_router
from routers import runs as runs_router

logger = get_logger("main")


@asynccontextmanager
async def lifespan(app: FastAPI) -> AsyncGenerator[None, None]:
    """
    Startup: logging and torch thread count.
    Nothing to release on shutdown; run directories are plain files.
    """
    setup_logging(include_timestamp=True)

    if settings.TORCH_NUM_THREADS:
        torch.set_num_threads(settings.TORCH_NUM_THREADS)

    logger.info(
        "Application startup",
        app=settings.APP_NAME,
        version=settings.APP_VERSION,
        output_root=str(settings.output_root()),
        torch_threads=torch.get_num_threads(),
    )
    yield
    logger.info("Application shutdown", app=settings.APP_NAME)


app = FastAPI(
    title=settings.APP_NAME,
    version=settings.APP_VERSION,
    description="""
Double-oracle GAN toolkit.

- /games/*: exact equilibria and double oracle on finite matrix games
- /runs/*: inspect and evaluate run directories written by `cli.py train`
- /health
""",
    lifespan=lifespan,
)

# allow_credentials stays off while allow_origins may be "*"
app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.CORS_ORIGINS,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.exception_handler(DoGanError)(unified_exception_handler)
app.exception_handler(Exception)(generic_exception_handler)

app.include_router(health_router.router)
app.include_router(games_router.router)
app.include_router(runs_router.router)


@app.get("/")
def read_root():
    return {"message": f"Welcome to {settings.APP_NAME} API. Check /docs for endpoints."}


if __name__ == "__main__":
    import uvicorn

    uvicorn.run("main:app", host="127.0.0.1", port=8000)
