import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app.core.logging_setup import configure_logging

configure_logging()

from app.api import analysis, evaluations, health, scenarios
from app.api.deps import get_scenario
from app.core.config import settings
from app.core.exceptions import FirmError

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    logger.info("=== FIRM evaluation service starting (version %s) ===", settings.FIRM_VERSION)
    yield
    get_scenario.cache_clear()
    logger.info("=== FIRM evaluation service stopped ===")


app = FastAPI(
    title="FIRM - Evaluation service",
    description="Scenario validation, candidate evaluation and solution analytics for business-rules planning",
    version=settings.FIRM_VERSION,
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.exception_handler(FirmError)
async def firm_error_handler(request: Request, exc: FirmError):
    logger.warning("%s %s failed: %s", request.method, request.url.path, exc.detail)
    return JSONResponse(status_code=exc.status_code, content={"detail": exc.detail})


app.include_router(health.router)
app.include_router(scenarios.router)
app.include_router(evaluations.router)
app.include_router(analysis.router)
