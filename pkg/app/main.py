"""
FastAPI Main Application
Covariant Quantization Toolkit over HTTP
"""

import time
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.middleware.gzip import GZipMiddleware
from fastapi.responses import JSONResponse
from loguru import logger

from app.api.routes import povm, quantize, verify
from app.config import get_settings
from app.core.exceptions import QuantizationError
from app.utils.log_setup import configure_logging

settings = get_settings()
configure_logging(settings.log_level, settings.log_file)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """
    Application lifespan handler
    Logs startup configuration and shutdown
    """
    logger.info(f"Starting {settings.app_name} v{settings.app_version}...")
    logger.info(f"Environment: {settings.environment}")
    logger.info(
        f"Planar defaults: M={settings.planar_fock_dim}, L={settings.planar_half_extent}, "
        f"h={settings.planar_step}; sweep workers: {settings.sweep_workers}"
    )
    yield
    logger.info("Shutting down application...")


app = FastAPI(
    title=settings.app_name,
    version=settings.app_version,
    description="Covariant quantization maps, covariant POVMs and their verification suites",
    docs_url="/api/docs" if settings.debug else None,
    redoc_url="/api/redoc" if settings.debug else None,
    lifespan=lifespan,
)


# ============================================
# Middleware Configuration
# ============================================

app.add_middleware(GZipMiddleware, minimum_size=1000)


@app.middleware("http")
async def add_process_time_header(request: Request, call_next):
    """Add X-Process-Time header to responses"""
    start_time = time.time()
    response = await call_next(request)
    response.headers["X-Process-Time"] = str(time.time() - start_time)
    return response


@app.middleware("http")
async def log_requests(request: Request, call_next):
    """Log all incoming requests"""
    logger.info(f"Request: {request.method} {request.url.path}")
    response = await call_next(request)
    logger.info(f"Response: {response.status_code}")
    return response


# ============================================
# Exception Handlers
# ============================================

@app.exception_handler(QuantizationError)
async def quantization_exception_handler(request: Request, exc: QuantizationError):
    """Computation errors are the client's input; report them as 422"""
    logger.warning(f"{type(exc).__name__} on {request.url.path}: {exc}")
    return JSONResponse(
        status_code=422,
        content={"success": False, "error": type(exc).__name__, "detail": str(exc)},
    )


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    """Global exception handler"""
    logger.error(f"Unhandled exception: {exc}")
    return JSONResponse(
        status_code=500,
        content={
            "success": False,
            "error": "Internal server error",
            "detail": str(exc) if settings.debug else "An error occurred",
        },
    )


# ============================================
# Health Check Endpoints
# ============================================

@app.get("/health")
async def health_check():
    """Health check endpoint"""
    return {"status": "healthy", "timestamp": time.time()}


@app.get("/api/v1/info")
async def api_info():
    """Defaults and tolerances the service runs with"""
    return {
        "api_version": "1.0",
        "planar_defaults": {
            "M": settings.planar_fock_dim,
            "L": settings.planar_half_extent,
            "h": settings.planar_step,
            "trusted_dim": settings.planar_trusted_dim,
        },
        "tolerances": settings.tolerances().model_dump(),
        "limits": {"max_dim": settings.max_dim},
    }


# ============================================
# API Routes
# ============================================

app.include_router(verify.router, prefix="/api/v1", tags=["Verification"])
app.include_router(quantize.router, prefix="/api/v1", tags=["Quantization"])
app.include_router(povm.router, prefix="/api/v1", tags=["POVM"])
