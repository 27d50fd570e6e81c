"""
Verification API Routes
Run the finite-exact and planar-quadrature suites on request
"""

from typing import Literal, Optional

from fastapi import APIRouter
from fastapi.concurrency import run_in_threadpool
from loguru import logger
from pydantic import BaseModel, Field

from app.api.schemas import OperatorPayload, SystemRequest
from app.core.verification import VerificationReport, run_verification

router = APIRouter()


class VerifyRequest(BaseModel):
    """Request model for a verification run"""
    suite: Literal["finite-exact", "planar-quadrature", "all"] = Field(default="finite-exact")
    system: Optional[SystemRequest] = Field(
        None, description="System to verify; defaults to N = 2..5 and the configured planar grid"
    )
    kernel: Optional[OperatorPayload] = None
    random_kernels: int = Field(default=5, ge=0, le=50)
    seed: Optional[int] = None


@router.post(
    "/verify",
    response_model=VerificationReport,
    summary="Run verification suites",
)
async def verify(request: VerifyRequest) -> VerificationReport:
    """
    Run a suite and return its report

    The report is returned with status 200 whether or not every check
    passes; inspect `passed` and the failing records.
    """
    logger.info(f"Verification request: suite={request.suite}")
    system = request.system.build() if request.system else None
    kernel_op = request.kernel.to_operator() if request.kernel else None
    return await run_in_threadpool(
        run_verification, request.suite, system, kernel_op, request.random_kernels, request.seed
    )
