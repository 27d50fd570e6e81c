"""
Quantization API Routes
Gamma_T(f) for a builtin function family
"""

from typing import Optional

from fastapi import APIRouter
from fastapi.concurrency import run_in_threadpool
from loguru import logger
from pydantic import BaseModel, Field

from app.api.schemas import OperatorPayload, SystemRequest
from app.core.observables import FunctionSpec
from app.core.quantization import QuantizationKernel, quantize
from app.core.serialization import complex_pairs

router = APIRouter()


class QuantizeRequest(BaseModel):
    """Request model for quantization"""
    system: SystemRequest
    kernel: Optional[OperatorPayload] = Field(None, description="Density operator; vacuum when omitted")
    function: FunctionSpec = Field(..., examples=[{"family": "one"}])


class QuantizeResponse(BaseModel):
    success: bool
    dim: int
    data: list
    trace: float
    hermiticity_residual: float


@router.post("/quantize", response_model=QuantizeResponse, summary="Quantize a function")
async def quantize_function(request: QuantizeRequest) -> QuantizeResponse:
    logger.info(f"Quantize request: {request.function.family} on {request.system.kind}")
    system = request.system.build()
    if request.kernel is not None:
        kernel = QuantizationKernel.from_operator(request.kernel.to_operator(), system.tolerances)
    else:
        kernel = QuantizationKernel.vacuum(system.fock_dim)
    f = request.function.on(system.carrier)
    gamma_f = await run_in_threadpool(quantize, system, kernel, f)
    return QuantizeResponse(
        success=True,
        dim=gamma_f.dim,
        data=complex_pairs(gamma_f.entries),
        trace=float(gamma_f.entries.trace().real),
        hermiticity_residual=gamma_f.hermiticity_residual(),
    )
