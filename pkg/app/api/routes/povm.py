"""
POVM API Routes
Outcome probabilities of a covariant POVM
"""

from typing import List, Optional

from fastapi import APIRouter
from fastapi.concurrency import run_in_threadpool
from loguru import logger
from pydantic import BaseModel, Field

from app.api.schemas import OperatorPayload, SystemRequest
from app.core.operators import DensityOperator
from app.core.povm import build_povm, partition_from_spec, probabilities
from app.core.quantization import QuantizationKernel

router = APIRouter()


class ProbabilitiesRequest(BaseModel):
    """Request model for POVM probabilities"""
    system: SystemRequest
    kernel: Optional[OperatorPayload] = Field(None, description="Density operator; vacuum when omitted")
    partition: str = Field(default="singletons", description="singletons | whole | quadrants | blocks:K")
    rho: Optional[OperatorPayload] = Field(None, description="State; the kernel itself when omitted")


class CellProbability(BaseModel):
    label: str
    probability: float


class ProbabilitiesResponse(BaseModel):
    success: bool
    cells: List[CellProbability]
    total: float


@router.post("/povm/probabilities", response_model=ProbabilitiesResponse, summary="POVM outcome probabilities")
async def povm_probabilities(request: ProbabilitiesRequest) -> ProbabilitiesResponse:
    logger.info(f"Probabilities request: partition={request.partition} on {request.system.kind}")
    system = request.system.build()
    if request.kernel is not None:
        kernel = QuantizationKernel.from_operator(request.kernel.to_operator(), system.tolerances)
    else:
        kernel = QuantizationKernel.vacuum(system.fock_dim)
    rho = DensityOperator(request.rho.to_operator(), system.tolerances) if request.rho else kernel.density
    povm = await run_in_threadpool(build_povm, system, kernel, partition_from_spec(request.partition, system.carrier))
    probs = probabilities(povm, rho)
    return ProbabilitiesResponse(
        success=True,
        cells=[CellProbability(label=label, probability=p) for label, p in zip(povm.partition.labels, probs)],
        total=float(sum(probs)),
    )
