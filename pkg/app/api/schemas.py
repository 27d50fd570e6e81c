"""
Request models shared by the API routes
"""

from typing import List, Literal, Optional

from pydantic import BaseModel, Field

from app.config import Tolerances, get_settings
from app.core.exceptions import InvalidGrid
from app.core.groups import WeylSystem, build_system
from app.core.operators import Operator
from app.core.serialization import from_pairs


class SystemRequest(BaseModel):
    """System descriptor; planar fields default to the configured grid"""
    kind: Literal["finite", "planar"] = Field(..., examples=["finite"])
    N: Optional[int] = Field(None, ge=2, examples=[3])
    M: Optional[int] = Field(None, ge=2)
    L: Optional[float] = Field(None, gt=0)
    h: Optional[float] = Field(None, gt=0)

    def build(self, tolerances: Optional[Tolerances] = None) -> WeylSystem:
        settings = get_settings()
        size = self.N if self.kind == "finite" else (self.M or settings.planar_fock_dim)
        if size is not None and size > settings.max_dim:
            raise InvalidGrid(f"Dimension {size} exceeds the configured limit {settings.max_dim}")
        return build_system(self.model_dump(), tolerances)


class OperatorPayload(BaseModel):
    """Operator JSON: dim plus [re, im] pairs row by row"""
    dim: Optional[int] = None
    data: List[List[List[float]]]

    def to_operator(self) -> Operator:
        return Operator(from_pairs(self.data))
