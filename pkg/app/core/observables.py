"""
Classical Observables
Functions on the group carrier, stored as values in enumeration order, and the
builtin function families used by the CLI and HTTP surface
"""

from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.exceptions import CarrierMismatch, InvalidObservable, TranslationLeavesGrid
from app.core.groups import GroupCarrier

FamilyKind = Literal["one", "indicator", "poly-qp", "gauss-bump", "exp-quadratic"]


@dataclass(frozen=True, eq=False)
class ClassicalObservable:
    """Function f on the carrier; NaN or Inf values are rejected at construction"""

    carrier: GroupCarrier
    values: np.ndarray = field(repr=False)
    declared_sup: Optional[float] = None

    def __post_init__(self):
        data = np.array(self.values, dtype=np.complex128, copy=True).ravel()
        if data.size != self.carrier.size:
            raise InvalidObservable(
                f"Observable has {data.size} values, carrier has {self.carrier.size} points"
            )
        if not np.all(np.isfinite(data)):
            raise InvalidObservable("Observable values must be finite (NaN/Inf rejected)")
        if self.declared_sup is not None:
            if not np.isfinite(self.declared_sup) or self.declared_sup < 0:
                raise InvalidObservable(f"Declared sup must be finite and nonnegative, got {self.declared_sup}")
            peak = float(np.max(np.abs(data)))
            if peak > self.declared_sup + 1e-12:
                raise InvalidObservable(f"max |f| = {peak:.6g} exceeds declared sup {self.declared_sup:.6g}")
        data.setflags(write=False)
        object.__setattr__(self, "values", data)

    # ----------------------------------------
    # Constructors
    # ----------------------------------------
    @classmethod
    def bounded(cls, carrier: GroupCarrier, values: np.ndarray) -> "ClassicalObservable":
        """Observable with its grid sup recorded as the declared bound"""
        values = np.asarray(values, dtype=np.complex128)
        sup = float(np.max(np.abs(values))) if values.size else 0.0
        return cls(carrier, values, declared_sup=sup if np.isfinite(sup) else None)

    @classmethod
    def constant(cls, carrier: GroupCarrier, value: complex = 1.0) -> "ClassicalObservable":
        return cls.bounded(carrier, np.full(carrier.size, value, dtype=np.complex128))

    @classmethod
    def indicator(cls, carrier: GroupCarrier, indices: Sequence[int]) -> "ClassicalObservable":
        values = np.zeros(carrier.size, dtype=np.complex128)
        values[np.asarray(list(indices), dtype=np.int64)] = 1.0
        return cls(carrier, values, declared_sup=1.0)

    # ----------------------------------------
    # Properties
    # ----------------------------------------
    @property
    def is_real(self) -> bool:
        return bool(np.all(self.values.imag == 0.0))

    @property
    def real_values(self) -> np.ndarray:
        return self.values.real

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l1_norm(self) -> float:
        """sum_g w_g |f(g)|"""
        return float(self.carrier.weight * np.sum(np.abs(self.values)))

    def require_carrier(self, carrier: GroupCarrier) -> None:
        if self.carrier != carrier:
            raise CarrierMismatch(
                f"Observable lives on {self.carrier.descriptor()}, expected {carrier.descriptor()}"
            )

    # ----------------------------------------
    # Algebra
    # ----------------------------------------
    def combine(self, other: "ClassicalObservable", a: complex = 1.0, b: complex = 1.0) -> "ClassicalObservable":
        """a*f + b*h on the same carrier"""
        other.require_carrier(self.carrier)
        return ClassicalObservable(self.carrier, a * self.values + b * other.values)

    def capped(self, cap: float) -> "ClassicalObservable":
        """min(f, cap) for real f"""
        return ClassicalObservable.bounded(self.carrier, np.minimum(self.values.real, cap))

    def restricted(self, mask: np.ndarray) -> "ClassicalObservable":
        """f times the indicator of mask"""
        return ClassicalObservable(self.carrier, np.where(mask, self.values, 0.0), self.declared_sup)

    def translated(self, g: Sequence[float], mass_tol: float) -> "ClassicalObservable":
        """
        g' -> f(g + g') by exact index arithmetic

        Finite carriers wrap around. On planar grids values that would be read
        from outside the window are taken as zero; the mass of f that drops out
        of the window, relative to its total window mass, must stay below
        mass_tol.

        Raises:
            TranslationLeavesGrid: when the dropped mass fraction exceeds mass_tol
        """
        shift = self.carrier.shift_indices(g)
        if self.carrier.is_finite:
            return ClassicalObservable(self.carrier, self.values[shift], self.declared_sup)
        inside = shift >= 0
        shifted = np.zeros(self.carrier.size, dtype=np.complex128)
        shifted[inside] = self.values[shift[inside]]
        kept = np.zeros(self.carrier.size, dtype=bool)
        kept[shift[inside]] = True
        dropped = float(np.sum(np.abs(self.values[~kept])))
        total = float(np.sum(np.abs(self.values)))
        if dropped > mass_tol * total:
            raise TranslationLeavesGrid(
                f"Translation by {tuple(g)} moves {dropped / total:.3e} of the mass of f "
                f"out of the window (> {mass_tol:.1e})"
            )
        return ClassicalObservable(self.carrier, shifted, self.declared_sup)


# ============================================
# Builtin function families
# ============================================

class Monomial(BaseModel):
    """Coefficient of q^a p^b"""
    a: int = Field(ge=0)
    b: int = Field(ge=0)
    c: float


class FunctionSpec(BaseModel):
    """
    Builtin function family

    Families:
        one            f = 1
        indicator      grid points (points) or a rectangle [q0, q1) x [p0, p1)
        poly-qp        sum of c * q^a * p^b (planar only)
        gauss-bump     exp(-|g - center|^2 / (2 width^2)), cyclic distance on Z_N
        exp-quadratic  exp(scale * (q^2 + p^2)), a fast-growing test function
    An optional cap replaces f by min(f, cap).
    """

    model_config = ConfigDict(extra="forbid")

    family: FamilyKind
    points: Optional[List[Tuple[float, float]]] = None
    rectangle: Optional[Tuple[float, float, float, float]] = None
    monomials: Optional[List[Monomial]] = None
    center: Tuple[float, float] = (0.0, 0.0)
    width: float = Field(default=1.0, gt=0)
    amplitude: float = 1.0
    scale: float = 1.0
    cap: Optional[float] = None

    @model_validator(mode="after")
    def check_family_fields(self) -> "FunctionSpec":
        if self.family == "indicator" and self.points is None and self.rectangle is None:
            raise ValueError("indicator needs points or rectangle")
        if self.family == "poly-qp" and not self.monomials:
            raise ValueError("poly-qp needs monomials")
        return self

    def evaluate(self, carrier: GroupCarrier) -> np.ndarray:
        """Values on the carrier in enumeration order"""
        coords = carrier.coordinates().astype(float)
        q, p = coords[:, 0], coords[:, 1]
        if self.family == "one":
            values = np.ones(carrier.size)
        elif self.family == "indicator":
            values = np.zeros(carrier.size)
            if self.points is not None:
                for point in self.points:
                    values[carrier.index_of(point)] = 1.0
            if self.rectangle is not None:
                q0, q1, p0, p1 = self.rectangle
                values[(q >= q0) & (q < q1) & (p >= p0) & (p < p1)] = 1.0
        elif self.family == "poly-qp":
            if carrier.is_finite:
                raise InvalidObservable("poly-qp is defined on planar carriers only")
            values = np.zeros(carrier.size)
            for mono in self.monomials or []:
                values = values + mono.c * q ** mono.a * p ** mono.b
        elif self.family == "gauss-bump":
            dq, dp = q - self.center[0], p - self.center[1]
            if carrier.is_finite:
                n = carrier.modulus
                dq = np.minimum(np.mod(dq, n), np.mod(-dq, n))
                dp = np.minimum(np.mod(dp, n), np.mod(-dp, n))
            values = self.amplitude * np.exp(-(dq ** 2 + dp ** 2) / (2.0 * self.width ** 2))
        else:
            with np.errstate(over="ignore"):
                values = np.exp(self.scale * (q ** 2 + p ** 2))
        if self.cap is not None:
            values = np.minimum(values, self.cap)
        return values

    def on(self, carrier: GroupCarrier) -> ClassicalObservable:
        """Evaluate and wrap; the window maximum becomes the declared bound"""
        return ClassicalObservable.bounded(carrier, self.evaluate(carrier))


def radial_quadratic() -> FunctionSpec:
    """f(q, p) = (q^2 + p^2) / 2"""
    return FunctionSpec(family="poly-qp", monomials=[Monomial(a=2, b=0, c=0.5), Monomial(a=0, b=2, c=0.5)])
