"""
Weyl Systems
Finite Weyl-Heisenberg system on Z_N x Z_N (exact) and the truncated planar
Weyl system on a phase-space grid (Fock basis, closed-form matrix elements)
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import eval_genlaguerre, gammaln

from app.config import Tolerances, default_tolerances, get_settings
from app.core.exceptions import (
    InvalidGrid,
    NotRankOneProjection,
    OffGridElement,
    QuantizationError,
)
from app.core.operators import Effect, Operator
from app.utils.operator_cache import OperatorCache
from app.utils.summation import map_chunks, pairwise_sum, reduce_chunks

GroupElement = Tuple[float, float]
OperatorLike = Union[Operator, Effect]


class CarrierKind(str, Enum):
    """Supported group carriers"""
    FINITE_TORUS = "finite"
    PLANAR_GRID = "planar"


# ============================================
# Group carrier
# ============================================

@dataclass(frozen=True)
class GroupCarrier:
    """
    Enumerated group with its Haar weights

    FiniteTorus: Z_N x Z_N, counting measure, index = a*N + b.
    PlanarGrid:  points (q, p) with q, p in {-L, -L+h, ..., L-h}, weight h^2,
                 index = iq*M_p + ip.
    """

    kind: CarrierKind
    modulus: Optional[int] = None
    half_extent: Optional[float] = None
    step: Optional[float] = None
    _axis: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", CarrierKind(self.kind))
        if self.kind == CarrierKind.FINITE_TORUS:
            if self.modulus is None or int(self.modulus) != self.modulus or self.modulus < 2:
                raise InvalidGrid(f"Finite torus needs an integer modulus N >= 2, got {self.modulus}")
            object.__setattr__(self, "modulus", int(self.modulus))
            object.__setattr__(self, "_axis", int(self.modulus))
        else:
            L, h = self.half_extent, self.step
            if L is None or h is None or not (L > 0 and h > 0) or not (math.isfinite(L) and math.isfinite(h)):
                raise InvalidGrid(f"Planar grid needs L > 0 and h > 0, got L={L}, h={h}")
            ratio = L / h
            if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio) or round(ratio) < 1:
                raise InvalidGrid(f"L/h must be a positive integer, got L={L}, h={h} (L/h={ratio:.6g})")
            object.__setattr__(self, "half_extent", float(L))
            object.__setattr__(self, "step", float(h))
            object.__setattr__(self, "_axis", 2 * int(round(ratio)))

    # ----------------------------------------
    # Sizes and measure
    # ----------------------------------------
    @property
    def is_finite(self) -> bool:
        return self.kind == CarrierKind.FINITE_TORUS

    @property
    def points_per_axis(self) -> int:
        return self._axis

    @property
    def size(self) -> int:
        return self._axis * self._axis

    @property
    def weight(self) -> float:
        """Haar weight w_g (uniform on both carriers)"""
        return 1.0 if self.is_finite else self.step * self.step

    def weights(self) -> np.ndarray:
        return np.full(self.size, self.weight)

    def measure(self, indices: Sequence[int]) -> float:
        """lambda(B) for a set of grid indices"""
        return self.weight * len(set(int(i) for i in indices))

    # ----------------------------------------
    # Enumeration
    # ----------------------------------------
    def axis_values(self) -> np.ndarray:
        if self.is_finite:
            return np.arange(self._axis)
        return -self.half_extent + self.step * np.arange(self._axis)

    def coordinates(self) -> np.ndarray:
        """(size, 2) array of group elements in enumeration order"""
        axis = self.axis_values()
        first, second = np.meshgrid(axis, axis, indexing="ij")
        return np.stack([first.ravel(), second.ravel()], axis=1)

    def element(self, index: int) -> GroupElement:
        if not 0 <= index < self.size:
            raise OffGridElement(f"Index {index} outside carrier of size {self.size}")
        i, j = divmod(int(index), self._axis)
        axis = self.axis_values()
        return (axis[i].item(), axis[j].item())

    def _axis_index(self, value: float) -> int:
        if self.is_finite:
            if int(value) != value:
                raise OffGridElement(f"Finite torus coordinates must be integers, got {value}")
            return int(value) % self._axis
        pos = (value + self.half_extent) / self.step
        k = int(round(pos))
        if abs(pos - k) > 1e-6 or not 0 <= k < self._axis:
            raise OffGridElement(f"Coordinate {value} is not a grid point of [-{self.half_extent}, {self.half_extent})")
        return k

    def index_of(self, g: Sequence[float]) -> int:
        """Enumeration index of a group element"""
        if len(g) != 2:
            raise OffGridElement(f"Group elements are pairs, got {g}")
        return self._axis_index(g[0]) * self._axis + self._axis_index(g[1])

    @property
    def identity_index(self) -> int:
        return self.index_of((0, 0))

    def lattice_offset(self, g: Sequence[float]) -> Tuple[int, int]:
        """Integer lattice offsets of a translation vector"""
        if self.is_finite:
            return (self._axis_index(g[0]), self._axis_index(g[1]))
        offsets = []
        for value in g:
            pos = value / self.step
            k = int(round(pos))
            if abs(pos - k) > 1e-6:
                raise OffGridElement(f"Translation {value} is not a multiple of the grid step {self.step}")
            offsets.append(k)
        return (offsets[0], offsets[1])

    def shift_indices(self, g: Sequence[float]) -> np.ndarray:
        """
        Index map for translation by g

        Returns:
            array s with s[i] = index of (g + g_i), or -1 when that point leaves
            the planar window
        """
        da, db = self.lattice_offset(g)
        i, j = np.divmod(np.arange(self.size), self._axis)
        if self.is_finite:
            return ((i + da) % self._axis) * self._axis + (j + db) % self._axis
        ii, jj = i + da, j + db
        inside = (ii >= 0) & (ii < self._axis) & (jj >= 0) & (jj < self._axis)
        return np.where(inside, ii * self._axis + jj, -1)

    def window_mask(self, half_extent: float) -> np.ndarray:
        """Points with both coordinates in [-L', L') (planar nested windows)"""
        if self.is_finite:
            return np.ones(self.size, dtype=bool)
        coords = self.coordinates()
        eps = 1e-9 * self.step
        inside = (coords >= -half_extent - eps) & (coords < half_extent - eps)
        return inside[:, 0] & inside[:, 1]

    def descriptor(self) -> dict:
        if self.is_finite:
            return {"kind": self.kind.value, "N": self.modulus}
        return {"kind": self.kind.value, "L": self.half_extent, "h": self.step}


# ============================================
# Closed-form matrix elements
# ============================================

def _finite_tau_power(modulus: int, exponent: np.ndarray) -> np.ndarray:
    """
    tau**exponent for the finite phase convention

    Odd N: tau = omega^((N+1)/2), so tau^2 = omega and tau^N = 1.
    Even N: tau = exp(i*pi/N), a primitive 2N-th root with tau^2 = omega.
    """
    exponent = np.asarray(exponent, dtype=np.int64)
    if modulus % 2:
        k = (((modulus + 1) // 2) * exponent) % modulus
        return np.exp(2j * np.pi * k / modulus)
    k = exponent % (2 * modulus)
    return np.exp(1j * np.pi * k / modulus)


def finite_weyl_matrices(modulus: int, indices: np.ndarray) -> np.ndarray:
    """
    W(a, b) = tau^(ab) X^a Z^b for a batch of enumeration indices

    X|k> = |k+1 mod N>, Z|k> = omega^k |k>.
    """
    indices = np.asarray(indices, dtype=np.int64)
    a, b = np.divmod(indices, modulus)
    j = np.arange(modulus)
    phases = _finite_tau_power(modulus, a * b)[:, None] * np.exp(
        2j * np.pi * ((b[:, None] * j[None, :]) % modulus) / modulus
    )
    out = np.zeros((indices.size, modulus, modulus), dtype=np.complex128)
    rows = (j[None, :] + a[:, None]) % modulus
    out[np.arange(indices.size)[:, None], rows, j[None, :]] = phases
    return out


def displacement_elements(alpha: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """
    Fock-basis matrix elements <m|D(alpha)|n> of the displacement operator

    For m >= n: sqrt(n!/m!) alpha^(m-n) exp(-|alpha|^2/2) L_n^(m-n)(|alpha|^2);
    for m < n the same with alpha -> -conj(alpha) and m, n swapped.

    Args:
        alpha: complex amplitudes, shape (k,)
        rows: Fock row indices m
        cols: Fock column indices n

    Returns:
        array of shape (k, len(rows), len(cols))
    """
    alpha = np.asarray(alpha, dtype=np.complex128).reshape(-1, 1, 1)
    m = np.asarray(rows, dtype=np.int64)[:, None]
    n = np.asarray(cols, dtype=np.int64)[None, :]
    lo = np.minimum(m, n)
    diff = np.abs(m - n)
    x = (alpha * alpha.conj()).real
    log_prefactor = 0.5 * (gammaln(lo + 1) - gammaln(lo + diff + 1)) - 0.5 * x
    base = np.where(m >= n, alpha, -alpha.conj())
    laguerre = eval_genlaguerre(lo, diff, x)
    elements = np.exp(log_prefactor) * base ** diff * laguerre
    # zero displacement is the identity exactly
    zero = x.ravel() == 0.0
    if np.any(zero):
        elements[zero] = (m == n).astype(np.complex128)
    return elements


def planar_alpha(coords: np.ndarray) -> np.ndarray:
    """
    Complex amplitude for W(q, p) = exp(i(p x - q P))

    The identification alpha = (-q + i p)/sqrt(2) gives
    |<0|W(q,p)|0>|^2 = exp(-(q^2+p^2)/2) and W(x)W(y) = exp(i{x,y}/2) W(x+y)
    with {(q,p),(q',p')} = q p' - p q'.
    """
    coords = np.atleast_2d(coords)
    return (-coords[:, 0] + 1j * coords[:, 1]) / np.sqrt(2.0)


# ============================================
# Weyl systems
# ============================================

class WeylSystem:
    """
    Concrete (G, beta, d): carrier, Weyl unitaries W(g) and the constant d

    beta_g(S) = W(g) S W(g)^dagger; beta_g^*(A) = W(g)^dagger A W(g).
    """

    def __init__(self, carrier: GroupCarrier, fock_dim: int, d_const: float,
                 tolerances: Optional[Tolerances] = None):
        self.carrier = carrier
        self.fock_dim = fock_dim
        self.d_const = float(d_const)
        self.tolerances = tolerances or default_tolerances()
        settings = get_settings()
        self.chunk_size = settings.sweep_chunk_size
        self.workers = settings.sweep_workers

    # Subclasses provide the batched matrix constructors
    def unitaries(self, indices: Sequence[int]) -> np.ndarray:
        raise NotImplementedError

    def block(self, indices: Sequence[int], rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        raise NotImplementedError

    @property
    def is_finite(self) -> bool:
        return self.carrier.is_finite

    @property
    def unitary_tol(self) -> float:
        return self.tolerances.unitary_tol if self.is_finite else self.tolerances.planar_unitary_tol

    @property
    def trusted_dim(self) -> int:
        """Fock levels where truncation effects are negligible (whole space when finite)"""
        return self.fock_dim

    def index(self, g: Union[int, Sequence[float]]) -> int:
        if isinstance(g, (int, np.integer)):
            if not 0 <= g < self.carrier.size:
                raise OffGridElement(f"Index {g} outside carrier of size {self.carrier.size}")
            return int(g)
        return self.carrier.index_of(g)

    def sweep(self, chunk_fn, total: Optional[int] = None) -> np.ndarray:
        """
        Deterministic chunked reduction over the carrier

        Args:
            chunk_fn: maps an index array to the stacked per-point terms
            total: number of points (defaults to the carrier size)

        Returns:
            pairwise sum of all terms in enumeration order
        """
        total = self.carrier.size if total is None else total

        def _partial(chunk: slice) -> np.ndarray:
            return pairwise_sum(chunk_fn(np.arange(chunk.start, chunk.stop)))

        return reduce_chunks(map_chunks(_partial, total, self.chunk_size, self.workers))

    def map_points(self, point_fn, indices: Optional[np.ndarray] = None) -> np.ndarray:
        """Concatenate per-point results (e.g. symbol values) in enumeration order"""
        indices = np.arange(self.carrier.size) if indices is None else np.asarray(indices)

        def _part(chunk: slice) -> np.ndarray:
            return point_fn(indices[chunk])

        return np.concatenate(map_chunks(_part, indices.size, self.chunk_size, self.workers), axis=0)

    def descriptor(self) -> dict:
        raise NotImplementedError


class FiniteWeylSystem(WeylSystem):
    """Weyl-Heisenberg system on Z_N x Z_N with d = N"""

    def __init__(self, modulus: int, tolerances: Optional[Tolerances] = None):
        super().__init__(GroupCarrier(CarrierKind.FINITE_TORUS, modulus=modulus),
                         fock_dim=modulus, d_const=float(modulus), tolerances=tolerances)
        self.modulus = modulus

    def unitaries(self, indices: Sequence[int]) -> np.ndarray:
        return finite_weyl_matrices(self.modulus, np.atleast_1d(indices))

    def block(self, indices, rows, cols) -> np.ndarray:
        full = self.unitaries(indices)
        return full[:, np.asarray(rows)][:, :, np.asarray(cols)]

    def descriptor(self) -> dict:
        return {"kind": "finite", "N": self.modulus, "d": self.d_const}


class PlanarWeylSystem(WeylSystem):
    """Truncated continuous Weyl system on [-L, L)^2 with step h, d = 2*pi"""

    def __init__(self, fock_dim: int, half_extent: float, step: float,
                 tolerances: Optional[Tolerances] = None, cache_capacity: Optional[int] = None):
        if int(fock_dim) != fock_dim or fock_dim < 2:
            raise InvalidGrid(f"Fock truncation M must be an integer >= 2, got {fock_dim}")
        super().__init__(GroupCarrier(CarrierKind.PLANAR_GRID, half_extent=half_extent, step=step),
                         fock_dim=int(fock_dim), d_const=2.0 * np.pi, tolerances=tolerances)
        settings = get_settings()
        self.cache = OperatorCache(cache_capacity or settings.weyl_cache_capacity, name="planar-weyl")
        self._trusted = min(settings.planar_trusted_dim, self.fock_dim)
        self._coords = self.carrier.coordinates()
        # worst sampled unitarity defect, filled in by the builder
        self.truncation_defect = 0.0

    @property
    def trusted_dim(self) -> int:
        return self._trusted

    def alphas(self, indices: Sequence[int]) -> np.ndarray:
        return planar_alpha(self._coords[np.atleast_1d(indices)])

    def unitaries(self, indices: Sequence[int]) -> np.ndarray:
        indices = np.atleast_1d(np.asarray(indices, dtype=np.int64))
        out = np.empty((indices.size, self.fock_dim, self.fock_dim), dtype=np.complex128)
        missing: List[int] = []
        for pos, idx in enumerate(indices):
            cached = self.cache.get(int(idx))
            if cached is None:
                missing.append(pos)
            else:
                out[pos] = cached
        if missing:
            levels = np.arange(self.fock_dim)
            fresh = displacement_elements(self.alphas(indices[missing]), levels, levels)
            for pos, matrix in zip(missing, fresh):
                out[pos] = matrix
                self.cache.set(int(indices[pos]), matrix)
        return out

    def block(self, indices, rows, cols) -> np.ndarray:
        return displacement_elements(self.alphas(indices), np.asarray(rows), np.asarray(cols))

    def descriptor(self) -> dict:
        return {"kind": "planar", "M": self.fock_dim, "L": self.carrier.half_extent,
                "h": self.carrier.step, "d": self.d_const}


# ============================================
# Builders
# ============================================

def build_finite_weyl(modulus: int, tolerances: Optional[Tolerances] = None) -> FiniteWeylSystem:
    """
    Finite Weyl-Heisenberg system on Z_N x Z_N

    Args:
        modulus: N >= 2

    Returns:
        validated FiniteWeylSystem with d = N
    """
    system = FiniteWeylSystem(modulus, tolerances)
    _validate_system(system)
    logger.info(f"Built finite Weyl system N={modulus} ({system.carrier.size} group elements)")
    return system


def build_planar_weyl(fock_dim: int, half_extent: float, step: float,
                      tolerances: Optional[Tolerances] = None,
                      cache_capacity: Optional[int] = None) -> PlanarWeylSystem:
    """
    Truncated planar Weyl system in the Fock basis

    Args:
        fock_dim: truncation M >= 2
        half_extent: window half-width L
        step: grid step h (L/h integral)

    Returns:
        PlanarWeylSystem with d = 2*pi

    Raises:
        InvalidGrid: on inconsistent parameters
    """
    system = PlanarWeylSystem(fock_dim, half_extent, step, tolerances, cache_capacity)
    _validate_system(system)
    logger.info(
        f"Built planar Weyl system M={fock_dim}, L={half_extent}, h={step} "
        f"({system.carrier.size} grid points)"
    )
    return system


def _validate_system(system: WeylSystem) -> None:
    """
    Check W(e) = I and unitarity

    Finite systems are exact, so a unitarity defect there is an error
    (checked exhaustively when small). Planar defects come from the Fock
    truncation, not from the grid: the worst sampled defect is recorded on
    the system as truncation_defect and logged, the build goes through.
    """
    identity = system.unitaries([system.carrier.identity_index])[0]
    ident_tol = 1e-12 if system.is_finite else 1e-8
    if np.max(np.abs(identity - np.eye(system.fock_dim))) > ident_tol:
        raise InvalidGrid("W(identity) differs from the identity operator")
    if system.is_finite and system.carrier.size <= 4096:
        samples = np.arange(system.carrier.size)
    else:
        samples = _trusted_samples(system)
    worst = 0.0
    for idx in samples:
        defect = unitarity_defect(system, int(idx))
        if system.is_finite and defect > system.unitary_tol:
            raise InvalidGrid(f"W at index {idx} fails unitarity: defect {defect:.3e}")
        worst = max(worst, defect)
    if not system.is_finite:
        system.truncation_defect = worst
        if worst > system.unitary_tol:
            logger.warning(
                f"Fock truncation M={system.fock_dim} leaks near the origin: unitarity defect "
                f"{worst:.3e} > {system.unitary_tol:.1e} on the first {system.trusted_dim} levels"
            )


def _trusted_samples(system: WeylSystem) -> List[int]:
    """A few grid points within unit phase-space distance of the origin"""
    coords = system.carrier.coordinates()
    radius = np.hypot(coords[:, 0], coords[:, 1])
    near = np.flatnonzero(radius <= 1.0 + 1e-12)
    if near.size == 0:
        return [system.carrier.identity_index]
    picks = np.unique(np.linspace(0, near.size - 1, num=min(5, near.size)).astype(int))
    return [int(near[p]) for p in picks]


class SystemDescriptor(BaseModel):
    """System descriptor JSON; unitaries are regenerated, never serialized"""

    model_config = ConfigDict(populate_by_name=True, extra="ignore")

    kind: CarrierKind
    N: Optional[int] = None
    M: Optional[int] = None
    L: Optional[float] = None
    h: Optional[float] = None
    d: Optional[float] = Field(default=None)


def build_system(descriptor: Union[SystemDescriptor, dict],
                 tolerances: Optional[Tolerances] = None) -> WeylSystem:
    """Build a system from its descriptor"""
    if isinstance(descriptor, dict):
        descriptor = SystemDescriptor.model_validate(descriptor)
    if descriptor.kind == CarrierKind.FINITE_TORUS:
        if descriptor.N is None:
            raise InvalidGrid("Finite descriptor needs N")
        return build_finite_weyl(descriptor.N, tolerances)
    settings = get_settings()
    return build_planar_weyl(
        descriptor.M if descriptor.M is not None else settings.planar_fock_dim,
        descriptor.L if descriptor.L is not None else settings.planar_half_extent,
        descriptor.h if descriptor.h is not None else settings.planar_step,
        tolerances,
    )


# ============================================
# Operations
# ============================================

def weyl_operator(system: WeylSystem, g: Union[int, Sequence[float]]) -> Operator:
    """The unitary W(g)"""
    return Operator(system.unitaries([system.index(g)])[0])


def beta(system: WeylSystem, g, s: Operator) -> Operator:
    """beta_g(S) = W(g) S W(g)^dagger"""
    w = system.unitaries([system.index(g)])[0]
    return Operator(w @ s.entries @ w.conj().T)


def beta_dual(system: WeylSystem, g, a: Operator) -> Operator:
    """beta_g^*(A) = W(g)^dagger A W(g)"""
    w = system.unitaries([system.index(g)])[0]
    return Operator(w.conj().T @ a.entries @ w)


def support(vector_or_matrix: np.ndarray, atol: float = 0.0) -> np.ndarray:
    """Fock indices carrying nonzero amplitude (rows or columns)"""
    arr = np.asarray(vector_or_matrix)
    if arr.ndim == 1:
        mask = np.abs(arr) > atol
    else:
        mask = (np.abs(arr) > atol).any(axis=0) | (np.abs(arr) > atol).any(axis=1)
    idx = np.flatnonzero(mask)
    return idx if idx.size else np.array([0])


def check_square_integrability(system: WeylSystem, p1: OperatorLike, p2: OperatorLike) -> float:
    """
    sum_g w_g Tr[P1 beta_g(P2)] for rank-one projections P1, P2

    Only the matrix elements <u|W(g)|v> are needed, so planar sweeps evaluate
    the closed form on the supports of u and v.

    Raises:
        NotRankOneProjection: if either operand is not a rank-one projection
    """
    vectors = []
    for p in (p1, p2):
        op = p.op if isinstance(p, Effect) else p
        if op.dim != system.fock_dim:
            raise NotRankOneProjection(f"Projection dimension {op.dim} != {system.fock_dim}")
        try:
            effect = p if isinstance(p, Effect) else Effect(op, system.tolerances)
        except QuantizationError as e:
            raise NotRankOneProjection(str(e)) from e
        if not effect.is_rank_one_projection(system.tolerances.psd_tol):
            raise NotRankOneProjection("Operand is not a rank-one projection")
        vectors.append(effect.leading_vector())
    u, v = vectors
    rows, cols = support(u, 1e-15), support(v, 1e-15)
    weight = system.carrier.weight

    def _terms(indices: np.ndarray) -> np.ndarray:
        blocks = system.block(indices, rows, cols)
        amplitudes = np.einsum("r,krc,c->k", u[rows].conj(), blocks, v[cols])
        return weight * np.abs(amplitudes) ** 2

    return float(system.sweep(_terms))


def convention_phase(system: WeylSystem, x: Sequence[float], y: Sequence[float]) -> complex:
    """
    Phase c(x, y) with W(x)W(y) = c(x, y) W(x+y)

    Finite: c = tau^(ab + a'b' + 2ba' - AB) with (A, B) = (a+a', b+b') mod N,
    which for odd N equals exp(i*pi*(N+1)*(ba' - ab')/N).
    Planar: c = exp(i(q p' - p q')/2).
    """
    if system.is_finite:
        n = system.carrier.modulus
        a, b = (int(v) % n for v in x)
        a2, b2 = (int(v) % n for v in y)
        big_a, big_b = (a + a2) % n, (b + b2) % n
        exponent = a * b + a2 * b2 + 2 * b * a2 - big_a * big_b
        return complex(_finite_tau_power(n, np.array([exponent]))[0])
    q, p = x
    q2, p2 = y
    return complex(np.exp(0.5j * (q * p2 - p * q2)))


def composition_phase_residual(system: WeylSystem, x: Sequence[float], y: Sequence[float],
                               subspace_dim: Optional[int] = None) -> float:
    """
    max |W(x)W(y) - c(x,y) W(x+y)| on the first subspace_dim levels

    Planar products are truncated sums, so the comparison defaults to the
    trusted Fock block there.

    Raises:
        OffGridElement: if x, y or x+y is not on the carrier
    """
    ix, iy = system.index(x), system.index(y)
    if system.is_finite:
        n = system.carrier.modulus
        total = ((int(x[0]) + int(y[0])) % n, (int(x[1]) + int(y[1])) % n)
    else:
        total = (x[0] + y[0], x[1] + y[1])
    ixy = system.index(total)
    wx, wy, wxy = system.unitaries([ix, iy, ixy])
    k = subspace_dim or system.trusted_dim
    lhs = (wx @ wy)[:k, :k]
    rhs = convention_phase(system, x, y) * wxy[:k, :k]
    return float(np.max(np.abs(lhs - rhs)))


def unitarity_defect(system: WeylSystem, g, subspace_dim: Optional[int] = None) -> float:
    """max |P (W^dagger W - I) P| on the first subspace_dim levels"""
    w = system.unitaries([system.index(g)])[0]
    k = subspace_dim or system.trusted_dim
    gram = (w.conj().T @ w)[:k, :k]
    return float(np.max(np.abs(gram - np.eye(k))))


def weak_continuity_profile(system: WeylSystem, a: Operator, s: Operator, g,
                            deltas: Iterable[Sequence[float]]) -> List[float]:
    """
    |Tr[A beta_{g+delta}(S)] - Tr[A beta_g(S)]| for each lattice displacement delta
    """
    base_index = system.index(g)
    base_point = system.carrier.element(base_index)
    base = np.trace(a.entries @ beta(system, base_index, s).entries)
    profile = []
    for delta in deltas:
        moved = (base_point[0] + delta[0], base_point[1] + delta[1])
        value = np.trace(a.entries @ beta(system, moved, s).entries)
        profile.append(float(abs(value - base)))
    return profile
