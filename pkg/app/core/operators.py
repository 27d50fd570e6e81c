"""
Dense Operator Algebra
Traces, trace norm, positivity and unitary conjugation on finite-dimensional Hilbert spaces
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
from loguru import logger

from app.config import Tolerances, default_tolerances
from app.core.exceptions import (
    DimensionMismatch,
    InvalidDensityOperator,
    InvalidEffect,
    InvalidOperator,
    NonHermitianInput,
    NonUnitaryConjugator,
)


@dataclass(frozen=True, eq=False)
class Operator:
    """
    Dense complex square matrix

    In finite dimension trace-class and bounded operators coincide, so this one
    type houses kernels, states, observables and effects alike.
    """

    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        """Validate shape and finiteness, then freeze the buffer"""
        data = np.array(self.entries, dtype=np.complex128, copy=True)
        if data.ndim != 2 or data.shape[0] != data.shape[1] or data.shape[0] < 1:
            raise InvalidOperator(f"Operator must be a nonempty square matrix, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InvalidOperator("Operator entries must be finite (no NaN/Inf)")
        data.setflags(write=False)
        object.__setattr__(self, "entries", data)

    @property
    def dim(self) -> int:
        """Hilbert-space dimension"""
        return self.entries.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "Operator":
        return cls(np.eye(dim, dtype=np.complex128))

    @classmethod
    def projector(cls, vector: np.ndarray) -> "Operator":
        """Rank-one projection onto the normalized vector"""
        v = np.asarray(vector, dtype=np.complex128).ravel()
        norm = np.linalg.norm(v)
        if norm == 0:
            raise InvalidOperator("Cannot project onto the zero vector")
        v = v / norm
        return cls(np.outer(v, v.conj()))

    @classmethod
    def basis_projector(cls, dim: int, k: int) -> "Operator":
        e = np.zeros(dim, dtype=np.complex128)
        e[k] = 1.0
        return cls.projector(e)

    def dagger(self) -> "Operator":
        return Operator(self.entries.conj().T)

    def hermitian_part(self) -> "Operator":
        return Operator(0.5 * (self.entries + self.entries.conj().T))

    def hermiticity_residual(self) -> float:
        """max |A - A^dagger| over entries"""
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def __add__(self, other: "Operator") -> "Operator":
        _require_same_dim(self, other)
        return Operator(self.entries + other.entries)

    def __sub__(self, other: "Operator") -> "Operator":
        _require_same_dim(self, other)
        return Operator(self.entries - other.entries)

    def __matmul__(self, other: "Operator") -> "Operator":
        _require_same_dim(self, other)
        return Operator(self.entries @ other.entries)

    def scaled(self, factor: complex) -> "Operator":
        return Operator(self.entries * factor)

    def max_abs_diff(self, other: "Operator") -> float:
        """Entrywise max-norm distance"""
        _require_same_dim(self, other)
        return float(np.max(np.abs(self.entries - other.entries)))


def _require_same_dim(a: Operator, b: Operator) -> None:
    if a.dim != b.dim:
        raise DimensionMismatch(f"Operator dimensions differ: {a.dim} vs {b.dim}")


# ============================================
# Core operations
# ============================================

def trace(a: Operator) -> complex:
    """Sum of diagonal entries"""
    return complex(np.trace(a.entries))


def trace_norm(a: Operator) -> float:
    """Sum of singular values"""
    return float(np.sum(scipy.linalg.svdvals(a.entries)))


def hermitian_eigenvalues(a: Operator, tol: Optional[Tolerances] = None) -> np.ndarray:
    """
    Eigenvalues of a Hermitian operator, ascending

    Computed on the symmetrization (A + A^dagger)/2 once the Hermiticity check
    passes.

    Raises:
        NonHermitianInput: if max |A - A^dagger| exceeds herm_tol
    """
    tol = tol or default_tolerances()
    residual = a.hermiticity_residual()
    if residual > tol.herm_tol:
        raise NonHermitianInput(
            f"Operator is not Hermitian: residual {residual:.3e} > herm_tol {tol.herm_tol:.1e}"
        )
    return scipy.linalg.eigvalsh(a.hermitian_part().entries)


def is_positive(a: Operator, tol: float = 0.0, tolerances: Optional[Tolerances] = None) -> bool:
    """
    Positivity test by smallest eigenvalue

    Args:
        a: Hermitian operator
        tol: allowed negative eigenvalue magnitude

    Returns:
        True iff the smallest eigenvalue is >= -tol
    """
    eigenvalues = hermitian_eigenvalues(a, tolerances)
    return bool(eigenvalues[0] >= -tol)


def unitarity_residual(u: Operator) -> float:
    """max |U^dagger U - I| over entries"""
    return float(np.max(np.abs(u.entries.conj().T @ u.entries - np.eye(u.dim))))


def conjugate(u: Operator, s: Operator, unitary_tol: Optional[float] = None) -> Operator:
    """
    Unitary conjugation U S U^dagger

    Raises:
        NonUnitaryConjugator: if U fails the unitarity check
    """
    _require_same_dim(u, s)
    unitary_tol = default_tolerances().unitary_tol if unitary_tol is None else unitary_tol
    residual = unitarity_residual(u)
    if residual > unitary_tol:
        logger.warning(f"Rejected conjugator with unitarity residual {residual:.3e}")
        raise NonUnitaryConjugator(
            f"Conjugator is not unitary: residual {residual:.3e} > {unitary_tol:.1e}"
        )
    return Operator(u.entries @ s.entries @ u.entries.conj().T)


# ============================================
# Gated operator roles
# ============================================

@dataclass(frozen=True)
class DensityOperator:
    """Positive operator of trace one"""

    op: Operator
    tolerances: Optional[Tolerances] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        tol = self.tolerances or default_tolerances()
        try:
            eigenvalues = hermitian_eigenvalues(self.op, tol)
        except NonHermitianInput as e:
            raise InvalidDensityOperator(str(e)) from e
        if eigenvalues[0] < -tol.psd_tol:
            raise InvalidDensityOperator(
                f"Density operator has negative eigenvalue {eigenvalues[0]:.3e}"
            )
        tr = trace(self.op)
        if abs(tr - 1.0) > tol.trace_tol:
            raise InvalidDensityOperator(f"Density operator trace {tr.real:.12g} is not 1")

    @property
    def dim(self) -> int:
        return self.op.dim

    @classmethod
    def pure(cls, vector: np.ndarray) -> "DensityOperator":
        return cls(Operator.projector(vector))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, tolerances: Optional[Tolerances] = None) -> "DensityOperator":
        return cls(Operator(matrix), tolerances)


@dataclass(frozen=True)
class Effect:
    """Hermitian operator with spectrum in [0, 1]"""

    op: Operator
    tolerances: Optional[Tolerances] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        tol = self.tolerances or default_tolerances()
        try:
            eigenvalues = hermitian_eigenvalues(self.op, tol)
        except NonHermitianInput as e:
            raise InvalidEffect(str(e)) from e
        if eigenvalues[0] < -tol.psd_tol or eigenvalues[-1] > 1.0 + tol.psd_tol:
            raise InvalidEffect(
                f"Effect spectrum [{eigenvalues[0]:.3e}, {eigenvalues[-1]:.3e}] leaves [0, 1]"
            )

    @property
    def dim(self) -> int:
        return self.op.dim

    def is_rank_one_projection(self, psd_tol: float) -> bool:
        """True iff the spectrum is {0,...,0,1} within psd_tol"""
        eigenvalues = scipy.linalg.eigvalsh(self.op.hermitian_part().entries)
        return bool(
            abs(eigenvalues[-1] - 1.0) <= psd_tol
            and np.all(np.abs(eigenvalues[:-1]) <= psd_tol)
        )

    def leading_vector(self) -> np.ndarray:
        """Eigenvector of the largest eigenvalue"""
        _, vectors = scipy.linalg.eigh(self.op.hermitian_part().entries)
        return vectors[:, -1]


# ============================================
# Random generators (tests, CLI --random-kernels)
# ============================================

def random_unitary(dim: int, rng: np.random.Generator) -> Operator:
    """Haar-random unitary via QR of a complex Ginibre matrix"""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = scipy.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return Operator(q * phases)


def random_density(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> DensityOperator:
    """Random density operator M M^dagger / Tr[M M^dagger]"""
    rank = dim if rank is None else rank
    m = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = m @ m.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityOperator(Operator(rho / np.trace(rho).real))


def random_hermitian(dim: int, rng: np.random.Generator) -> Operator:
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return Operator(0.5 * (m + m.conj().T))


def random_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


