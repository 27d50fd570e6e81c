"""
Covariant Quantization Maps
Gamma_T(f) = d^-1 sum_g w_g f(g) beta_g(T), its preadjoint symbol, the identity
residuals that characterize it, and kernel recovery from a covariant map
"""

from dataclasses import dataclass, field
from math import comb
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np
import scipy.linalg
from loguru import logger
from scipy.special import gamma, gammainc, gammaln

from app.config import Tolerances, get_settings
from app.core.exceptions import (
    CarrierMismatch,
    DimensionMismatch,
    IncompleteTable,
    NotPositive,
    NotPositiveRecovered,
    QuantizationError,
    RecoveryDeviationExceeded,
    UnboundedSequence,
    UnsummableFunction,
)
from app.core.groups import GroupCarrier, WeylSystem, beta_dual, support
from app.core.observables import ClassicalObservable
from app.core.operators import (
    DensityOperator,
    Operator,
    hermitian_eigenvalues,
    random_density,
    trace,
    trace_norm,
)
from app.utils.summation import pairwise_sum


@dataclass(frozen=True)
class QuantizationKernel:
    """Positive trace-one operator T generating Gamma_T and the covariant POVM"""

    density: DensityOperator

    @property
    def T(self) -> Operator:
        return self.density.op

    @property
    def dim(self) -> int:
        return self.density.dim

    @classmethod
    def from_operator(cls, op: Operator, tolerances: Optional[Tolerances] = None) -> "QuantizationKernel":
        return cls(DensityOperator(op, tolerances))

    @classmethod
    def vacuum(cls, dim: int) -> "QuantizationKernel":
        """|0><0|, the Gaussian (anti-Wick) kernel on planar systems"""
        return cls(DensityOperator(Operator.basis_projector(dim, 0)))


@dataclass(frozen=True, eq=False)
class MapTable:
    """Values Gamma(chi_{g}) of a covariant map on singletons, in enumeration order"""

    carrier: GroupCarrier
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.array(self.entries, dtype=np.complex128, copy=True)
        if data.ndim != 3 or data.shape[1] != data.shape[2]:
            raise IncompleteTable(f"Map table entries must be a stack of square matrices, got {data.shape}")
        if data.shape[0] != self.carrier.size:
            raise IncompleteTable(f"Map table covers {data.shape[0]} of {self.carrier.size} carrier points")
        if not np.all(np.isfinite(data)):
            raise IncompleteTable("Map table entries must be finite")
        data.setflags(write=False)
        object.__setattr__(self, "entries", data)

    @property
    def dim(self) -> int:
        return self.entries.shape[1]


class TraceIdentity(NamedTuple):
    lhs: float
    rhs: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


class RecoveryResult(NamedTuple):
    kernel: QuantizationKernel
    max_deviation: float


@dataclass
class NormalityReport:
    """Residuals max_S |Tr[S Gamma(f_k)] - Tr[S Gamma(f)]| along a sequence"""
    residuals: List[float]
    converged_at: Optional[int]
    factorization_residual: float
    tolerance: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    @property
    def final_residual(self) -> float:
        return self.residuals[-1] if self.residuals else 0.0

    @property
    def converged(self) -> bool:
        return self.final_residual <= self.tolerance


# ============================================
# Internal sweeps
# ============================================

def _check_dims(system: WeylSystem, *ops: Operator) -> None:
    for op in ops:
        if op.dim != system.fock_dim:
            raise DimensionMismatch(f"Operator dimension {op.dim} != system dimension {system.fock_dim}")


def _check_observable(system: WeylSystem, f: ClassicalObservable) -> None:
    """Carrier match plus the bounded-or-summable precondition"""
    if f.carrier != system.carrier:
        raise CarrierMismatch(
            f"Observable lives on {f.carrier.descriptor()}, system carrier is {system.carrier.descriptor()}"
        )
    if f.declared_sup is not None or system.is_finite:
        return
    # L1 branch: the window sum of |f| has to have settled at the window edge
    mass = np.abs(f.values) * system.carrier.weight
    total = float(np.sum(mass))
    inner = system.carrier.window_mask(system.carrier.half_extent - system.carrier.step)
    edge = float(np.sum(mass[~inner]))
    if edge > system.tolerances.dom_tol * max(total, 1.0):
        raise UnsummableFunction(
            f"f has no declared bound and its window sum is not settled (edge mass {edge:.3e} of {total:.3e})"
        )


def orbit_block(system: WeylSystem, s: Operator, indices: np.ndarray) -> np.ndarray:
    """
    beta_g(S) for a batch of grid indices, shape (k, n, n)

    Only the columns of W(g) on the support of S are evaluated.
    """
    cols = support(s.entries)
    rows = np.arange(system.fock_dim)
    wc = system.block(indices, rows, cols)
    s_cc = s.entries[np.ix_(cols, cols)]
    return wc @ s_cc @ np.conj(np.swapaxes(wc, 1, 2))


def orbit_traces(system: WeylSystem, a: Operator, s: Operator,
                 indices: Optional[np.ndarray] = None) -> np.ndarray:
    """Tr[A beta_g(S)] for every grid point (or the given indices)"""
    rows = support(a.entries)
    cols = support(s.entries)
    a_rr = a.entries[np.ix_(rows, rows)]
    s_cc = s.entries[np.ix_(cols, cols)]

    def _values(chunk: np.ndarray) -> np.ndarray:
        b = system.block(chunk, rows, cols)
        moved = b @ s_cc @ np.conj(np.swapaxes(b, 1, 2))
        return np.einsum("ij,kji->k", a_rr, moved)

    return system.map_points(_values, indices)


# ============================================
# Quantization map and its preadjoint
# ============================================

def quantize(system: WeylSystem, kernel: QuantizationKernel, f: ClassicalObservable) -> Operator:
    """
    Gamma(f) = d^-1 sum_g w_g f(g) beta_g(T)

    Summation runs in enumeration order with the fixed pairwise reduction, so
    equal inputs give bit-identical outputs.

    Raises:
        CarrierMismatch: f lives on another carrier
        UnsummableFunction: f neither bounded nor summable on the window
    """
    _check_observable(system, f)
    _check_dims(system, kernel.T)
    coefficients = f.values * (system.carrier.weight / system.d_const)

    def _terms(chunk: np.ndarray) -> np.ndarray:
        return coefficients[chunk, None, None] * orbit_block(system, kernel.T, chunk)

    return Operator(system.sweep(_terms))


def dual_symbol(system: WeylSystem, kernel: QuantizationKernel, s: Operator) -> ClassicalObservable:
    """
    Husimi-type symbol g -> d^-1 Tr[S beta_g(T)]

    The preadjoint of Gamma: Tr[S Gamma(f)] = sum_g w_g f(g) dual_symbol(S)(g).
    """
    _check_dims(system, kernel.T, s)
    values = orbit_traces(system, s, kernel.T) / system.d_const
    return ClassicalObservable(system.carrier, values)


def pair_with_weights(system: WeylSystem, f: ClassicalObservable, symbol: ClassicalObservable) -> complex:
    """sum_g w_g f(g) symbol(g), pairwise in enumeration order"""
    return complex(pairwise_sum(system.carrier.weight * f.values * symbol.values))


def duality_residual(system: WeylSystem, kernel: QuantizationKernel, f: ClassicalObservable,
                     s: Operator) -> float:
    """|Tr[S Gamma(f)] - sum_g w_g f(g) dual_symbol(S)(g)|"""
    direct = trace(s @ quantize(system, kernel, f))
    paired = pair_with_weights(system, f, dual_symbol(system, kernel, s))
    return float(abs(direct - paired))


def _require_positive(op: Operator, tol: Tolerances, name: str) -> None:
    try:
        eigenvalues = hermitian_eigenvalues(op, tol)
    except QuantizationError as e:
        raise NotPositive(f"{name} is not Hermitian: {e}") from e
    if eigenvalues[0] < -tol.psd_tol:
        raise NotPositive(f"{name} has negative eigenvalue {eigenvalues[0]:.3e}")


def trace_identity_residual(system: WeylSystem, a: Operator, s: Operator) -> TraceIdentity:
    """
    lhs = d^-1 sum_g w_g Tr[A beta_g(S)] against rhs = Tr[A] Tr[S]

    Raises:
        NotPositive: A or S fails the positivity gate
    """
    _check_dims(system, a, s)
    _require_positive(a, system.tolerances, "A")
    _require_positive(s, system.tolerances, "S")
    values = orbit_traces(system, a, s)
    lhs = float(pairwise_sum(system.carrier.weight * values).real) / system.d_const
    rhs = float((trace(a) * trace(s)).real)
    return TraceIdentity(lhs=lhs, rhs=rhs)


def trace_identity_partial_sums(system: WeylSystem, a: Operator, s: Operator,
                                windows: Sequence[float]) -> List[float]:
    """
    d^-1 sum over nested windows [-L', L')^2 of w_g Tr[A beta_g(S)]

    For A = I the partial sums grow with the window area; no divergence
    claim is derived from finitely many windows.
    """
    _check_dims(system, a, s)
    values = system.carrier.weight * orbit_traces(system, a, s).real / system.d_const
    sums = []
    for half_extent in windows:
        mask = system.carrier.window_mask(half_extent)
        sums.append(float(pairwise_sum(values[mask])) if mask.any() else 0.0)
    return sums


def covariance_residual(system: WeylSystem, kernel: QuantizationKernel, f: ClassicalObservable,
                        g: Sequence[float]) -> float:
    """
    max |beta_g^*(Gamma(f)) - Gamma(f(g .))| on the trusted block

    Raises:
        TranslationLeavesGrid: planar shift drops more than mass_tol of f
    """
    shifted = f.translated(g, system.tolerances.mass_tol)
    lhs = beta_dual(system, g, quantize(system, kernel, f))
    rhs = quantize(system, kernel, shifted)
    k = system.trusted_dim
    return float(np.max(np.abs(lhs.entries[:k, :k] - rhs.entries[:k, :k])))


def trace_norm_identity_residual(system: WeylSystem, kernel: QuantizationKernel,
                                 f: ClassicalObservable) -> float:
    """
    |‖Gamma(f)‖_tr - d^-1 ‖f‖_1| for f >= 0

    For other summable f only the bound ‖Gamma(f)‖_tr <= d^-1 ‖f‖_1 holds; the
    returned value is then the amount by which the bound is violated.
    """
    gamma_f = quantize(system, kernel, f)
    norm = trace_norm(gamma_f)
    l1 = f.l1_norm() / system.d_const
    if f.is_real and np.all(f.real_values >= 0):
        return abs(norm - l1)
    return max(0.0, norm - l1)


def unit_residual(system: WeylSystem, kernel: QuantizationKernel) -> float:
    """max |Gamma(1) - I| on the trusted block (whole space when finite)"""
    gamma_one = quantize(system, kernel, ClassicalObservable.constant(system.carrier))
    k = system.trusted_dim
    return float(np.max(np.abs(gamma_one.entries[:k, :k] - np.eye(k))))


# ============================================
# Kernel recovery
# ============================================

def map_table_from_kernel(system: WeylSystem, kernel: QuantizationKernel) -> MapTable:
    """table[g] = d^-1 w_g beta_g(T), the map on singletons"""
    _check_dims(system, kernel.T)
    scale = system.carrier.weight / system.d_const
    entries = system.map_points(lambda chunk: scale * orbit_block(system, kernel.T, chunk))
    return MapTable(system.carrier, entries)


def recover_kernel(system: WeylSystem, table: MapTable,
                   max_dev: Optional[float] = None) -> RecoveryResult:
    """
    Recover T from a covariant map given on singletons

    Candidates s_g = (d / w_g) beta_g^*(table[g]) coincide for a covariant map;
    the kernel is the Hermitian part of their mean rescaled to trace one and
    the spread max_g ‖s_g - mean‖_max is always reported. Without max_dev the
    spread is held to the system recovery_tol; quadrature tables on a planar
    grid need an explicit, looser max_dev.

    Raises:
        IncompleteTable: table misses carrier points
        NotPositiveRecovered: recovered operator fails the density gate
        RecoveryDeviationExceeded: spread above max_dev (recovery_tol by default)
    """
    if table.carrier != system.carrier:
        raise IncompleteTable("Map table carrier differs from the system carrier")
    if table.dim != system.fock_dim:
        raise DimensionMismatch(f"Map table dimension {table.dim} != {system.fock_dim}")
    scale = system.d_const / system.carrier.weight

    def _candidates(chunk: np.ndarray) -> np.ndarray:
        w = system.unitaries(chunk)
        w_dag = np.conj(np.swapaxes(w, 1, 2))
        return scale * (w_dag @ table.entries[chunk] @ w)

    mean = system.sweep(_candidates) / system.carrier.size
    deviation = float(np.max(system.map_points(
        lambda chunk: np.max(np.abs(_candidates(chunk) - mean[None]), axis=(1, 2))
    )))

    hermitian = 0.5 * (mean + mean.conj().T)
    tr = float(np.trace(hermitian).real)
    if not tr > system.tolerances.trace_tol:
        raise NotPositiveRecovered(f"Recovered operator has trace {tr:.3e}; the map is not positive")
    candidate = Operator(hermitian / tr)
    eigenvalues = scipy.linalg.eigvalsh(candidate.entries)
    if eigenvalues[0] < -system.tolerances.psd_tol:
        raise NotPositiveRecovered(
            f"Recovered operator has negative eigenvalue {eigenvalues[0]:.3e}; "
            f"the map is not positive and covariant (deviation {deviation:.3e})"
        )
    logger.info(f"Recovered kernel: max deviation {deviation:.3e}, trace before rescaling {tr:.12g}")
    if max_dev is None:
        max_dev = system.tolerances.recovery_tol
    if deviation > max_dev:
        raise RecoveryDeviationExceeded(f"Candidate spread {deviation:.3e} exceeds allowed {max_dev:.3e}")
    return RecoveryResult(QuantizationKernel.from_operator(candidate, system.tolerances), deviation)


# ============================================
# Normality surrogate
# ============================================

def default_probes(system: WeylSystem, kernel: QuantizationKernel, seed: Optional[int] = None) -> List[Operator]:
    """Basis projections, the kernel itself and one seeded random state"""
    seed = get_settings().default_seed if seed is None else seed
    count = min(system.fock_dim, 3)
    probes = [Operator.basis_projector(system.fock_dim, k) for k in range(count)]
    probes.append(kernel.T)
    probes.append(random_density(system.fock_dim, np.random.default_rng(seed)).op)
    return probes


def normality_surrogate_check(system: WeylSystem, kernel: QuantizationKernel,
                              f_sequence: Sequence[ClassicalObservable], f_limit: ClassicalObservable,
                              probes: Optional[Sequence[Operator]] = None,
                              tol: Optional[float] = None,
                              sup_bound: Optional[float] = None) -> NormalityReport:
    """
    Bounded pointwise convergence of Tr[S Gamma(f_k)] to Tr[S Gamma(f)]

    Uses the factorization Tr[S Gamma(f)] = <dual_symbol(S), f>; the
    factorization itself is checked once at the limit.

    Raises:
        UnboundedSequence: some ‖f_k‖_inf exceeds the uniform bound
    """
    tol = system.tolerances.qc_tol if tol is None else tol
    bound = sup_bound
    if bound is None:
        bound = f_limit.declared_sup if f_limit.declared_sup is not None else f_limit.sup_norm()
    for k, f_k in enumerate(f_sequence):
        f_k.require_carrier(system.carrier)
        if f_k.sup_norm() > bound + 1e-12:
            raise UnboundedSequence(f"‖f_{k}‖_inf = {f_k.sup_norm():.6g} exceeds the uniform bound {bound:.6g}")
    probes = list(probes) if probes is not None else default_probes(system, kernel)
    symbols = [dual_symbol(system, kernel, s) for s in probes]
    limits = [pair_with_weights(system, f_limit, sym) for sym in symbols]

    gamma_limit = quantize(system, kernel, f_limit)
    factorization = max(abs(trace(s @ gamma_limit) - lim) for s, lim in zip(probes, limits))

    residuals: List[float] = []
    converged_at: Optional[int] = None
    for k, f_k in enumerate(f_sequence):
        value = max(abs(pair_with_weights(system, f_k, sym) - lim) for sym, lim in zip(symbols, limits))
        residuals.append(float(value))
        if value <= tol and converged_at is None:
            converged_at = k
        elif value > tol:
            converged_at = None
    return NormalityReport(residuals, converged_at, float(factorization), tol)


# ============================================
# Closed-form oracle for the planar vacuum kernel
# ============================================

def husimi_moment_oracle(n: int, half_extent: Optional[float] = None) -> float:
    """
    (2 pi)^-1 integral of ((q^2+p^2)/2) |<n|W(q,p)|0>|^2 dq dp

    |<n|W|0>|^2 = exp(-r) r^n / n! with r = (q^2+p^2)/2. Expanding r^(n+1)
    binomially makes the integrand separable, so the square window
    [-L, L)^2 reduces to incomplete-gamma moments. Without a window the
    value is n + 1.
    """
    if half_extent is None:
        return float(n + 1)
    m = n + 1
    x = 0.5 * half_extent ** 2

    def moment(k: int) -> float:
        # integral over [-L, L] of q^(2k) exp(-q^2/2)
        return 2.0 ** (k + 0.5) * gammainc(k + 0.5, x) * gamma(k + 0.5)

    total = sum(comb(m, k) * moment(k) * moment(m - k) for k in range(m + 1))
    return float(total * np.exp(-gammaln(n + 1)) / (2.0 ** m) / (2.0 * np.pi))
