"""
Covariant POVMs
E(B) = d^-1 sum_{g in B} w_g beta_g(T) on a partition of the carrier, the
probability rule, seeded sampling and the operator integral L(f, E) with its
domain and quasicontinuity checks
"""

from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from app.config import Tolerances, default_tolerances, get_settings
from app.core.exceptions import (
    CarrierMismatch,
    DimensionMismatch,
    IncompleteTable,
    InvalidPartition,
    InvalidPovm,
    InvalidShots,
    NotCellMeasurable,
    NotInDomain,
    NotMonotone,
    TranslationLeavesGrid,
)
from app.core.groups import GroupCarrier, WeylSystem, beta_dual, build_planar_weyl, support
from app.core.observables import ClassicalObservable, FunctionSpec
from app.core.operators import DensityOperator, Effect, Operator, random_vector
from app.core.quantization import MapTable, QuantizationKernel, orbit_block
from app.utils.summation import pairwise_sum

IN_DOMAIN = "in-domain"
UNDETERMINED = "undetermined"

# negative probabilities down to this size are rounding and get clipped to zero
PROBABILITY_CLIP = 1e-12
PLANAR_NORMALIZATION_TOL = 1e-3


# ============================================
# Partitions
# ============================================

@dataclass(frozen=True, eq=False)
class OutcomePartition:
    """Disjoint labelled cells covering the whole carrier"""

    carrier: GroupCarrier
    cells: Tuple[Tuple[str, np.ndarray], ...] = field(repr=False)

    def __post_init__(self):
        cells = []
        seen = np.zeros(self.carrier.size, dtype=np.int64)
        labels = set()
        for label, indices in self.cells:
            idx = np.asarray(indices, dtype=np.int64).ravel()
            if idx.size == 0:
                raise InvalidPartition(f"Cell {label!r} is empty")
            if np.any(idx < 0) or np.any(idx >= self.carrier.size):
                raise InvalidPartition(f"Cell {label!r} has indices outside the carrier")
            if str(label) in labels:
                raise InvalidPartition(f"Duplicate cell label {label!r}")
            labels.add(str(label))
            np.add.at(seen, idx, 1)
            idx = np.sort(idx)
            idx.setflags(write=False)
            cells.append((str(label), idx))
        if np.any(seen > 1):
            raise InvalidPartition(f"Cells overlap at {int(np.sum(seen > 1))} grid points")
        if np.any(seen == 0):
            raise InvalidPartition(f"Cells miss {int(np.sum(seen == 0))} grid points")
        object.__setattr__(self, "cells", tuple(cells))

    @property
    def labels(self) -> List[str]:
        return [label for label, _ in self.cells]

    @property
    def is_singletons(self) -> bool:
        return all(idx.size == 1 for _, idx in self.cells)

    def __len__(self) -> int:
        return len(self.cells)

    def measure(self, position: int) -> float:
        """lambda(B) of the cell at the given position"""
        return self.carrier.weight * self.cells[position][1].size

    def cell_of(self) -> np.ndarray:
        """Cell position of every carrier point"""
        owner = np.empty(self.carrier.size, dtype=np.int64)
        for pos, (_, idx) in enumerate(self.cells):
            owner[idx] = pos
        return owner

    # ----------------------------------------
    # Builders
    # ----------------------------------------
    @classmethod
    def singletons(cls, carrier: GroupCarrier) -> "OutcomePartition":
        coords = carrier.coordinates()
        return cls(carrier, tuple(
            (f"{_fmt(coords[i, 0])},{_fmt(coords[i, 1])}", np.array([i])) for i in range(carrier.size)
        ))

    @classmethod
    def whole(cls, carrier: GroupCarrier) -> "OutcomePartition":
        return cls(carrier, (("G", np.arange(carrier.size)),))

    @classmethod
    def quadrants(cls, carrier: GroupCarrier) -> "OutcomePartition":
        """Sign quadrants of the planar window; points on an axis go to the >= 0 side"""
        if carrier.is_finite:
            raise InvalidPartition("Quadrant partitions are defined on planar carriers only")
        coords = carrier.coordinates()
        q_pos, p_pos = coords[:, 0] >= 0, coords[:, 1] >= 0
        cells = []
        for label, mask in (("q+p+", q_pos & p_pos), ("q-p+", ~q_pos & p_pos),
                            ("q-p-", ~q_pos & ~p_pos), ("q+p-", q_pos & ~p_pos)):
            cells.append((label, np.flatnonzero(mask)))
        return cls(carrier, tuple(cells))

    @classmethod
    def blocks(cls, carrier: GroupCarrier, per_axis: int) -> "OutcomePartition":
        """per_axis x per_axis rectangular blocks of consecutive axis positions"""
        axis = carrier.points_per_axis
        if not 1 <= per_axis <= axis:
            raise InvalidPartition(f"Block count per axis must be in [1, {axis}], got {per_axis}")
        bands = np.array_split(np.arange(axis), per_axis)
        cells = []
        for i, rows in enumerate(bands):
            for j, cols in enumerate(bands):
                idx = (rows[:, None] * axis + cols[None, :]).ravel()
                cells.append((f"b{i}-{j}", idx))
        return cls(carrier, tuple(cells))


def _fmt(value: float) -> str:
    return f"{value:g}"


def partition_from_spec(spec: str, carrier: GroupCarrier) -> OutcomePartition:
    """Partition from its short name: singletons, whole, quadrants or blocks:K"""
    if spec == "singletons":
        return OutcomePartition.singletons(carrier)
    if spec == "whole":
        return OutcomePartition.whole(carrier)
    if spec == "quadrants":
        return OutcomePartition.quadrants(carrier)
    kind, _, count = spec.partition(":")
    if kind == "blocks" and count.isdigit():
        return OutcomePartition.blocks(carrier, int(count))
    raise InvalidPartition(f"Unknown partition {spec!r}")


# ============================================
# POVM
# ============================================

@dataclass(frozen=True, eq=False)
class Povm:
    """
    One effect per partition cell

    Normalization sum_B E(B) = I is checked at construction: exactly (1e-10)
    on finite carriers and on the trusted Fock block within 1e-3 on planar
    windows, where mass outside the window is lost.
    """

    partition: OutcomePartition
    effects: Tuple[Effect, ...] = field(repr=False)
    d_const: float
    generator: Optional[QuantizationKernel] = field(default=None, repr=False)
    tolerances: Tolerances = field(default_factory=default_tolerances, repr=False)

    def __post_init__(self):
        if len(self.effects) != len(self.partition):
            raise InvalidPovm(f"{len(self.effects)} effects for {len(self.partition)} cells")
        dims = {e.dim for e in self.effects}
        if len(dims) != 1:
            raise InvalidPovm(f"Effects have mixed dimensions {sorted(dims)}")
        residual = effects_sum_residual(self)
        limit = 1e-10 if self.carrier.is_finite else PLANAR_NORMALIZATION_TOL
        if residual > limit:
            raise InvalidPovm(f"Effects do not sum to the identity: residual {residual:.3e} > {limit:.1e}")

    @property
    def carrier(self) -> GroupCarrier:
        return self.partition.carrier

    @property
    def dim(self) -> int:
        return self.effects[0].dim

    @property
    def trusted_dim(self) -> int:
        if self.carrier.is_finite:
            return self.dim
        return min(get_settings().planar_trusted_dim, self.dim)

    def effect(self, label: str) -> Effect:
        for (cell_label, _), effect in zip(self.partition.cells, self.effects):
            if cell_label == label:
                return effect
        raise InvalidPartition(f"No cell labelled {label!r}")


class SampleCounts(NamedTuple):
    labels: List[str]
    counts: List[int]


@dataclass(frozen=True, eq=False)
class ComplexMeasureTable:
    """Density g -> d^-1 <psi|beta_g(T) phi> of E_{psi,phi} against the Haar weights"""

    carrier: GroupCarrier
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.array(self.values, dtype=np.complex128, copy=True).ravel()
        if data.size != self.carrier.size or not np.all(np.isfinite(data)):
            raise InvalidPovm("Density table must hold one finite value per carrier point")
        data.setflags(write=False)
        object.__setattr__(self, "values", data)

    def integrate(self, indices: Optional[np.ndarray] = None,
                  weights: Optional[np.ndarray] = None) -> complex:
        """sum_{g in cell} w_g * weights(g) * density(g)"""
        terms = self.carrier.weight * self.values
        if weights is not None:
            terms = terms * weights
        if indices is not None:
            terms = terms[np.asarray(indices)]
        return complex(pairwise_sum(terms)) if terms.size else 0j


@dataclass
class DomainVerdict:
    verdict: str
    levels: List[float]
    partial_sums: List[float]
    relative_cauchy: Optional[float]
    probe_cauchy: Dict[str, float] = field(default_factory=dict)
    reason: str = ""

    @property
    def in_domain(self) -> bool:
        return self.verdict == IN_DOMAIN


@dataclass
class QuasicontinuityReport:
    residuals: List[float]
    monotone: bool
    tolerance: float

    @property
    def final_residual(self) -> float:
        return self.residuals[-1] if self.residuals else 0.0

    @property
    def converged(self) -> bool:
        return self.final_residual <= self.tolerance


# ============================================
# Construction
# ============================================

def build_povm(system: WeylSystem, kernel: QuantizationKernel, partition: OutcomePartition) -> Povm:
    """
    E(B) = d^-1 sum_{g in B} w_g beta_g(T) for every cell

    Raises:
        CarrierMismatch: partition lives on another carrier
    """
    if partition.carrier != system.carrier:
        raise CarrierMismatch("Partition carrier differs from the system carrier")
    if kernel.dim != system.fock_dim:
        raise DimensionMismatch(f"Kernel dimension {kernel.dim} != system dimension {system.fock_dim}")
    scale = system.carrier.weight / system.d_const
    effects = []
    for label, cell in partition.cells:
        total = system.sweep(lambda pos, cell=cell: orbit_block(system, kernel.T, cell[pos]), total=cell.size)
        effects.append(Effect(Operator(scale * total), system.tolerances))
    povm = Povm(partition, tuple(effects), system.d_const, kernel, system.tolerances)
    logger.info(f"Built POVM with {len(partition)} cells on {system.carrier.descriptor()}")
    return povm


def effects_sum_residual(povm: Povm) -> float:
    """max |sum_B E(B) - I| on the trusted block"""
    total = pairwise_sum(np.stack([e.op.entries for e in povm.effects], axis=0))
    k = povm.trusted_dim
    return float(np.max(np.abs(total[:k, :k] - np.eye(k))))


def cell_trace_residual(povm: Povm, relative: bool = False) -> float:
    """max over cells of |Tr E(B) - d^-1 lambda(B)| (optionally relative to d^-1 lambda(B))"""
    worst = 0.0
    for pos, effect in enumerate(povm.effects):
        expected = povm.partition.measure(pos) / povm.d_const
        residual = abs(complex(np.trace(effect.op.entries)) - expected)
        if relative:
            residual /= expected
        worst = max(worst, residual)
    return float(worst)


def povm_covariance_residual(system: WeylSystem, povm: Povm, g: Sequence[float]) -> float:
    """
    max over cells of |beta_g^*(E(B)) - E(B - g)|

    Raises:
        InvalidPartition: B - g is not a cell of the partition
        TranslationLeavesGrid: planar shift moves a cell out of the window
    """
    back = system.carrier.shift_indices((-g[0], -g[1]))
    by_set = {tuple(idx.tolist()): pos for pos, (_, idx) in enumerate(povm.partition.cells)}
    worst = 0.0
    for (label, idx), effect in zip(povm.partition.cells, povm.effects):
        moved = back[idx]
        if np.any(moved < 0):
            raise TranslationLeavesGrid(f"Cell {label!r} leaves the window under translation by {tuple(g)}")
        target = by_set.get(tuple(np.sort(moved).tolist()))
        if target is None:
            raise InvalidPartition(f"Cell {label!r} translated by {tuple(g)} is not a cell of the partition")
        lhs = beta_dual(system, g, effect.op)
        worst = max(worst, lhs.max_abs_diff(povm.effects[target].op))
    return float(worst)


def map_table_from_povm(povm: Povm) -> MapTable:
    """Map table of a POVM on the singleton partition"""
    if not povm.partition.is_singletons:
        raise IncompleteTable("Map tables need a singleton partition")
    entries = np.empty((povm.carrier.size, povm.dim, povm.dim), dtype=np.complex128)
    for (_, idx), effect in zip(povm.partition.cells, povm.effects):
        entries[idx[0]] = effect.op.entries
    return MapTable(povm.carrier, entries)


# ============================================
# Probabilities and sampling
# ============================================

def probabilities(povm: Povm, rho: DensityOperator) -> List[float]:
    """
    p(B) = Tr[rho E(B)] in cell order

    Raises:
        DimensionMismatch: rho and the effects differ in dimension
        InvalidPovm: an effect produces a clearly negative probability
    """
    if rho.dim != povm.dim:
        raise DimensionMismatch(f"State dimension {rho.dim} != POVM dimension {povm.dim}")
    stack = np.stack([e.op.entries for e in povm.effects], axis=0)
    values = np.einsum("ij,kji->k", rho.op.entries, stack).real
    if np.any(values < -PROBABILITY_CLIP):
        raise InvalidPovm(f"Negative probability {float(values.min()):.3e}")
    return [float(v) for v in np.maximum(values, 0.0)]


def sample(povm: Povm, rho: DensityOperator, shots: int, seed: int) -> SampleCounts:
    """
    Multinomial counts per cell from a seeded PCG64 stream

    Each shot draws u ~ U[0, 1) and lands in the first cell (label order) whose
    cumulative probability exceeds u, so counts depend only on (seed, shots).
    """
    if int(shots) != shots or shots < 1:
        raise InvalidShots(f"shots must be a positive integer, got {shots}")
    p = np.asarray(probabilities(povm, rho))
    cdf = np.cumsum(p) / np.sum(p)
    rng = np.random.Generator(np.random.PCG64(seed))
    draws = rng.random(int(shots))
    cells = np.minimum(np.searchsorted(cdf, draws, side="right"), p.size - 1)
    counts = np.bincount(cells, minlength=p.size)
    logger.debug(f"Sampled {shots} shots over {p.size} cells (seed {seed})")
    return SampleCounts(povm.partition.labels, [int(c) for c in counts])


# ============================================
# Complex measures and the operator integral
# ============================================

def _as_vector(vector: np.ndarray, dim: int, name: str) -> np.ndarray:
    v = np.asarray(vector, dtype=np.complex128).ravel()
    if v.size != dim:
        raise DimensionMismatch(f"{name} has dimension {v.size}, expected {dim}")
    return v


def complex_measure_density(system: WeylSystem, kernel: QuantizationKernel,
                            psi: np.ndarray, phi: np.ndarray) -> ComplexMeasureTable:
    """d^-1 <psi|beta_g(T) phi> for every grid point"""
    psi = _as_vector(psi, system.fock_dim, "psi")
    phi = _as_vector(phi, system.fock_dim, "phi")
    if kernel.dim != system.fock_dim:
        raise DimensionMismatch(f"Kernel dimension {kernel.dim} != system dimension {system.fock_dim}")
    rows = np.union1d(support(psi), support(phi))
    cols = support(kernel.T.entries)
    t_cc = kernel.T.entries[np.ix_(cols, cols)]
    left, right = psi[rows].conj(), phi[rows].conj()

    def _values(chunk: np.ndarray) -> np.ndarray:
        b = system.block(chunk, rows, cols)
        u = np.einsum("r,krc->kc", left, b)
        v = np.einsum("r,krc->kc", right, b)
        return np.einsum("kc,cd,kd->k", u, t_cc, v.conj())

    return ComplexMeasureTable(system.carrier, system.map_points(_values) / system.d_const)


def _cell_constant_values(povm: Povm, f: ClassicalObservable) -> np.ndarray:
    f.require_carrier(povm.carrier)
    values = []
    for label, idx in povm.partition.cells:
        cell = f.values[idx]
        if np.max(np.abs(cell - cell[0])) > 1e-12:
            raise NotCellMeasurable(f"f is not constant on cell {label!r}")
        values.append(cell[0])
    return np.asarray(values)


def quantize_via_povm(povm: Povm, f: ClassicalObservable) -> Operator:
    """L(f, E) = sum_B f(B) E(B) for f constant on cells"""
    coefficients = _cell_constant_values(povm, f)
    stack = np.stack([e.op.entries for e in povm.effects], axis=0)
    return Operator(pairwise_sum(coefficients[:, None, None] * stack))


def operator_integral(system: WeylSystem, source: Union[Povm, QuantizationKernel], f: ClassicalObservable,
                      psi: np.ndarray, phi: np.ndarray) -> complex:
    """
    <psi|L(f, E) phi> = integral of f against E_{psi,phi}

    With a kernel the integral runs over the density on the grid; with a
    POVM f has to be constant on cells and the integral is a finite sum.

    Raises:
        NotInDomain: phi is not certified to lie in the domain of L(f, E)
        NotCellMeasurable: POVM source and f not constant on its cells
    """
    f.require_carrier(system.carrier)
    if isinstance(source, Povm):
        coefficients = _cell_constant_values(source, f)
        psi = _as_vector(psi, source.dim, "psi")
        phi = _as_vector(phi, source.dim, "phi")
        terms = [c * (psi.conj() @ e.op.entries @ phi) for c, e in zip(coefficients, source.effects)]
        return complex(pairwise_sum(np.asarray(terms)))
    verdict = domain_check(system, source, f, phi)
    if not verdict.in_domain:
        raise NotInDomain(f"phi is not certified in the domain of L(f, E): {verdict.reason}")
    density = complex_measure_density(system, source, psi, phi)
    return density.integrate(weights=f.values)


# ============================================
# Domain and quasicontinuity checks
# ============================================

def _ring_levels(carrier: GroupCarrier) -> List[float]:
    L, h = carrier.half_extent, carrier.step
    return [level for level in (L - 2 * h, L - h, L) if level > 0]


def _relative_cauchy(sums: List[float]) -> float:
    return abs(sums[-1] - sums[-2]) / max(abs(sums[-1]), 1e-300)


def _probe_vectors(dim: int, count: int, seed: int) -> Dict[str, np.ndarray]:
    probes = {f"basis-{k}": np.eye(dim, dtype=np.complex128)[k] for k in range(min(count, dim))}
    probes["random"] = random_vector(dim, np.random.default_rng(seed))
    return probes


def domain_check(system: WeylSystem, kernel: QuantizationKernel,
                 f: Union[ClassicalObservable, FunctionSpec], phi: np.ndarray,
                 sweep: Optional[Sequence[float]] = None, seed: Optional[int] = None) -> DomainVerdict:
    """
    Convergence of sum_{|q|,|p| < L_k} w_g |f(g)| density_{phi,phi}(g) over growing windows

    Without a sweep the three outermost rings of the current window are used.
    An explicit sweep beyond the window needs f as a FunctionSpec; the
    system is then rebuilt at the largest L with the same M and h. The
    verdict is "in-domain" when the last two partial sums agree to dom_tol
    (relative) and "undetermined" otherwise. Probe vectors psi are reported
    in probe_cauchy and do not change the verdict.
    """
    tol = system.tolerances.dom_tol
    if system.is_finite:
        return DomainVerdict(IN_DOMAIN, [], [], 0.0, reason="finite carrier: all sums are finite")

    levels = sorted(set(float(v) for v in sweep)) if sweep is not None else _ring_levels(system.carrier)
    target = system
    if isinstance(f, FunctionSpec):
        if levels and levels[-1] > system.carrier.half_extent + 1e-12:
            target = build_planar_weyl(system.fock_dim, levels[-1], system.carrier.step, system.tolerances)
        observable = f.on(target.carrier)
    else:
        f.require_carrier(system.carrier)
        observable = f
        dropped = [v for v in levels if v > system.carrier.half_extent + 1e-12]
        levels = [v for v in levels if v not in dropped]
        if dropped:
            logger.debug(f"Sweep levels {dropped} exceed the window and were dropped")
    if len(levels) < 2:
        return DomainVerdict(UNDETERMINED, levels, [], None, reason="fewer than two sweep levels")

    magnitude = np.abs(observable.values)
    masks = [target.carrier.window_mask(level) for level in levels]

    def _partial_sums(density: ComplexMeasureTable) -> List[float]:
        terms = target.carrier.weight * magnitude * np.abs(density.values)
        return [float(pairwise_sum(terms[mask])) if mask.any() else 0.0 for mask in masks]

    sums = _partial_sums(complex_measure_density(target, kernel, phi, phi))
    cauchy = _relative_cauchy(sums)

    probe_cauchy = {}
    seed = get_settings().default_seed if seed is None else seed
    for name, psi in _probe_vectors(target.fock_dim, target.trusted_dim, seed).items():
        probe_cauchy[name] = _relative_cauchy(_partial_sums(complex_measure_density(target, kernel, psi, phi)))

    if cauchy <= tol:
        return DomainVerdict(IN_DOMAIN, levels, sums, cauchy, probe_cauchy,
                             reason=f"relative change {cauchy:.3e} <= {tol:.1e}")
    return DomainVerdict(UNDETERMINED, levels, sums, cauchy, probe_cauchy,
                         reason=f"relative change {cauchy:.3e} > {tol:.1e} between the last two levels")


def quasicontinuity_check(system: WeylSystem, kernel: QuantizationKernel,
                          f_increasing: Sequence[ClassicalObservable], f_limit: ClassicalObservable,
                          psi: np.ndarray, phi: np.ndarray, tol: Optional[float] = None) -> QuasicontinuityReport:
    """
    |<psi|L(f_n, E) phi> - <psi|L(f, E) phi>| along 0 <= f_n <= f_(n+1) <= f

    Raises:
        NotMonotone: the sequence is not increasing, nonnegative and below f
        NotInDomain: phi is not certified in the domain of L(f, E)
    """
    tol = system.tolerances.qc_tol if tol is None else tol
    f_limit.require_carrier(system.carrier)
    slack = 1e-12
    if not f_limit.is_real:
        raise NotMonotone("The limit function must be real")
    previous = np.zeros(system.carrier.size)
    for n, f_n in enumerate(f_increasing):
        f_n.require_carrier(system.carrier)
        if not f_n.is_real:
            raise NotMonotone(f"f_{n} is not real")
        values = f_n.real_values
        if np.any(values < previous - slack):
            raise NotMonotone(f"f_{n} is negative or below f_{n - 1} somewhere")
        if np.any(values > f_limit.real_values + slack):
            raise NotMonotone(f"f_{n} exceeds the limit function somewhere")
        previous = values

    verdict = domain_check(system, kernel, f_limit, phi)
    if not verdict.in_domain:
        raise NotInDomain(f"phi is not certified in the domain of L(f, E): {verdict.reason}")

    density = complex_measure_density(system, kernel, psi, phi)
    limit = density.integrate(weights=f_limit.values)
    residuals = [float(abs(density.integrate(weights=f_n.values) - limit)) for f_n in f_increasing]
    monotone = all(b <= a + slack for a, b in zip(residuals, residuals[1:]))
    if not monotone:
        logger.warning("Quasicontinuity residuals are not nonincreasing")
    return QuasicontinuityReport(residuals, monotone, tol)
