"""
Covariant quantization maps: Gamma_T, its symbol, the trace identities and kernel recovery
"""

import numpy as np
import pytest

from app.config import Tolerances
from app.core.exceptions import (
    CarrierMismatch,
    IncompleteTable,
    NotPositive,
    NotPositiveRecovered,
    RecoveryDeviationExceeded,
    TranslationLeavesGrid,
    UnboundedSequence,
    UnsummableFunction,
)
from app.core.groups import beta, build_finite_weyl, build_planar_weyl
from app.core.observables import ClassicalObservable, FunctionSpec, radial_quadratic
from app.core.operators import Operator, is_positive, random_density, trace
from app.core.quantization import (
    MapTable,
    QuantizationKernel,
    covariance_residual,
    dual_symbol,
    duality_residual,
    husimi_moment_oracle,
    map_table_from_kernel,
    normality_surrogate_check,
    quantize,
    recover_kernel,
    trace_identity_partial_sums,
    trace_identity_residual,
    trace_norm_identity_residual,
    unit_residual,
)
from tests.helpers import random_kernel


def random_values(system, rng, nonnegative=False):
    if nonnegative:
        return rng.uniform(0.0, 1.0, system.carrier.size)
    return rng.standard_normal(system.carrier.size) + 1j * rng.standard_normal(system.carrier.size)


# ============================================
# Gamma_T
# ============================================

def test_constant_one_quantizes_to_identity(finite_systems, rng):
    system = finite_systems[3]
    gamma_one = quantize(system, random_kernel(3, rng), ClassicalObservable.constant(system.carrier))
    assert gamma_one.max_abs_diff(Operator.identity(3)) <= 1e-12


def test_point_indicator_gives_translated_kernel(finite_systems, rng):
    system = finite_systems[4]
    kernel = random_kernel(4, rng)
    g0 = (2, 1)
    f = ClassicalObservable.indicator(system.carrier, [system.carrier.index_of(g0)])
    expected = beta(system, g0, kernel.T).scaled(1.0 / system.d_const)
    assert quantize(system, kernel, f).max_abs_diff(expected) <= 1e-14


def test_quantization_is_linear(finite_systems, rng):
    system = finite_systems[4]
    kernel = random_kernel(4, rng)
    f = ClassicalObservable(system.carrier, random_values(system, rng))
    h = ClassicalObservable(system.carrier, random_values(system, rng))
    a, b = 0.7 - 0.2j, -1.3 + 0.5j
    lhs = quantize(system, kernel, f.combine(h, a, b))
    rhs = quantize(system, kernel, f).scaled(a) + quantize(system, kernel, h).scaled(b)
    assert lhs.max_abs_diff(rhs) <= 1e-10


def test_nonnegative_functions_give_positive_operators(finite_systems, rng):
    system = finite_systems[5]
    kernel = random_kernel(5, rng)
    f = ClassicalObservable(system.carrier, random_values(system, rng, nonnegative=True))
    assert is_positive(quantize(system, kernel, f), 1e-9)


def test_quantization_is_bit_reproducible(planar_small, rng):
    kernel = QuantizationKernel(random_density(planar_small.fock_dim, rng, rank=2))
    f = FunctionSpec(family="gauss-bump", center=(0.4, -0.2), width=1.2).on(planar_small.carrier)
    first = quantize(planar_small, kernel, f)
    workers = planar_small.workers
    try:
        planar_small.workers = 4
        second = quantize(planar_small, kernel, f)
    finally:
        planar_small.workers = workers
    assert np.array_equal(first.entries, second.entries)


def test_carrier_mismatch(finite_systems, rng):
    f = ClassicalObservable.constant(finite_systems[3].carrier)
    with pytest.raises(CarrierMismatch):
        quantize(finite_systems[4], random_kernel(4, rng), f)


def test_unbounded_unsummable_function_is_rejected(planar_small):
    f = ClassicalObservable(planar_small.carrier, np.ones(planar_small.carrier.size))
    with pytest.raises(UnsummableFunction):
        quantize(planar_small, QuantizationKernel.vacuum(planar_small.fock_dim), f)


# ============================================
# Planar anti-Wick quantization
# ============================================

def test_planar_unit_on_trusted_block(planar_default):
    assert unit_residual(planar_default, QuantizationKernel.vacuum(planar_default.fock_dim)) <= 1e-3


def test_unit_residual_decreases_as_window_grows():
    residuals = []
    for half_extent in (2.0, 4.0, 6.0):
        system = build_planar_weyl(20, half_extent, 0.2)
        residuals.append(unit_residual(system, QuantizationKernel.vacuum(system.fock_dim)))
    assert residuals[0] > residuals[1] > residuals[2]
    assert residuals[2] <= 1e-3


def test_anti_wick_moments_match_window_oracle(planar_default):
    kernel = QuantizationKernel.vacuum(planar_default.fock_dim)
    gamma_f = quantize(planar_default, kernel, radial_quadratic().on(planar_default.carrier))
    for n in range(11):
        oracle = husimi_moment_oracle(n, planar_default.carrier.half_extent)
        assert abs(gamma_f.entries[n, n].real - oracle) <= 5e-3


def test_anti_wick_moments_on_wide_window(planar_wide):
    kernel = QuantizationKernel.vacuum(planar_wide.fock_dim)
    gamma_f = quantize(planar_wide, kernel, radial_quadratic().on(planar_wide.carrier))
    for n in range(11):
        assert abs(gamma_f.entries[n, n].real - (n + 1)) <= 5e-3


def test_moment_oracle_limits():
    assert husimi_moment_oracle(4) == 5.0
    assert husimi_moment_oracle(4, 20.0) == pytest.approx(5.0, abs=1e-10)
    assert husimi_moment_oracle(0, 6.0) < 1.0


# ============================================
# Symbols and duality
# ============================================

def test_symbol_of_ground_state_on_z2(finite_systems):
    system = finite_systems[2]
    vacuum = Operator.basis_projector(2, 0)
    symbol = dual_symbol(system, QuantizationKernel.vacuum(2), vacuum)
    assert abs(symbol.values[system.carrier.index_of((0, 0))] - 0.5) <= 1e-15
    assert abs(np.sum(symbol.values) - 1.0) <= 1e-12


def test_symbol_of_identity_is_flat(finite_systems, rng):
    system = finite_systems[3]
    symbol = dual_symbol(system, random_kernel(3, rng), Operator.identity(3))
    assert np.max(np.abs(symbol.values - 1.0 / 3.0)) <= 1e-12


def test_planar_husimi_profile(planar_default):
    kernel = QuantizationKernel.vacuum(planar_default.fock_dim)
    symbol = dual_symbol(planar_default, kernel, kernel.T)
    origin = symbol.values[planar_default.carrier.index_of((0.0, 0.0))]
    shifted = symbol.values[planar_default.carrier.index_of((1.0, 0.0))]
    assert abs(origin - 1.0 / (2 * np.pi)) <= 1e-12
    assert abs(shifted - np.exp(-0.5) / (2 * np.pi)) <= 1e-8


def test_duality_for_constant_function(finite_systems, rng):
    system = finite_systems[4]
    f = ClassicalObservable.constant(system.carrier)
    assert duality_residual(system, random_kernel(4, rng), f, random_density(4, rng).op) <= 1e-12


def test_duality_for_random_data(finite_systems, rng):
    system = finite_systems[3]
    f = ClassicalObservable(system.carrier, random_values(system, rng))
    assert duality_residual(system, random_kernel(3, rng), f, random_density(3, rng).op) <= 1e-10


def test_duality_on_planar_grid(planar_default):
    kernel = QuantizationKernel.vacuum(planar_default.fock_dim)
    f = FunctionSpec(family="gauss-bump", center=(0.5, -0.5), width=1.0).on(planar_default.carrier)
    s = Operator.basis_projector(planar_default.fock_dim, 2)
    assert duality_residual(planar_default, kernel, f, s) <= 1e-6


# ============================================
# Trace identities
# ============================================

def test_orbit_trace_identity_for_projections(finite_systems):
    vacuum = Operator.basis_projector(3, 0)
    result = trace_identity_residual(finite_systems[3], vacuum, vacuum)
    assert result.residual <= 1e-12
    assert result.rhs == pytest.approx(1.0)


def test_orbit_trace_identity_with_identity(finite_systems, rng):
    s = random_density(3, rng).op
    result = trace_identity_residual(finite_systems[3], Operator.identity(3), s)
    assert abs(result.lhs - 3.0) <= 1e-12


def test_orbit_trace_identity_on_planar_grid(planar_default):
    vacuum = Operator.basis_projector(planar_default.fock_dim, 0)
    assert trace_identity_residual(planar_default, vacuum, vacuum).residual <= 1e-3


def test_orbit_trace_identity_requires_positive_input(finite_systems):
    with pytest.raises(NotPositive):
        trace_identity_residual(finite_systems[3], Operator(np.diag([1.0, -1.0, 0.0])),
                                Operator.basis_projector(3, 0))


def test_partial_sums_grow_for_identity(planar_small):
    identity = Operator.identity(planar_small.fock_dim)
    vacuum = Operator.basis_projector(planar_small.fock_dim, 0)
    sums = trace_identity_partial_sums(planar_small, identity, vacuum, [1.0, 2.0, 4.0, 6.0])
    assert all(b > a for a, b in zip(sums, sums[1:]))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_trace_norm_identity_for_nonnegative_functions(finite_systems, rng, n):
    system = finite_systems[n]
    f = ClassicalObservable(system.carrier, random_values(system, rng, nonnegative=True))
    assert trace_norm_identity_residual(system, random_kernel(n, rng), f) <= 1e-10


def test_trace_norm_bound_for_complex_functions(finite_systems, rng):
    system = finite_systems[4]
    f = ClassicalObservable(system.carrier, random_values(system, rng))
    assert trace_norm_identity_residual(system, random_kernel(4, rng), f) <= 1e-10


# ============================================
# Covariance
# ============================================

def test_identity_translation_is_exact(finite_systems, rng):
    system = finite_systems[3]
    f = ClassicalObservable(system.carrier, random_values(system, rng))
    assert covariance_residual(system, random_kernel(3, rng), f, (0, 0)) == 0.0


def test_finite_covariance_all_translations(finite_systems, rng):
    system = finite_systems[5]
    kernel = random_kernel(5, rng)
    f = ClassicalObservable(system.carrier, random_values(system, rng))
    for g in range(system.carrier.size):
        assert covariance_residual(system, kernel, f, system.carrier.element(g)) <= 1e-12


def test_planar_covariance_for_bump(planar_default):
    kernel = QuantizationKernel.vacuum(planar_default.fock_dim)
    f = FunctionSpec(family="gauss-bump", width=1.0).on(planar_default.carrier)
    assert covariance_residual(planar_default, kernel, f, (0.5, 0.0)) <= 1e-4


def test_planar_translation_off_the_window(planar_small):
    corner = planar_small.carrier.index_of((-6.0, 0.0))
    f = ClassicalObservable.indicator(planar_small.carrier, [corner])
    with pytest.raises(TranslationLeavesGrid):
        covariance_residual(planar_small, QuantizationKernel.vacuum(planar_small.fock_dim), f, (0.4, 0.0))


# ============================================
# Kernel recovery
# ============================================

def test_recovery_round_trip(finite_systems, rng):
    system = finite_systems[4]
    kernel = random_kernel(4, rng)
    result = recover_kernel(system, map_table_from_kernel(system, kernel))
    assert result.kernel.T.max_abs_diff(kernel.T) <= 1e-10
    assert result.max_deviation <= 1e-12


def test_recovery_tolerates_small_noise(finite_systems, rng):
    system = finite_systems[4]
    kernel = random_kernel(4, rng)
    table = map_table_from_kernel(system, kernel)
    noise = 1e-8 * (rng.standard_normal(table.entries.shape) + 1j * rng.standard_normal(table.entries.shape))
    result = recover_kernel(system, MapTable(system.carrier, table.entries + noise))
    assert result.kernel.T.max_abs_diff(kernel.T) <= 1e-7
    assert 0.0 < result.max_deviation <= 1e-6


def test_recovery_rejects_constant_table(finite_systems):
    system = finite_systems[3]
    entries = np.repeat(Operator.basis_projector(3, 0).entries[None] / 3.0, system.carrier.size, axis=0)
    with pytest.raises(RecoveryDeviationExceeded):
        recover_kernel(system, MapTable(system.carrier, entries), max_dev=1e-8)


def test_recovery_threshold_defaults_to_recovery_tol(finite_systems):
    system = finite_systems[3]
    entries = np.repeat(Operator.basis_projector(3, 0).entries[None] / 3.0, system.carrier.size, axis=0)
    table = MapTable(system.carrier, entries)
    with pytest.raises(RecoveryDeviationExceeded):
        recover_kernel(system, table)
    loose = build_finite_weyl(3, Tolerances().with_overrides({"recovery_tol": 1.0}))
    result = recover_kernel(loose, MapTable(loose.carrier, entries))
    assert result.max_deviation > system.tolerances.recovery_tol


def test_recovery_rejects_zero_map(finite_systems):
    system = finite_systems[2]
    entries = np.zeros((system.carrier.size, 2, 2))
    with pytest.raises(NotPositiveRecovered):
        recover_kernel(system, MapTable(system.carrier, entries))


def test_incomplete_table(finite_systems):
    with pytest.raises(IncompleteTable):
        MapTable(finite_systems[3].carrier, np.zeros((5, 3, 3)))


# ============================================
# Normality surrogate
# ============================================

def test_constant_sequence_converges_immediately(finite_systems, rng):
    system = finite_systems[3]
    kernel = random_kernel(3, rng)
    f = ClassicalObservable.constant(system.carrier)
    report = normality_surrogate_check(system, kernel, [f, f, f], f)
    assert report.residuals == [0.0, 0.0, 0.0]
    assert report.converged_at == 0
    assert report.factorization_residual <= 1e-12


def test_finite_exhaustion_reaches_limit(finite_systems, rng):
    system = finite_systems[3]
    kernel = random_kernel(3, rng)
    f = ClassicalObservable.bounded(system.carrier, random_values(system, rng))
    sequence = []
    for k in range(1, system.carrier.size + 1):
        mask = np.zeros(system.carrier.size, dtype=bool)
        mask[:k] = True
        sequence.append(f.restricted(mask))
    report = normality_surrogate_check(system, kernel, sequence, f)
    assert report.final_residual == 0.0
    assert report.converged


def test_planar_capped_sequence(planar_default):
    kernel = QuantizationKernel.vacuum(planar_default.fock_dim)
    f = radial_quadratic().on(planar_default.carrier)
    sequence = [f.capped(n) for n in range(1, 51)]
    report = normality_surrogate_check(planar_default, kernel, sequence, f)
    assert report.final_residual <= 1e-6
    assert report.residuals[0] > report.final_residual


def test_sequence_above_uniform_bound(finite_systems, rng):
    system = finite_systems[2]
    f = ClassicalObservable.constant(system.carrier)
    with pytest.raises(UnboundedSequence):
        normality_surrogate_check(system, random_kernel(2, rng), [f.combine(f)], f, sup_bound=1.0)


def test_quantized_unit_has_trace_dimension(finite_systems, rng):
    system = finite_systems[2]
    kernel = random_kernel(2, rng)
    f = ClassicalObservable.constant(system.carrier)
    assert abs(trace(quantize(system, kernel, f)) - 2.0) <= 1e-12
