"""
Operator algebra: traces, trace norm, positivity, conjugation and the gated roles
"""

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from app.core.exceptions import (
    DimensionMismatch,
    InvalidDensityOperator,
    InvalidEffect,
    InvalidOperator,
    NonHermitianInput,
    NonUnitaryConjugator,
)
from app.core.groups import weyl_operator
from app.core.operators import (
    DensityOperator,
    Effect,
    Operator,
    conjugate,
    is_positive,
    random_density,
    random_hermitian,
    random_unitary,
    trace,
    trace_norm,
)

entries = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)


def square_pairs(max_dim: int = 8):
    return st.integers(min_value=1, max_value=max_dim).flatmap(
        lambda n: st.tuples(arrays(np.float64, (n, n), elements=entries),
                            arrays(np.float64, (n, n), elements=entries))
    )


# ============================================
# Construction
# ============================================

def test_operator_rejects_non_square():
    with pytest.raises(InvalidOperator):
        Operator(np.zeros((2, 3)))


def test_operator_rejects_nan():
    bad = np.eye(2)
    bad[0, 1] = np.nan
    with pytest.raises(InvalidOperator):
        Operator(bad)


def test_operator_entries_are_read_only():
    op = Operator(np.eye(2))
    with pytest.raises(ValueError):
        op.entries[0, 0] = 5.0


def test_dimension_mismatch_on_product():
    with pytest.raises(DimensionMismatch):
        Operator.identity(2) @ Operator.identity(3)


# ============================================
# Trace and trace norm
# ============================================

def test_trace_of_identity():
    assert trace(Operator.identity(3)) == 3 + 0j


def test_trace_of_basis_projection():
    assert trace(Operator.basis_projector(2, 0)) == 1 + 0j


def test_trace_matches_eigenvalue_sum(rng):
    h = random_hermitian(6, rng)
    assert abs(trace(h) - np.sum(scipy.linalg.eigvalsh(h.entries))) <= 1e-10


def test_trace_norm_of_identity():
    assert trace_norm(Operator.identity(3)) == pytest.approx(3.0, abs=1e-12)


def test_trace_norm_of_indefinite_diagonal():
    assert trace_norm(Operator(np.diag([1.0, -2.0]))) == pytest.approx(3.0, abs=1e-12)


def test_trace_norm_is_unitarily_invariant(rng):
    u = random_unitary(5, rng)
    s = random_hermitian(5, rng)
    assert abs(trace_norm(conjugate(u, s)) - trace_norm(s)) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(square_pairs())
def test_trace_is_cyclic(pair):
    a, b = (Operator(m) for m in pair)
    lhs, rhs = trace(a @ b), trace(b @ a)
    assert abs(lhs - rhs) <= 1e-10 * (1.0 + abs(lhs))


@settings(max_examples=30, deadline=None)
@given(square_pairs())
def test_trace_norm_dominates_trace(pair):
    a = Operator(pair[0] + 1j * pair[1])
    assert trace_norm(a) >= abs(trace(a)) - 1e-10 * (1.0 + trace_norm(a))


# ============================================
# Positivity
# ============================================

def test_identity_is_positive():
    assert is_positive(Operator.identity(3), 0.0)


def test_small_negative_eigenvalue_is_detected():
    assert not is_positive(Operator(np.diag([1.0, -1e-6])), 1e-8)


def test_gram_matrix_is_positive(rng):
    m = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    gram = m @ m.conj().T
    assert is_positive(Operator(0.5 * (gram + gram.conj().T)), 1e-10)


def test_positivity_requires_hermitian_input():
    with pytest.raises(NonHermitianInput):
        is_positive(Operator(np.array([[1.0, 1.0], [0.0, 1.0]])), 0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=1, max_value=6))
def test_conjugation_preserves_positivity_and_trace_norm(seed, dim):
    rng = np.random.default_rng(seed)
    u = random_unitary(dim, rng)
    s = random_density(dim, rng).op
    moved = conjugate(u, s)
    assert is_positive(moved, 1e-9)
    assert abs(trace_norm(moved) - trace_norm(s)) <= 1e-9


# ============================================
# Conjugation
# ============================================

def test_conjugation_by_identity_is_exact(rng):
    s = random_hermitian(4, rng)
    assert np.array_equal(conjugate(Operator.identity(4), s).entries, s.entries)


def test_shift_moves_basis_projection(finite_systems):
    shift = weyl_operator(finite_systems[2], (1, 0))
    moved = conjugate(shift, Operator.basis_projector(2, 0))
    assert moved.max_abs_diff(Operator.basis_projector(2, 1)) <= 1e-15


def test_conjugation_preserves_trace(rng):
    u = random_unitary(6, rng)
    s = random_hermitian(6, rng)
    assert abs(trace(conjugate(u, s)) - trace(s)) <= 1e-12


def test_non_unitary_conjugator_is_rejected():
    with pytest.raises(NonUnitaryConjugator):
        conjugate(Operator.identity(2).scaled(2.0), Operator.identity(2))


# ============================================
# Density operators and effects
# ============================================

def test_density_rejects_wrong_trace():
    with pytest.raises(InvalidDensityOperator):
        DensityOperator(Operator(np.diag([0.5, 0.4])))


def test_density_rejects_negative_eigenvalue():
    with pytest.raises(InvalidDensityOperator):
        DensityOperator(Operator(np.diag([1.5, -0.5])))


def test_density_rejects_non_hermitian():
    with pytest.raises(InvalidDensityOperator):
        DensityOperator(Operator(np.array([[0.5, 0.3], [0.0, 0.5]])))


def test_random_density_passes_gate(rng):
    rho = random_density(7, rng, rank=2)
    assert abs(trace(rho.op) - 1.0) <= 1e-12
    assert is_positive(rho.op, 1e-12)


def test_effect_spectrum_must_lie_in_unit_interval():
    with pytest.raises(InvalidEffect):
        Effect(Operator(np.diag([1.5, 0.0])))


def test_rank_one_projection_detection():
    assert Effect(Operator.basis_projector(3, 1)).is_rank_one_projection(1e-9)
    assert not Effect(Operator(np.diag([0.5, 0.5, 0.0]))).is_rank_one_projection(1e-9)
