"""
Verification suites, settings and the numeric utilities behind them
"""

import numpy as np
import pytest
from pydantic import ValidationError

from app.config import Settings, Tolerances
from app.core.groups import build_finite_weyl
from app.core.operators import Operator
from app.core.verification import CheckRecord, VerificationReport, run_verification
from app.utils.operator_cache import OperatorCache
from app.utils.summation import chunk_slices, map_chunks, pairwise_sum, reduce_chunks
from app.utils.timing import PerformanceTracker


# ============================================
# Suites
# ============================================

def test_finite_suite_passes_on_random_kernels():
    report = run_verification("finite-exact", build_finite_weyl(3), None, random_kernels=3, seed=1)
    assert report.passed
    assert len(report.records) > 10
    assert report.environment["seed"] == 1
    assert report.environment["finite"]["moduli"] == [3]
    assert "timing" in report.environment


def test_finite_suite_is_deterministic():
    first = run_verification("finite-exact", build_finite_weyl(2), None, random_kernels=2, seed=5)
    second = run_verification("finite-exact", build_finite_weyl(2), None, random_kernels=2, seed=5)
    assert [r.residual for r in first.records] == [r.residual for r in second.records]


def test_supplied_kernel_is_checked_first():
    kernel = Operator.basis_projector(4, 1)
    report = run_verification("finite-exact", build_finite_weyl(4), kernel, random_kernels=0)
    assert report.passed
    assert report.records[0].check_id == "finite_N4_kernel_density_gate"


def test_corrupted_kernel_fails_the_gate():
    bad = Operator(np.diag([0.5, 0.4, 0.0]))
    report = run_verification("finite-exact", build_finite_weyl(3), bad, random_kernels=0)
    assert not report.passed
    assert [r.check_id for r in report.failed] == ["finite_N3_kernel_density_gate"]
    assert len(report.records) == 1


def test_kernel_of_other_dimension_is_skipped():
    report = run_verification("finite-exact", build_finite_weyl(2), Operator.basis_projector(3, 0),
                              random_kernels=1)
    assert report.passed
    assert not any(r.check_id.endswith("kernel_density_gate") for r in report.records)


def test_planar_suite_on_default_grid():
    report = run_verification("planar-quadrature")
    failures = [(r.check_id, r.residual, r.tolerance, r.detail) for r in report.failed]
    assert report.passed, failures
    assert report.environment["planar"]["trusted_dim"] == 6
    assert report.environment["planar"]["truncation_defect"] <= 1e-6
    assert "planar_unit_refinement" in [r.check_id for r in report.records]


# ============================================
# Report model
# ============================================

def test_report_flag_follows_records():
    ok = CheckRecord(check_id="a", reference="r", residual=0.0, tolerance=1.0, passed=True)
    bad = CheckRecord(check_id="b", reference="r", residual=2.0, tolerance=1.0, passed=False)
    assert VerificationReport(suite="x", records=[ok]).passed
    assert not VerificationReport(suite="x", records=[ok, bad], passed=True).passed
    report = VerificationReport(suite="x")
    report.add(bad)
    assert not report.passed


def test_record_rejects_negative_residual():
    with pytest.raises(ValidationError):
        CheckRecord(check_id="a", reference="r", residual=-1.0, tolerance=1.0, passed=True)


# ============================================
# Settings
# ============================================

def test_tolerance_overrides_mapping():
    tol = Tolerances().with_overrides({"psd_tol": 1e-6})
    assert tol.psd_tol == 1e-6
    assert tol.herm_tol == Tolerances().herm_tol


def test_tolerances_reject_negative_and_unknown():
    with pytest.raises(ValidationError):
        Tolerances(herm_tol=-1.0)
    with pytest.raises(ValidationError):
        Tolerances().with_overrides({"wobble_tol": 1.0})


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("PLANAR_FOCK_DIM", "24")
    monkeypatch.setenv("HERM_TOL", "1e-8")
    settings = Settings()
    assert settings.planar_fock_dim == 24
    assert settings.tolerances().herm_tol == 1e-8


# ============================================
# Utilities
# ============================================

def test_pairwise_sum_matches_total():
    terms = np.arange(11, dtype=float)[:, None] * np.ones((11, 3))
    assert np.array_equal(pairwise_sum(terms), np.full(3, 55.0))


def test_chunked_reduction_independent_of_workers(rng):
    data = rng.standard_normal((1000, 4, 4))

    def partial(s):
        return pairwise_sum(data[s])

    serial = reduce_chunks(map_chunks(partial, 1000, 64, workers=1))
    threaded = reduce_chunks(map_chunks(partial, 1000, 64, workers=4))
    assert np.array_equal(serial, threaded)
    assert sum(s.stop - s.start for s in chunk_slices(1000, 64)) == 1000


def test_operator_cache_evicts_least_recent():
    cache = OperatorCache(capacity=2, name="test")
    cache.set(1, np.eye(2))
    cache.set(2, np.eye(2))
    assert cache.get(1) is not None
    cache.set(3, np.eye(2))
    assert cache.get(2) is None
    stats = cache.get_stats()
    assert stats["evictions"] == 1
    assert stats["hits"] == 1 and stats["misses"] == 1
    with pytest.raises(ValueError):
        cache.get(1)[0, 0] = 5.0


def test_tracker_records_failures():
    tracker = PerformanceTracker()
    with tracker.track("finite_ok"):
        pass
    with pytest.raises(RuntimeError):
        with tracker.track("finite_bad"):
            raise RuntimeError("boom")
    report = tracker.get_report()
    assert report["steps_count"] == 2
    assert report["failed_steps"] == 1
    assert report["categories"]["finite"]["count"] == 2
