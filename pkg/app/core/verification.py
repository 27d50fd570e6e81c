"""
Verification Suites
Identity and property checks over finite and planar Weyl systems, collected
into a self-describing VerificationReport
"""

from typing import Any, Callable, Dict, List, Literal, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, model_validator

from app.config import Tolerances, default_tolerances, get_settings
from app.core.exceptions import (
    InvalidDensityOperator,
    NotPositiveRecovered,
    QuantizationError,
    RecoveryDeviationExceeded,
)
from app.core.groups import (
    FiniteWeylSystem,
    PlanarWeylSystem,
    WeylSystem,
    build_finite_weyl,
    build_planar_weyl,
    check_square_integrability,
    composition_phase_residual,
)
from app.core.observables import ClassicalObservable, FunctionSpec, radial_quadratic
from app.core.operators import (
    Operator,
    hermitian_eigenvalues,
    random_density,
    trace_norm,
)
from app.core.povm import (
    OutcomePartition,
    build_povm,
    cell_trace_residual,
    effects_sum_residual,
    povm_covariance_residual,
    probabilities,
    quasicontinuity_check,
)
from app.core.quantization import (
    MapTable,
    QuantizationKernel,
    covariance_residual,
    dual_symbol,
    duality_residual,
    husimi_moment_oracle,
    map_table_from_kernel,
    quantize,
    recover_kernel,
    trace_identity_residual,
    unit_residual,
)
from app.utils.timing import PerformanceTracker

SuiteName = Literal["finite-exact", "planar-quadrature", "all"]

FINITE_MODULI = (2, 3, 4, 5)
ANTI_WICK_LEVELS = 10
REFINED_GRID = {"M": 60, "L": 8.0, "h": 0.05}
WIDE_GRID = {"M": 12, "L": 10.0, "h": 0.2}
UNIT_WINDOWS = {"M": 20, "h": 0.2, "L": (2.0, 4.0, 6.0)}
COVARIANCE_SHIFTS = ((0.5, 0.0), (0.0, 0.5), (-0.3, 0.2))
RECOVERY_MAX_DEV = 1e-8


class CheckRecord(BaseModel):
    """One verified identity"""
    check_id: str
    reference: str
    residual: float = Field(ge=0)
    tolerance: float = Field(ge=0)
    passed: bool
    detail: Optional[str] = None


class VerificationReport(BaseModel):
    """Suite outcome; passed holds iff every record passes"""
    suite: str
    records: List[CheckRecord] = Field(default_factory=list)
    environment: Dict[str, Any] = Field(default_factory=dict)
    passed: bool = True

    @model_validator(mode="after")
    def overall_flag(self) -> "VerificationReport":
        self.passed = all(r.passed for r in self.records)
        return self

    def add(self, record: CheckRecord) -> None:
        self.records.append(record)
        self.passed = self.passed and record.passed

    @property
    def failed(self) -> List[CheckRecord]:
        return [r for r in self.records if not r.passed]


class SuiteRunner:
    """
    Collects check records with timing

    Each check returns (residual, tolerance[, detail]); an exception inside a
    check turns into a failing record carrying the error message.
    """

    def __init__(self, report: VerificationReport, tracker: PerformanceTracker):
        self.report = report
        self.tracker = tracker

    def check(self, check_id: str, reference: str, fn: Callable[[], tuple]) -> CheckRecord:
        try:
            with self.tracker.track(check_id):
                outcome = fn()
            residual, tolerance = float(outcome[0]), float(outcome[1])
            detail = outcome[2] if len(outcome) > 2 else None
            if not np.isfinite(residual):
                record = CheckRecord(check_id=check_id, reference=reference, residual=0.0,
                                     tolerance=tolerance, passed=False, detail="non-finite residual")
            else:
                record = CheckRecord(check_id=check_id, reference=reference, residual=abs(residual),
                                     tolerance=tolerance, passed=abs(residual) <= tolerance, detail=detail)
        except QuantizationError as e:
            record = CheckRecord(check_id=check_id, reference=reference, residual=0.0, tolerance=0.0,
                                 passed=False, detail=f"{type(e).__name__}: {e}")
        if record.passed:
            logger.debug(f"✓ {check_id}: {record.residual:.3e} <= {record.tolerance:.1e}")
        else:
            logger.warning(f"✗ {check_id}: {record.detail or f'{record.residual:.3e} > {record.tolerance:.1e}'}")
        self.report.add(record)
        return record


# ============================================
# Kernel gate
# ============================================

def gate_kernel(runner: SuiteRunner, prefix: str, op: Operator,
                tolerances: Tolerances) -> Optional[QuantizationKernel]:
    """Density-operator gate on a supplied kernel; failing kernels stop kernel-dependent checks"""
    try:
        kernel = QuantizationKernel.from_operator(op, tolerances)
    except InvalidDensityOperator as e:
        runner.report.add(CheckRecord(
            check_id=f"{prefix}_kernel_density_gate", reference="kernel is a density operator",
            residual=abs(complex(np.trace(op.entries)) - 1.0), tolerance=tolerances.trace_tol,
            passed=False, detail=str(e),
        ))
        logger.warning(f"✗ {prefix}_kernel_density_gate: {e}")
        return None
    runner.report.add(CheckRecord(
        check_id=f"{prefix}_kernel_density_gate", reference="kernel is a density operator",
        residual=abs(complex(np.trace(op.entries)) - 1.0), tolerance=tolerances.trace_tol, passed=True,
    ))
    return kernel


# ============================================
# Finite exactness suite
# ============================================

def _random_nonnegative(system: WeylSystem, rng: np.random.Generator) -> ClassicalObservable:
    return ClassicalObservable.bounded(system.carrier, rng.random(system.carrier.size))


def _random_complex(system: WeylSystem, rng: np.random.Generator) -> ClassicalObservable:
    values = rng.standard_normal(system.carrier.size) + 1j * rng.standard_normal(system.carrier.size)
    return ClassicalObservable.bounded(system.carrier, values)


def _finite_checks(runner: SuiteRunner, system: FiniteWeylSystem,
                   kernels: Sequence[QuantizationKernel], rng: np.random.Generator) -> None:
    n = system.modulus
    prefix = f"finite_N{n}"
    carrier = system.carrier
    all_g = [carrier.element(i) for i in range(carrier.size)]

    def square_integrability():
        worst = 0.0
        for i in range(n):
            for j in range(n):
                value = check_square_integrability(system, Operator.basis_projector(n, i),
                                                   Operator.basis_projector(n, j))
                worst = max(worst, abs(value - system.d_const))
        return worst, 1e-10

    def composition():
        worst = 0.0
        for x in all_g:
            for y in all_g:
                worst = max(worst, composition_phase_residual(system, x, y))
        return worst, 1e-12

    def trace_identity():
        worst = 0.0
        for _ in range(len(kernels)):
            a = random_density(n, rng).op.scaled(1.0 + 2.0 * rng.random())
            s = random_density(n, rng).op
            identity = trace_identity_residual(system, a, s)
            worst = max(worst, identity.residual / (1.0 + identity.rhs))
        return worst, 1e-10

    def unit():
        return max(unit_residual(system, k) for k in kernels), 1e-12

    def positivity():
        worst = 0.0
        for kernel in kernels:
            gamma_f = quantize(system, kernel, _random_nonnegative(system, rng))
            worst = max(worst, -hermitian_eigenvalues(gamma_f, system.tolerances)[0])
        return max(worst, 0.0), 1e-9

    def duality():
        worst = 0.0
        for kernel in kernels:
            f = _random_complex(system, rng)
            s = random_density(n, rng).op
            scale = 1.0 + trace_norm(s) * f.sup_norm()
            worst = max(worst, duality_residual(system, kernel, f, s) / scale)
        return worst, 1e-10

    def covariance():
        worst = 0.0
        for kernel in kernels:
            f = _random_complex(system, rng)
            for g in all_g:
                worst = max(worst, covariance_residual(system, kernel, f, g))
        return worst, 1e-12

    def trace_norm_identity():
        worst = 0.0
        for kernel in kernels:
            f = _random_nonnegative(system, rng)
            norm = trace_norm(quantize(system, kernel, f))
            worst = max(worst, abs(norm - f.l1_norm() / system.d_const))
        return worst, 1e-10

    singletons = OutcomePartition.singletons(carrier)
    povms = [build_povm(system, kernel, singletons) for kernel in kernels]

    def povm_normalization():
        return max(effects_sum_residual(p) for p in povms), 1e-10

    def povm_cell_trace():
        return max(cell_trace_residual(p) for p in povms), 1e-10

    def povm_covariance():
        return max(povm_covariance_residual(system, p, g) for p in povms for g in all_g), 1e-12

    def povm_probability_symbol():
        worst = 0.0
        for kernel, povm in zip(kernels, povms):
            rho = random_density(n, rng)
            symbol = dual_symbol(system, kernel, rho.op)
            probs = probabilities(povm, rho)
            for (_, idx), p in zip(povm.partition.cells, probs):
                worst = max(worst, abs(p - float(np.sum(carrier.weight * symbol.values[idx]).real)))
        return worst, 1e-12

    recovered = {}

    def recovery_round_trip():
        worst_err, worst_dev = 0.0, 0.0
        for kernel in kernels:
            result = recover_kernel(system, map_table_from_kernel(system, kernel))
            worst_err = max(worst_err, result.kernel.T.max_abs_diff(kernel.T))
            worst_dev = max(worst_dev, result.max_deviation)
        recovered["deviation"] = worst_dev
        return worst_err, 1e-9

    def recovery_deviation():
        return recovered.get("deviation", float("inf")), 1e-10

    def recovery_rejects_noncovariant():
        constant = Operator.basis_projector(n, 0).scaled(1.0 / n)
        table = MapTable(carrier, np.repeat(constant.entries[None], carrier.size, axis=0))
        try:
            result = recover_kernel(system, table, max_dev=RECOVERY_MAX_DEV)
        except (NotPositiveRecovered, RecoveryDeviationExceeded) as e:
            return 0.0, 0.0, f"rejected: {type(e).__name__}"
        return 1.0, 0.0, f"accepted with deviation {result.max_deviation:.3e}"

    checks = [
        ("square_integrability", "square-integrability constant equals d", square_integrability),
        ("composition_phase", "Weyl composition law W(x)W(y) = c(x,y)W(x+y)", composition),
        ("trace_identity", "orbit trace identity equals Tr[A]Tr[S]", trace_identity),
        ("unit", "quantization of 1 is the identity", unit),
        ("positivity", "quantization of f >= 0 is positive", positivity),
        ("duality", "Tr[S Gamma(f)] equals the symbol pairing", duality),
        ("covariance", "beta_g^* Gamma(f) = Gamma(f(g .)) for every g", covariance),
        ("trace_norm_identity", "trace norm of Gamma(f) equals d^-1 ||f||_1 for f >= 0", trace_norm_identity),
        ("povm_normalization", "POVM effects sum to the identity", povm_normalization),
        ("povm_cell_trace", "Tr E(B) equals d^-1 lambda(B)", povm_cell_trace),
        ("povm_covariance", "beta_g^* E(B) = E(B - g)", povm_covariance),
        ("povm_probability_symbol", "cell probabilities integrate the dual symbol", povm_probability_symbol),
        ("recovery_round_trip", "kernel recovery inverts kernel-to-map construction", recovery_round_trip),
        ("recovery_deviation", "candidate kernels of a covariant map coincide", recovery_deviation),
        ("recovery_rejects_noncovariant", "non-covariant map is rejected by recovery",
         recovery_rejects_noncovariant),
    ]
    for name, reference, fn in checks:
        runner.check(f"{prefix}_{name}", reference, fn)


def run_finite_exact(runner: SuiteRunner, systems: Sequence[FiniteWeylSystem],
                     kernel_op: Optional[Operator], random_kernels: int, seed: int,
                     tolerances: Tolerances) -> None:
    """Exact identities on Z_N x Z_N for each system, given or random kernels"""
    rng = np.random.default_rng(seed)
    for system in systems:
        kernels: List[QuantizationKernel] = []
        if kernel_op is not None and kernel_op.dim == system.fock_dim:
            kernel = gate_kernel(runner, f"finite_N{system.modulus}", kernel_op, tolerances)
            if kernel is None:
                continue
            kernels.append(kernel)
        kernels.extend(QuantizationKernel(random_density(system.fock_dim, rng)) for _ in range(random_kernels))
        if not kernels:
            kernels.append(QuantizationKernel.vacuum(system.fock_dim))
        _finite_checks(runner, system, kernels, rng)


# ============================================
# Planar quadrature suite
# ============================================

def run_planar_quadrature(runner: SuiteRunner, system: PlanarWeylSystem,
                          kernel_op: Optional[Operator], tolerances: Tolerances) -> None:
    """Quadrature-limited identities on the planar grid"""
    prefix = "planar"
    if kernel_op is not None:
        kernel = gate_kernel(runner, prefix, kernel_op, tolerances)
        if kernel is None:
            return
    else:
        kernel = QuantizationKernel.vacuum(system.fock_dim)
    # oracle-based checks always use the Gaussian kernel
    gaussian = QuantizationKernel.vacuum(system.fock_dim)
    vacuum = gaussian.T
    two_pi = 2.0 * np.pi
    state: Dict[str, float] = {}

    def square_integrability():
        value = check_square_integrability(system, vacuum, vacuum)
        state["square_integrability"] = abs(value - two_pi) / two_pi
        return state["square_integrability"], 1e-3

    def square_integrability_refined():
        refined = build_planar_weyl(REFINED_GRID["M"], REFINED_GRID["L"], REFINED_GRID["h"], tolerances)
        ref_vacuum = Operator.basis_projector(refined.fock_dim, 0)
        rel = abs(check_square_integrability(refined, ref_vacuum, ref_vacuum) - two_pi) / two_pi
        baseline = state.get("square_integrability", 1e-3)
        return max(0.0, rel - baseline), 1e-12, f"refined relative error {rel:.3e}"

    def husimi_origin():
        symbol = dual_symbol(system, gaussian, vacuum)
        state["husimi_mass"] = abs(float(np.sum(system.carrier.weight * symbol.values).real) - 1.0)
        return abs(symbol.values[system.carrier.identity_index].real - 1.0 / two_pi), 1e-6

    def husimi_mass():
        if "husimi_mass" not in state:
            symbol = dual_symbol(system, gaussian, vacuum)
            state["husimi_mass"] = abs(float(np.sum(system.carrier.weight * symbol.values).real) - 1.0)
        return state["husimi_mass"], 1e-3

    def anti_wick_window():
        gamma_f = quantize(system, gaussian, radial_quadratic().on(system.carrier))
        levels = min(ANTI_WICK_LEVELS, system.fock_dim - 1)
        worst = max(
            abs(gamma_f.entries[n, n].real - husimi_moment_oracle(n, system.carrier.half_extent))
            for n in range(levels + 1)
        )
        return worst, 5e-3

    def anti_wick_wide():
        wide = build_planar_weyl(WIDE_GRID["M"], WIDE_GRID["L"], WIDE_GRID["h"], tolerances)
        gamma_f = quantize(wide, QuantizationKernel.vacuum(wide.fock_dim), radial_quadratic().on(wide.carrier))
        levels = min(ANTI_WICK_LEVELS, wide.fock_dim - 1)
        return max(abs(gamma_f.entries[n, n].real - (n + 1)) for n in range(levels + 1)), 5e-3

    def unit():
        return unit_residual(system, kernel), 1e-3

    def unit_refinement():
        residuals = []
        for half_extent in UNIT_WINDOWS["L"]:
            window = build_planar_weyl(UNIT_WINDOWS["M"], half_extent, UNIT_WINDOWS["h"], tolerances)
            residuals.append(unit_residual(window, QuantizationKernel.vacuum(window.fock_dim)))
        detail = "residuals " + ", ".join(f"{r:.3e}" for r in residuals)
        if not all(a > b for a, b in zip(residuals, residuals[1:])):
            return float("inf"), 1e-3, detail + " not strictly decreasing"
        return residuals[-1], 1e-3, detail

    def quasicontinuity():
        f = radial_quadratic().on(system.carrier)
        sequence = [f.capped(float(n)) for n in range(1, 51)]
        phi = np.eye(system.fock_dim, dtype=np.complex128)[0]
        report = quasicontinuity_check(system, gaussian, sequence, f, phi, phi)
        if not report.monotone:
            return float("inf"), tolerances.qc_tol, "residuals not monotone"
        return report.final_residual, tolerances.qc_tol

    def covariance():
        bump = FunctionSpec(family="gauss-bump", width=1.0).on(system.carrier)
        return max(covariance_residual(system, kernel, bump, g) for g in COVARIANCE_SHIFTS), 1e-4

    checks = [
        ("square_integrability", "square-integrability constant equals 2 pi", square_integrability),
        ("square_integrability_refined", "square-integrability error does not grow under refinement",
         square_integrability_refined),
        ("husimi_origin", "vacuum Husimi value at the origin is 1/(2 pi)", husimi_origin),
        ("husimi_mass", "vacuum Husimi function has unit mass", husimi_mass),
        ("anti_wick_window", "anti-Wick moments match the window oracle", anti_wick_window),
        ("anti_wick_wide", "anti-Wick moments <n|Gamma(f)|n> = n + 1 on a wide window", anti_wick_wide),
        ("unit", "quantization of 1 is the identity on the trusted block", unit),
        ("unit_refinement", "unit residual decreases strictly as the window grows", unit_refinement),
        ("quasicontinuity", "min(f, n) integrals converge monotonically", quasicontinuity),
        ("covariance", "covariance of a Gaussian bump under lattice shifts", covariance),
    ]
    for name, reference, fn in checks:
        runner.check(f"{prefix}_{name}", reference, fn)


# ============================================
# Entry point
# ============================================

def run_verification(suite: SuiteName, system: Optional[WeylSystem] = None,
                     kernel_op: Optional[Operator] = None, random_kernels: int = 20,
                     seed: Optional[int] = None, tolerances: Optional[Tolerances] = None) -> VerificationReport:
    """
    Run one suite (or both) and return the report

    finite-exact runs on the given finite system, or on N = 2..5 when none is
    given. planar-quadrature runs on the given planar system, or on the
    default grid.
    """
    settings = get_settings()
    tolerances = tolerances or default_tolerances()
    seed = settings.default_seed if seed is None else seed
    tracker = PerformanceTracker()
    report = VerificationReport(suite=suite)
    runner = SuiteRunner(report, tracker)
    environment: Dict[str, Any] = {"seed": seed, "tolerances": tolerances.model_dump()}

    if suite in ("finite-exact", "all"):
        if isinstance(system, FiniteWeylSystem):
            systems = [system]
        else:
            systems = [build_finite_weyl(n, tolerances) for n in FINITE_MODULI]
        environment["finite"] = {"moduli": [s.modulus for s in systems], "random_kernels": random_kernels}
        run_finite_exact(runner, systems, kernel_op, random_kernels, seed, tolerances)

    if suite in ("planar-quadrature", "all"):
        if isinstance(system, PlanarWeylSystem):
            planar = system
        else:
            planar = build_planar_weyl(settings.planar_fock_dim, settings.planar_half_extent,
                                       settings.planar_step, tolerances)
        environment["planar"] = {**planar.descriptor(), "trusted_dim": planar.trusted_dim,
                                 "truncation_defect": planar.truncation_defect,
                                 "refined": REFINED_GRID, "wide": WIDE_GRID}
        run_planar_quadrature(runner, planar, kernel_op, tolerances)
        environment["planar"]["cache"] = planar.cache.get_stats()

    environment["timing"] = tracker.get_report()
    report.environment = environment
    status = "PASS" if report.passed else "FAIL"
    logger.info(f"Suite {suite}: {status} ({len(report.records)} checks, {len(report.failed)} failed, "
                f"{tracker.get_total_time_ms():.0f} ms)")
    return report
