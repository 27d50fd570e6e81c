"""
Example Usage Scripts for the Covariant Quantization Toolkit
Library examples run directly; the HTTP examples need `python run.py` first
"""

import json
import sys
from typing import Any, Dict

import httpx
import numpy as np

from app.core.groups import build_finite_weyl, build_planar_weyl
from app.core.observables import ClassicalObservable, radial_quadratic
from app.core.operators import Operator
from app.core.povm import OutcomePartition, build_povm, probabilities, sample
from app.core.quantization import (
    QuantizationKernel,
    husimi_moment_oracle,
    quantize,
    trace_identity_partial_sums,
)

# API Base URL
BASE_URL = "http://localhost:8000"


def print_section(title: str):
    """Print a formatted section header"""
    print(f"\n{'=' * 70}")
    print(f" {title}")
    print(f"{'=' * 70}\n")


def print_result(result: Dict[str, Any]):
    """Pretty print API result"""
    print(json.dumps(result, indent=2))


# ============================================
# Example 1: Orbit trace identity with A = I
# ============================================

def example_trace_identity_growth():
    """
    Partial sums of d^-1 sum_g w_g Tr[beta_g(|0><0|)] over nested windows

    Tr[A] is infinite for A = I on the plane; on the grid the partial sums
    grow with the window area (L'^2 * 4 / 2pi) instead of settling.
    """
    print_section("Example 1: Orbit trace identity with A = I")
    system = build_planar_weyl(fock_dim=20, half_extent=6.0, step=0.2)
    identity = Operator.identity(system.fock_dim)
    vacuum = Operator.basis_projector(system.fock_dim, 0)
    windows = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    sums = trace_identity_partial_sums(system, identity, vacuum, windows)
    for window, value in zip(windows, sums):
        area = (2 * window) ** 2 / (2 * np.pi)
        print(f"  L' = {window:3.1f}   partial sum = {value:10.4f}   window area / 2pi = {area:10.4f}")


# ============================================
# Example 2: Anti-Wick moments of the harmonic oscillator
# ============================================

def example_anti_wick_moments():
    """<n|Gamma((q^2+p^2)/2)|n> against n + 1 and the square-window oracle"""
    print_section("Example 2: Anti-Wick moments")
    system = build_planar_weyl(fock_dim=40, half_extent=6.0, step=0.1)
    gamma_f = quantize(system, QuantizationKernel.vacuum(system.fock_dim), radial_quadratic().on(system.carrier))
    for n in range(11):
        value = gamma_f.entries[n, n].real
        oracle = husimi_moment_oracle(n, system.carrier.half_extent)
        print(f"  n = {n:2d}   grid = {value:9.5f}   window oracle = {oracle:9.5f}   n + 1 = {n + 1}")


# ============================================
# Example 3: Finite POVM statistics
# ============================================

def example_finite_povm():
    """Singleton POVM on Z_3 x Z_3 with its probabilities and seeded counts"""
    print_section("Example 3: Finite POVM statistics")
    system = build_finite_weyl(3)
    kernel = QuantizationKernel.vacuum(3)
    povm = build_povm(system, kernel, OutcomePartition.singletons(system.carrier))
    probs = probabilities(povm, kernel.density)
    counts = sample(povm, kernel.density, shots=10_000, seed=42)
    for label, p, c in zip(counts.labels, probs, counts.counts):
        print(f"  g = ({label})   p = {p:.4f}   counts = {c}")
    gamma_one = quantize(system, kernel, ClassicalObservable.constant(system.carrier))
    print(f"\n  |Gamma(1) - I|_max = {np.max(np.abs(gamma_one.entries - np.eye(3))):.2e}")


# ============================================
# Example 4: HTTP API
# ============================================

def example_http_api():
    """Health check, a quantization and a finite verification run"""
    print_section("Example 4: HTTP API")
    with httpx.Client(base_url=BASE_URL, timeout=120) as client:
        response = client.get("/health")
        print(f"Status Code: {response.status_code}")
        print_result(response.json())

        response = client.post("/api/v1/quantize", json={
            "system": {"kind": "finite", "N": 3},
            "function": {"family": "gauss-bump", "center": [1, 1], "width": 1.0},
        })
        result = response.json()
        print(f"\nquantize: trace = {result['trace']:.6f}, "
              f"hermiticity residual = {result['hermiticity_residual']:.2e}")

        response = client.post("/api/v1/verify", json={"suite": "finite-exact", "random_kernels": 3})
        report = response.json()
        print(f"\nverify: passed = {report['passed']}, checks = {len(report['records'])}")


def main():
    example_trace_identity_growth()
    example_anti_wick_moments()
    example_finite_povm()
    if "--http" in sys.argv:
        try:
            example_http_api()
        except httpx.ConnectError:
            print("\nServer not running. Start it with: python run.py")


if __name__ == "__main__":
    main()
