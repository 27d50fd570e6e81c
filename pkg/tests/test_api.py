"""
API Test - FastAPI endpoints through the in-process test client
"""

import pytest
from fastapi.testclient import TestClient

from app.main import app


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


def _pure_state(dim: int) -> dict:
    data = [[[0.0, 0.0] for _ in range(dim)] for _ in range(dim)]
    data[0][0] = [1.0, 0.0]
    return {"dim": dim, "data": data}


# ============================================
# Health and info
# ============================================

def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"
    assert "X-Process-Time" in response.headers


def test_info_reports_defaults(client):
    data = client.get("/api/v1/info").json()
    assert data["planar_defaults"]["M"] == 40
    assert data["tolerances"]["herm_tol"] > 0


# ============================================
# Quantization
# ============================================

def test_quantize_one_on_finite_system(client):
    response = client.post("/api/v1/quantize", json={
        "system": {"kind": "finite", "N": 3},
        "function": {"family": "one"},
    })
    assert response.status_code == 200
    data = response.json()
    assert data["success"] is True
    assert data["dim"] == 3
    assert data["trace"] == pytest.approx(3.0, abs=1e-12)
    assert data["hermiticity_residual"] <= 1e-12


def test_quantize_with_mismatched_kernel(client):
    response = client.post("/api/v1/quantize", json={
        "system": {"kind": "finite", "N": 3},
        "kernel": _pure_state(2),
        "function": {"family": "one"},
    })
    assert response.status_code == 422
    assert response.json()["error"] == "DimensionMismatch"


def test_modulus_one_is_rejected(client):
    response = client.post("/api/v1/quantize", json={
        "system": {"kind": "finite", "N": 1},
        "function": {"family": "one"},
    })
    assert response.status_code == 422


def test_unknown_family_is_rejected(client):
    response = client.post("/api/v1/quantize", json={
        "system": {"kind": "finite", "N": 3},
        "function": {"family": "sawtooth"},
    })
    assert response.status_code == 422


# ============================================
# POVM probabilities
# ============================================

def test_whole_partition_is_certain(client):
    response = client.post("/api/v1/povm/probabilities", json={
        "system": {"kind": "finite", "N": 2},
        "partition": "whole",
    })
    assert response.status_code == 200
    cells = response.json()["cells"]
    assert len(cells) == 1
    assert cells[0]["probability"] == pytest.approx(1.0, abs=1e-12)


def test_singleton_probabilities_sum_to_one(client):
    response = client.post("/api/v1/povm/probabilities", json={
        "system": {"kind": "finite", "N": 3},
        "kernel": _pure_state(3),
        "partition": "singletons",
    })
    data = response.json()
    assert len(data["cells"]) == 9
    assert data["total"] == pytest.approx(1.0, abs=1e-12)


def test_unknown_partition_is_rejected(client):
    response = client.post("/api/v1/povm/probabilities", json={
        "system": {"kind": "finite", "N": 2},
        "partition": "hexagons",
    })
    assert response.status_code == 422
    assert response.json()["error"] == "InvalidPartition"


# ============================================
# Verification
# ============================================

def test_verify_finite_system(client):
    response = client.post("/api/v1/verify", json={
        "suite": "finite-exact",
        "system": {"kind": "finite", "N": 3},
        "random_kernels": 2,
    })
    assert response.status_code == 200
    data = response.json()
    assert data["passed"] is True
    assert data["environment"]["finite"]["moduli"] == [3]


def test_verify_reports_gate_failure_with_200(client):
    bad = _pure_state(3)
    bad["data"][1][1] = [0.5, 0.0]
    response = client.post("/api/v1/verify", json={
        "suite": "finite-exact",
        "system": {"kind": "finite", "N": 3},
        "kernel": bad,
        "random_kernels": 0,
    })
    assert response.status_code == 200
    data = response.json()
    assert data["passed"] is False
    assert data["records"][0]["check_id"] == "finite_N3_kernel_density_gate"
