#!/usr/bin/env python3
import numpy as np
import pytest
from fastapi.testclient import TestClient

from app import app
from grid_function import GridFunction
from grid_store import encode_grid


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_health(client):
    """Test health endpoint"""
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"


def test_zoo_listing(client):
    response = client.get("/api/zoo", params={"n": 3})
    assert response.status_code == 200
    operators = response.json()
    assert "gradient" in operators
    assert "cauchy_riemann" not in operators
    assert operators["symmetric_gradient"]["dim_w"] == 6


def test_validate_operator(client):
    good = client.get("/api/zoo").json()["gradient"]
    response = client.post("/api/operators/validate", json=good)
    assert response.status_code == 200
    assert response.json()["ok"]

    bad = {"n": 2, "k": 2, "dim_v": 1, "dim_w": 1, "terms": [
        {"alpha": [2, 0], "matrix": [[1.0]]},
        {"alpha": [1, 0], "matrix": [[1.0]]},
    ]}
    report = client.post("/api/operators/validate", json=bad).json()
    assert not report["ok"]
    assert any("non-homogeneous" in v for v in report["violations"])


def test_symbol(client):
    response = client.post("/api/symbol", json={"zoo": "zoo:laplacian_scalar", "n": 2,
                                                "xi_real": [1.0, 0.0], "xi_imag": [0.0, 1.0]})
    assert response.status_code == 200
    value = response.json()
    assert value["matrix_real"] == [[0.0]]
    assert value["matrix_imag"] == [[0.0]]


def test_classify(client):
    response = client.post("/api/classify", json={"zoo": "zoo:laplacian_scalar", "n": 2,
                                                  "d_max": 6, "restarts": 4})
    assert response.status_code == 200
    report = response.json()
    assert report["c_elliptic_verdict"] == "not_c_elliptic"
    assert report["certificate"]["residual"] < 1e-7

    report = client.post("/api/classify", json={"zoo": "gradient", "n": 2, "d_max": 6, "restarts": 4}).json()
    assert report["c_elliptic_verdict"] == "c_elliptic_evidence"


def test_nullspace(client):
    response = client.post("/api/nullspace", json={"zoo": "hessian", "n": 2, "d_max": 5})
    assert response.status_code == 200
    report = response.json()
    assert report["dims_by_degree"] == [1, 3, 3, 3, 3, 3]
    assert report["degree"] == 1


def test_riesz_and_maximal(client):
    atoms = [{"x": [0.0, 0.0], "w": [1.0]}]
    response = client.post("/api/riesz", json={"atoms": atoms, "s": 1.0, "x0": [1.0, 0.0]})
    assert response.status_code == 200
    assert response.json() == {"value": 1.0, "infinite": False}

    response = client.post("/api/riesz", json={"atoms": atoms, "s": 1.0, "x0": [0.0, 0.0]})
    assert response.json()["infinite"]

    response = client.post("/api/maximal", json={"atoms": atoms, "k": 1, "x0": [1.0, 0.0],
                                                 "radii": [2.0, 1.0, 0.5]})
    assert response.status_code == 200
    assert response.json()["value"] == pytest.approx(1.0)


def test_grid_upload_and_profile(client):
    u = GridFunction.from_function(lambda x: np.sin(x[:, 0]) * np.cos(x[:, 1]), [-1, -1], [1, 1], 1 / 64)
    content = encode_grid(u)
    response = client.post("/api/grids", files={"file": ("smooth.grid", content, "application/octet-stream")})
    assert response.status_code == 200
    info = response.json()
    assert info["shape"] == [129, 129]
    assert info["metadata"]["filename"] == "smooth.grid"

    listed = client.get("/api/grids").json()
    assert info["grid_id"] in [g["grid_id"] for g in listed]

    response = client.post(f"/api/grids/{info['grid_id']}/profile",
                           json={"zoo": "gradient", "n": 2, "x0": [0.0, 0.0], "r": 0.5, "j_max": 2})
    assert response.status_code == 200
    profile = response.json()
    assert profile["levels"] == [0, 1, 2]
    assert profile["telescoping_slack"] <= 1 + 1e-6


def test_error_statuses(client):
    assert client.post("/api/grids", files={"file": ("bad.grid", b"garbage", "application/octet-stream")}).status_code == 400
    assert client.post("/api/grids/0123456789abcdef/profile",
                       json={"zoo": "gradient", "x0": [0.0, 0.0], "r": 0.5}).status_code == 404
    assert client.post("/api/grids/not-an-id/profile",
                       json={"zoo": "gradient", "x0": [0.0, 0.0], "r": 0.5}).status_code == 404
    assert client.post("/api/classify", json={"zoo": "zoo:nope"}).status_code == 400
    assert client.post("/api/classify", json={"n": 2}).status_code == 400
    assert client.post("/api/nullspace", json={"zoo": "hessian", "d_max": 2}).status_code == 422
    assert client.post("/api/riesz", json={"atoms": [{"x": [0.0, 0.0], "w": [1.0]}],
                                           "s": 0.0, "x0": [1.0, 0.0]}).status_code == 422
