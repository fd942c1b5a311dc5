"""
Tests for the HTTP service (backend/main.py).

Run with: pytest test_backend_api.py -v
"""

import os
import sys

import pytest
from fastapi.testclient import TestClient

# Add script directory to path
SCRIPT_DIR = os.path.dirname(os.path.abspath(__file__))
if SCRIPT_DIR not in sys.path:
    sys.path.insert(0, SCRIPT_DIR)

from backend.main import app
from func_core import dictator, majority, parity_table


@pytest.fixture
def client():
    return TestClient(app)


def test_health_reports_caps(client, monkeypatch):
    monkeypatch.setenv("CHOWLAB_LP_CAP", "7")
    response = client.get("/api/health")
    assert response.status_code == 200
    assert response.json()["lp_cap"] == 7
    assert client.get("/").json()["status"] == "running"


def test_chow_exact(client):
    response = client.post("/api/chow", json={"target": majority(3).to_dict()})
    assert response.status_code == 200
    assert response.json()["chow"]["values"] == [0.0, 0.5, 0.5, 0.5]


def test_chow_unknown_mode_is_400(client):
    response = client.post("/api/chow", json={"target": majority(3).to_dict(), "mode": "guess"})
    assert response.status_code == 400
    assert response.json()["error"] == "ParameterError"


def test_reconstruct_dictator(client):
    response = client.post("/api/reconstruct", json={"alpha": {"n": 1, "values": [0.0, 1.0]}, "eps": 0.1})
    assert response.status_code == 200
    body = response.json()
    assert body["lbf"]["v"] == [0, 42]
    assert body["trace"]["iterations"] == 2
    assert abs(body["dchow_final"] - 0.257538) < 1e-6


def test_reconstruct_cap_is_422(client):
    response = client.post("/api/reconstruct",
                           json={"alpha": {"n": 1, "values": [0.0, 1.0]}, "eps": 0.1, "max_iters": 1})
    assert response.status_code == 422
    body = response.json()
    assert body["error"] == "IterationCapError"
    assert body["lbf"]["v"] == [0, 28]
    assert body["trace"]["stop_reason"] == "cap"
    assert body["trace"]["iterations"] == 1


def test_approx_majority(client):
    response = client.post("/api/approx", json={"target": majority(5).to_dict(), "eps": 0.1})
    assert response.status_code == 200
    body = response.json()
    assert body["report"]["metrics"]["dchow_final"] <= 0.6
    assert body["ltf"]["n"] == 5


def test_exact_and_weights(client):
    table = client.post("/api/exact", json={"alpha": {"n": 2, "values": [-0.5, 0.5, 0.5]}}).json()["table"]
    assert table["values"] == [-1.0, -1.0, -1.0, 1.0]
    response = client.post("/api/weights", json={"table": table, "margin": 2.0})
    assert response.status_code == 200
    assert len(response.json()["ltf"]["weights"]) == 2


def test_weights_for_parity_is_422(client):
    response = client.post("/api/weights", json={"table": parity_table(3).to_dict()})
    assert response.status_code == 422
    assert response.json()["error"] == "InfeasibleError"


def test_bad_function_json_is_400(client):
    response = client.post("/api/chow", json={"target": {"n": 2, "weights": [1.0]}})
    assert response.status_code == 400
    assert response.json()["error"] == "SchemaError"


def test_request_validation(client):
    extra = client.post("/api/exact", json={"alpha": dictator(1).to_dict(), "verbose": True})
    assert extra.status_code == 422
    assert "error" not in extra.json()
    margin = client.post("/api/weights", json={"table": {"n": 1, "values": [-1.0, 1.0]}, "margin": 0})
    assert margin.status_code == 422


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
