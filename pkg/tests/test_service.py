import numpy as np
import pytest
from fastapi.testclient import TestClient

import bilinopt as bo
from bilinopt.schemas import ProblemFileModel
from bilinopt.service import app

client = TestClient(app)


@pytest.fixture
def weak_payload(weak_reactor):
    return ProblemFileModel.from_problem(weak_reactor).model_dump()


def test_health():
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert body["version"] == bo.__version__


def test_solve_endpoint(weak_payload):
    r = client.post(
        "/solve",
        json={"problem": weak_payload, "config": {"orders": 6, "grid_steps": 100}},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["diagnostics"]["stop_reason"] == "max-orders"
    assert body["diagnostics"]["orders_computed"] == 6
    assert len(body["trajectories"]["t"]) == 101
    assert len(body["trajectories"]["x"][0]) == 2
    assert len(body["trajectories"]["u"][0]) == 1
    # identical request, identical response
    r2 = client.post(
        "/solve",
        json={"problem": weak_payload, "config": {"orders": 6, "grid_steps": 100}},
    )
    assert r2.json() == body


def test_solve_coerces_odd_grid(weak_payload):
    r = client.post(
        "/solve",
        json={"problem": weak_payload, "config": {"orders": 2, "grid_steps": 51}},
    )
    assert r.status_code == 200
    assert r.json()["diagnostics"]["grid_steps"] == 52


def test_solve_semantic_error_names_key(weak_payload):
    bad = dict(weak_payload)
    bad["R"] = [[0.0]]
    r = client.post("/solve", json={"problem": bad})
    assert r.status_code in (400, 422)
    assert "R" in str(r.json()["detail"])


def test_solve_shape_error_rejected(weak_payload):
    bad = dict(weak_payload)
    bad["A"] = [[1.0]]
    r = client.post("/solve", json={"problem": bad})
    assert r.status_code == 422
    bad2 = dict(weak_payload)
    bad2["extra_key"] = 1
    r2 = client.post("/solve", json={"problem": bad2})
    assert r2.status_code == 422


def test_verify_endpoint_round_trip(weak_payload):
    solved = client.post(
        "/solve",
        json={"problem": weak_payload, "config": {"orders": 8, "grid_steps": 100}},
    ).json()
    r = client.post(
        "/verify",
        json={
            "problem": weak_payload,
            "trajectories": solved["trajectories"],
            "threshold": 1.0,
        },
    )
    assert r.status_code == 200
    body = r.json()
    assert body["ok"] is True
    assert body["comparison"] is None
    assert body["residual"]["overall_sup"] == pytest.approx(
        solved["diagnostics"]["residual"]["overall_sup"], rel=1e-12
    )
    tight = client.post(
        "/verify",
        json={
            "problem": weak_payload,
            "trajectories": solved["trajectories"],
            "threshold": 1e-12,
        },
    ).json()
    assert tight["ok"] is False


def test_verify_against_reference(weak_payload):
    solved = client.post(
        "/solve",
        json={"problem": weak_payload, "config": {"orders": 20, "grid_steps": 300}},
    ).json()
    r = client.post(
        "/verify",
        json={
            "problem": weak_payload,
            "trajectories": solved["trajectories"],
            "threshold": 1.0,
            "against_reference": True,
        },
    )
    assert r.status_code == 200
    comparison = r.json()["comparison"]
    assert comparison is not None
    assert comparison["defect_norm"] < 1e-9
    assert comparison["x_sup_diff"] < 1e-3


def test_verify_rejects_mismatched_table(weak_payload):
    r = client.post(
        "/verify",
        json={
            "problem": weak_payload,
            "trajectories": {
                "t": [0.0, 0.5, 1.0],
                "x": [[1.0, 0.0]] * 3,
                "lam": [[0.0, 0.0]] * 3,
                "u": [[0.0], [0.0]],
            },
        },
    )
    assert r.status_code == 400
    assert "equal length" in r.json()["detail"]


def test_reactor_demo_endpoint():
    r = client.post("/reactor-demo", json={})
    assert r.status_code == 200
    body = r.json()
    assert body["diagnostics"]["stop_reason"] == "divergence-detected"
    assert body["diagnostics"]["orders_computed"] == 3
    ratios = body["diagnostics"]["ratios"]
    assert len(ratios) == 3
    assert all(r > 1.0 for r in ratios)
