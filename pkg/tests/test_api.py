import pytest
from fastapi.testclient import TestClient

from app.main import app


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as test_client:
        yield test_client


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "healthy"
    assert body["cells"] >= 4
    assert body["sweep_workers"] >= 1


def test_steady(client):
    response = client.post("/steady", json={"params": {"chi": 20, "m": 0.25}, "cells": 100})
    assert response.status_code == 200
    body = response.json()
    assert body["report"]["lambda"] > 0
    assert body["report"]["mass_residual"] <= 1e-8
    assert len(body["profile"]["x"]) == len(body["profile"]["U"]) == 100


def test_steady_without_mass_is_rejected(client):
    response = client.post("/steady", json={"params": {"chi": 20}})
    assert response.status_code == 400
    assert response.json()["error"] == "InputDomainError"


@pytest.mark.parametrize(
    "body",
    [
        {"params": {"chi": 20, "m": 1.5}},
        {"params": {"chi": -1, "m": 0.25}},
        {"params": {"chi": 20, "m": 0.25}, "cells": 2},
        {"cells": 100},
    ],
)
def test_invalid_bodies(client, body):
    response = client.post("/steady", json=body)
    assert response.status_code == 400
    assert response.json()["details"]["errors"]


def test_limit(client):
    response = client.post("/limit", json={"params": {"chi": 20, "m": 0.25}, "cells": 40})
    assert response.status_code == 200
    body = response.json()
    assert len(body["x"]) == 41
    assert body["U"][0] == 0.0 and body["U"][-1] == 1.0
    assert body["V"][-1] == pytest.approx(1.0, abs=1e-12)


def test_sweep(client):
    response = client.post(
        "/sweep", json={"params": {"chi": 20, "m": 0.25}, "cells": 100, "chis": [20, 40]}
    )
    assert response.status_code == 200
    body = response.json()
    assert body["count"] == 2
    assert [row["chi"] for row in body["rows"]] == [20.0, 40.0]
    assert all(row["lambda"] > 0 for row in body["rows"])


def test_sweep_rejects_unsorted_chis(client):
    response = client.post(
        "/sweep", json={"params": {"chi": 20, "m": 0.25}, "chis": [40, 20]}
    )
    assert response.status_code == 400
