import numpy as np
import pytest
from fastapi.testclient import TestClient

from app.main import app


@pytest.fixture
def client():
    return TestClient(app)


def _two_cosines(rng, M=300):
    nodes = rng.random((M, 2))
    values = 2.0 * np.cos(2 * np.pi * nodes[:, 0]) + np.cos(2 * np.pi * nodes[:, 1])
    return nodes.tolist(), values.tolist()


def test_root(client):
    response = client.get("/")
    assert response.status_code == 200
    assert response.json() == {"message": "Grouped ANOVA approximation up"}


class TestIndexSetRoute:

    def test_small_preset(self, client):
        response = client.post("/anova/index-set", json={"d": 9, "superposition": 3, "bandwidths": [26, 6, 4]})
        assert response.status_code == 200
        body = response.json()
        assert body["total"] == 3394
        assert len(body["terms"]) == 130
        assert body["terms"][0] == {"id": "const", "order": 0, "bandwidth": 1, "size": 1}

    def test_odd_bandwidth(self, client):
        response = client.post("/anova/index-set", json={"d": 3, "superposition": 1, "bandwidths": [5]})
        assert response.status_code == 400

    def test_validation(self, client):
        response = client.post("/anova/index-set", json={"d": 0, "superposition": 1, "bandwidths": [4]})
        assert response.status_code == 422


class TestFitRoute:

    def test_fit_with_refit(self, client, rng):
        nodes, values = _two_cosines(rng)
        response = client.post("/anova/fit", json={
            "nodes": nodes, "values": values, "superposition": 1, "bandwidths": [4],
            "lambda": 0.01, "active_thresholds": [0.01],
        })
        assert response.status_code == 200
        body = response.json()
        assert body["active_set"] == ["const", "1", "2"]
        assert body["fit"]["gsi"]["1"] == pytest.approx(0.8, abs=1e-2)
        assert body["refit"] is not None
        assert body["network"].startswith("digraph")

    def test_fista(self, client, rng):
        nodes, values = _two_cosines(rng)
        response = client.post("/anova/fit", json={
            "nodes": nodes, "values": values, "superposition": 2, "bandwidths": [4, 4],
            "solver": "fista", "lambda": 1.0, "prox_exempt_mean": True,
        })
        assert response.status_code == 200
        assert response.json()["active_set"] is None

    def test_shape_mismatch(self, client):
        response = client.post("/anova/fit", json={
            "nodes": [[0.1, 0.2], [0.3, 0.4]], "values": [1.0], "superposition": 1, "bandwidths": [4],
        })
        assert response.status_code == 400

    def test_bad_threshold(self, client, rng):
        nodes, values = _two_cosines(rng, 20)
        response = client.post("/anova/fit", json={
            "nodes": nodes, "values": values, "superposition": 1, "bandwidths": [4],
            "active_thresholds": [1.5],
        })
        assert response.status_code == 400
