import pytest
from fastapi.testclient import TestClient

from app.main import app


@pytest.fixture
def client():
    return TestClient(app)


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "healthy"}


def test_root(client):
    body = client.get("/").json()
    assert body["docs"] == "/docs"
    assert "version" in body


class TestRuns:

    def test_run_returns_report(self, client):
        config = "experiment = sharpness\nsharpness.widths = 0.5, 1.0\nsharpness.resolution = 64\n"
        response = client.post("/api/v1/runs", json={"config": config})
        assert response.status_code == 200
        body = response.json()
        assert body["experiment"] == "sharpness"
        assert body["table"]["columns"] == ["w", "h1p"]
        assert len(body["table"]["rows"]) == 2

    def test_invalid_config_lists_every_error(self, client):
        response = client.post("/api/v1/runs", json={"config": "experiment = norm\nsobolev.k = 2\nfoo = 1\n"})
        assert response.status_code == 422
        detail = response.json()["detail"]
        assert any("unsupported order k=2" in message for message in detail)
        assert "line 3: unknown key foo" in detail

    def test_numerical_failure(self, client):
        config = "experiment = norm\nmetric.kind = funk\ndomain.kind = box\nquad.base_resolution = 16\nquad.fiber_nodes = 8\n"
        response = client.post("/api/v1/runs", json={"config": config})
        assert response.status_code == 400
        assert response.json()["detail"].startswith("MetricDomainError")

    def test_closed_form_tier_rejected(self, client):
        config = "experiment = density\nmetric.kind = conformal\ndistance.tier = closed_form\n"
        response = client.post("/api/v1/runs", json={"config": config})
        assert response.status_code == 422
        assert any("closed_form is unavailable" in message for message in response.json()["detail"])

    def test_empty_config(self, client):
        assert client.post("/api/v1/runs", json={"config": ""}).status_code == 422


class TestMetrics:

    def test_check_randers(self, client):
        response = client.post("/api/v1/metrics/check", json={"metric": {"kind": "randers", "b": [0.5, 0.0]}})
        assert response.status_code == 200
        report = response.json()
        assert report["valid"] is True
        assert report["samples"] == 100
        assert report["min_F"] > 0.0

    def test_check_needs_enough_samples(self, client):
        response = client.post("/api/v1/metrics/check", json={"metric": {"kind": "euclidean"}, "samples": 10})
        assert response.status_code == 422

    @pytest.mark.parametrize("x2, expected", [([1.0, 0.0], 1.5), ([-1.0, 0.0], 0.5)])
    def test_randers_distance(self, client, x2, expected):
        body = {"metric": {"kind": "randers", "b": [0.5, 0.0]}, "x1": [0.0, 0.0], "x2": x2}
        response = client.post("/api/v1/metrics/distance", json=body)
        assert response.status_code == 200
        assert response.json()["distance"] == pytest.approx(expected)
        assert response.json()["provider"] == "closed_form"

    def test_point_dimension_mismatch(self, client):
        body = {"metric": {"kind": "euclidean"}, "x1": [0.0], "x2": [1.0, 0.0]}
        assert client.post("/api/v1/metrics/distance", json=body).status_code == 422
