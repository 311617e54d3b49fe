"""HTTP surface: request/response schemas, error mapping, determinism."""

import base64

import pytest
from fastapi.testclient import TestClient

from peo.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def optimize_payload(**overrides):
    payload = {"prompt": "a cat", "backbone": "toy", "seed": 0}
    payload.update(overrides)
    return payload


class TestHealthAndDiscovery:
    def test_health(self, client):
        body = client.get("/v1/health").json()
        assert body["status"] == "ok"

    def test_backbones(self, client):
        body = client.get("/v1/backbones").json()
        names = {b["name"] for b in body["backbones"]}
        assert {"toy", "toy2"} <= names
        toy = next(b for b in body["backbones"] if b["name"] == "toy")
        assert toy["encoder_count"] == 1
        assert toy["default_settings"]["sampler_name"] == "toy-logistic"

    def test_capability_check(self, client):
        body = client.post("/v1/capability-check", json={"backbone": "toy"}).json()
        assert body["all_passed"]
        assert body["checks"]["differentiable"]["passed"]

    def test_capability_unknown_backbone(self, client):
        resp = client.post("/v1/capability-check", json={"backbone": "nope"})
        assert resp.status_code == 422


class TestOptimizeEndpoint:
    def test_full_response(self, client):
        resp = client.post("/v1/optimize", json=optimize_payload())
        assert resp.status_code == 200
        body = resp.json()
        assert body["best_total"] >= body["initial_total"]
        assert body["failure_mode"] in {"ok", "diverged", "ceiling"}
        assert len(body["trace"]["records"]) <= 11
        png = base64.b64decode(body["after_png_b64"])
        assert png[:8] == b"\x89PNG\r\n\x1a\n"
        assert body["before_provenance"]["backbone_id"] == "toy"

    def test_deterministic_across_calls(self, client):
        a = client.post("/v1/optimize", json=optimize_payload()).json()
        b = client.post("/v1/optimize", json=optimize_payload()).json()
        assert a == b

    def test_zero_steps_returns_identical_images(self, client):
        payload = optimize_payload(optimizer={"max_steps": 0})
        body = client.post("/v1/optimize", json=payload).json()
        assert body["before_png_b64"] == body["after_png_b64"]
        assert body["best_step"] == 0

    def test_unknown_backbone_rejected(self, client):
        resp = client.post("/v1/optimize", json=optimize_payload(backbone="nope"))
        assert resp.status_code == 422
        assert "unknown backbone" in resp.json()["detail"]

    def test_empty_prompt_rejected(self, client):
        resp = client.post("/v1/optimize", json=optimize_payload(prompt=""))
        assert resp.status_code == 422

    def test_negative_weight_rejected(self, client):
        resp = client.post(
            "/v1/optimize", json=optimize_payload(weights={"w1": -1.0, "w2": 0.5, "w3": 0.5})
        )
        assert resp.status_code == 400
        assert "w1" in resp.json()["detail"]

    def test_preset_resolution(self, client):
        # the turbo preset renders 512x512, which the toy canvas rejects
        resp = client.post("/v1/optimize", json=optimize_payload(preset="turbo"))
        assert resp.status_code == 400

    def test_unknown_preset_rejected(self, client):
        resp = client.post("/v1/optimize", json=optimize_payload(preset="nope"))
        assert resp.status_code == 422


class TestExperimentsEndpoint:
    def test_benchmark(self, client):
        payload = {
            "kind": "benchmark",
            "prompts": ["a cat", "a dog", "a boat"],
            "backbone": "toy",
            "optimizer": {"max_steps": 2},
            "seed": 0,
        }
        resp = client.post("/v1/experiments", json=payload)
        assert resp.status_code == 200
        body = resp.json()
        assert [v["label"] for v in body["variants"]] == ["baseline", "peo"]
        assert not body["partial_failure"]
        assert "baseline" in body["comparison_md"]
        assert len(body["artifacts"]["peo"]) == 3
        trace = body["artifacts"]["peo"][0]["trace"]
        assert trace["termination_reason"] in {"max_steps", "no_increase", "diverged"}

    def test_unknown_kind_rejected(self, client):
        payload = {"kind": "nope", "prompts": ["a cat"], "backbone": "toy"}
        resp = client.post("/v1/experiments", json=payload)
        assert resp.status_code == 422
        assert "experiment kind" in resp.json()["detail"]

    def test_empty_prompt_list_rejected(self, client):
        payload = {"kind": "benchmark", "prompts": [], "backbone": "toy"}
        assert client.post("/v1/experiments", json=payload).status_code == 422

    def test_ablation_variant_labels(self, client):
        payload = {
            "kind": "ablation",
            "prompts": ["a cat"],
            "backbone": "toy",
            "optimizer": {"max_steps": 1},
        }
        body = client.post("/v1/experiments", json=payload).json()
        assert [v["label"] for v in body["variants"]] == ["L1", "L1+L2", "L1+PPT", "L1+L2+PPT"]
