import json

import pytest
from fastapi.testclient import TestClient

from lusbio.dataio import save_manifest
from lusbio.server import create_app
from lusbio.synth import SynthParams, generate_synthetic

PAYLOAD = {
    "biomarkers": [1, 0] * 19,
    "severity": 2,
    "annotator": "trainee",
    "timestamp": "2026-01-01T00:00:00+00:00",
}


@pytest.fixture()
def client(tmp_path):
    ds = generate_synthetic(SynthParams(n_patients=4, videos_per_patient=2, seed=0,
                                        frame_side=16, t_raw=15))
    manifest = save_manifest(ds, tmp_path / "data")
    app = create_app(manifest, tmp_path / "annotations")
    with TestClient(app) as c:
        c.tmp_path = tmp_path
        yield c


class TestSchemaEndpoint:
    def test_canonical_document(self, client):
        doc = client.get("/api/schema").json()
        assert doc["schema_version"] == "1.0"
        assert doc["total_features"] == 38
        assert len(doc["categories"]) == 9
        assert [c["cardinality"] for c in doc["categories"]] == [5, 5, 3, 4, 3, 5, 5, 5, 3]


class TestVideosEndpoint:
    def test_listing(self, client):
        body = client.get("/api/videos").json()
        assert body["schema_version"] == "1.0"
        assert len(body["videos"]) == 8
        v = body["videos"][0]
        assert set(v) == {"video_id", "patient_id", "n_frames", "annotated", "annotators"}
        assert not v["annotated"]

    def test_frame_png(self, client):
        vid = client.get("/api/videos").json()["videos"][0]["video_id"]
        resp = client.get(f"/api/videos/{vid}/frames", params={"i": 3})
        assert resp.status_code == 200
        assert resp.headers["content-type"] == "image/png"
        assert resp.content[:8] == b"\x89PNG\r\n\x1a\n"

    def test_frame_out_of_range(self, client):
        vid = client.get("/api/videos").json()["videos"][0]["video_id"]
        assert client.get(f"/api/videos/{vid}/frames", params={"i": 99}).status_code == 404

    def test_unknown_video(self, client):
        assert client.get("/api/videos/nope/frames").status_code == 404


class TestAnnotationRoundTrip:
    def test_post_then_get_identical(self, client):
        vid = client.get("/api/videos").json()["videos"][0]["video_id"]
        posted = client.post(f"/api/videos/{vid}/annotation", json=PAYLOAD)
        assert posted.status_code == 200
        got = client.get(f"/api/videos/{vid}/annotation").json()
        assert got["annotation"]["biomarkers"] == PAYLOAD["biomarkers"]
        assert got["annotation"]["severity"] == PAYLOAD["severity"]
        assert got["annotation"]["annotator"] == "trainee"

    def test_status_flips_to_annotated(self, client):
        vid = client.get("/api/videos").json()["videos"][0]["video_id"]
        client.post(f"/api/videos/{vid}/annotation", json=PAYLOAD)
        v = [x for x in client.get("/api/videos").json()["videos"]
             if x["video_id"] == vid][0]
        assert v["annotated"]
        assert v["annotators"] == ["trainee"]

    def test_length_37_rejected_with_detail(self, client):
        vid = client.get("/api/videos").json()["videos"][0]["video_id"]
        bad = {**PAYLOAD, "biomarkers": [0] * 37}
        resp = client.post(f"/api/videos/{vid}/annotation", json=bad)
        assert resp.status_code == 422
        assert "length" in json.dumps(resp.json())

    def test_non_binary_rejected_with_index(self, client):
        vid = client.get("/api/videos").json()["videos"][0]["video_id"]
        vec = [0] * 38
        vec[5] = 0.5
        resp = client.post(f"/api/videos/{vid}/annotation", json={**PAYLOAD, "biomarkers": vec})
        assert resp.status_code == 422
        assert "5" in json.dumps(resp.json()["detail"])

    def test_invalid_severity_rejected(self, client):
        vid = client.get("/api/videos").json()["videos"][0]["video_id"]
        resp = client.post(f"/api/videos/{vid}/annotation", json={**PAYLOAD, "severity": 7})
        assert resp.status_code == 422

    def test_overwrite_keeps_log_of_both(self, client):
        vid = client.get("/api/videos").json()["videos"][0]["video_id"]
        client.post(f"/api/videos/{vid}/annotation", json=PAYLOAD)
        second = {**PAYLOAD, "biomarkers": [0] * 38,
                  "timestamp": "2026-01-02T00:00:00+00:00"}
        client.post(f"/api/videos/{vid}/annotation", json=second)
        got = client.get(f"/api/videos/{vid}/annotation").json()
        assert got["annotation"]["biomarkers"] == [0] * 38
        log = (client.tmp_path / "annotations" / "annotations.jsonl").read_text()
        assert len(log.strip().split("\n")) == 2

    def test_two_annotators_both_kept(self, client):
        vid = client.get("/api/videos").json()["videos"][0]["video_id"]
        client.post(f"/api/videos/{vid}/annotation", json=PAYLOAD)
        client.post(f"/api/videos/{vid}/annotation",
                    json={**PAYLOAD, "annotator": "specialist",
                          "timestamp": "2026-01-03T00:00:00+00:00"})
        got = client.get(f"/api/videos/{vid}/annotation").json()
        assert len(got["all"]) == 2
        assert {r["annotator"] for r in got["all"]} == {"trainee", "specialist"}

    def test_state_survives_restart_from_log(self, client):
        vid = client.get("/api/videos").json()["videos"][0]["video_id"]
        client.post(f"/api/videos/{vid}/annotation", json=PAYLOAD)
        # simulate a crash that lost the current-state file
        (client.tmp_path / "annotations" / "annotations.json").unlink()
        from lusbio.server import AnnotationStore
        store = AnnotationStore(client.tmp_path / "annotations")
        assert store.records_for(vid)["trainee"]["severity"] == 2
