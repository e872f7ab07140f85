"""Exercise the annotation API end to end without starting a real server.

Generates a few videos, mounts the FastAPI app on an in-process test
client, fetches the biomarker schema, submits an annotation, and reads it
back. To run the same thing as a network service for the browser UI:

    lusbio synth-gen --patients 8 --out data
    lusbio serve-annotator --manifest data/manifest.json --data-dir annotations
"""

import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from lusbio.dataio import save_manifest
from lusbio.server import create_app
from lusbio.synth import SynthParams, generate_synthetic


def main():
    work = Path(tempfile.mkdtemp(prefix="annotator_demo_"))
    ds = generate_synthetic(SynthParams(n_patients=4, videos_per_patient=2, seed=0))
    manifest = save_manifest(ds, work / "data")
    client = TestClient(create_app(manifest, work / "annotations"))

    schema = client.get("/api/schema").json()
    print(f"schema v{schema['schema_version']}: "
          f"{schema['total_features']} features in {len(schema['categories'])} categories")
    for cat in schema["categories"][:3]:
        print(f"  {cat['name']}: {cat['cardinality']} checkboxes")
    print("  ...")

    vid = client.get("/api/videos").json()["videos"][0]["video_id"]
    payload = {
        "biomarkers": [1, 0] * 19,
        "severity": 2,
        "annotator": "demo",
    }
    client.post(f"/api/videos/{vid}/annotation", json=payload)
    back = client.get(f"/api/videos/{vid}/annotation").json()["annotation"]
    print(f"\nannotated {vid}: severity {back['severity']} by {back['annotator']}")
    print(f"round trip intact: {back['biomarkers'] == payload['biomarkers']}")
    print(f"artifacts under {work}")


if __name__ == "__main__":
    main()
