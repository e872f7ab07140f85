"""HTTP backend for the checkbox annotator UI.

Annotations are persisted twice: an append-only JSON-lines log (never
rewritten, so no crash can lose labels) and a derived current-state file
written atomically via temp file + rename. Writes are serialized per video.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
import threading
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, Response
from PIL import Image

from .dataio import Dataset, load_manifest
from .schema import CANONICAL_SCHEMA, SCHEMA_VERSION, check_severity, validate_annotation


class AnnotationStore:
    def __init__(self, data_dir: str | Path):
        self.dir = Path(data_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.dir / "annotations.jsonl"
        self.state_path = self.dir / "annotations.json"
        self._global_lock = threading.Lock()
        self._video_locks: dict[str, threading.Lock] = {}
        self.state: dict[str, dict[str, dict]] = {}  # video_id -> annotator -> record
        if self.state_path.exists():
            self.state = json.loads(self.state_path.read_text())
        elif self.log_path.exists():  # rebuild from the log after a crash
            for line in self.log_path.read_text().splitlines():
                rec = json.loads(line)
                self.state.setdefault(rec["video_id"], {})[rec["annotator"]] = rec

    def _lock_for(self, video_id: str) -> threading.Lock:
        with self._global_lock:
            return self._video_locks.setdefault(video_id, threading.Lock())

    def submit(self, video_id: str, record: dict):
        with self._lock_for(video_id):
            with open(self.log_path, "a") as f:
                f.write(json.dumps(record) + "\n")
                f.flush()
                os.fsync(f.fileno())
            with self._global_lock:
                self.state.setdefault(video_id, {})[record["annotator"]] = record
                snapshot = json.dumps(self.state, indent=1)
            fd, tmp = tempfile.mkstemp(dir=self.dir, suffix=".tmp")
            with os.fdopen(fd, "w") as f:
                f.write(snapshot)
            os.replace(tmp, self.state_path)

    def records_for(self, video_id: str) -> dict[str, dict]:
        return self.state.get(video_id, {})


def create_app(manifest_path: str | Path, data_dir: str | Path,
               static_dir: str | Path | None = None) -> FastAPI:
    dataset = load_manifest(manifest_path)
    by_id = {r.video_id: r for r in dataset.records}
    store = AnnotationStore(data_dir)
    app = FastAPI(title="lusbio annotator")

    def versioned(payload: dict) -> dict:
        return {"schema_version": SCHEMA_VERSION, **payload}

    @app.get("/api/schema")
    def get_schema():
        return CANONICAL_SCHEMA.to_document()

    @app.get("/api/videos")
    def list_videos():
        videos = []
        for r in dataset.records:
            annos = store.records_for(r.video_id)
            videos.append({
                "video_id": r.video_id,
                "patient_id": r.patient_id,
                "n_frames": int(r.frames.shape[0]),
                "annotated": bool(annos),
                "annotators": sorted(annos),
            })
        return versioned({"videos": videos})

    @app.get("/api/videos/{video_id}/frames")
    def get_frame(video_id: str, i: int = 0):
        rec = by_id.get(video_id)
        if rec is None:
            raise HTTPException(404, f"unknown video {video_id}")
        if not (0 <= i < rec.frames.shape[0]):
            raise HTTPException(404, f"frame {i} out of range 0..{rec.frames.shape[0] - 1}")
        img = Image.fromarray((np.clip(rec.frames[i], 0, 1) * 255).astype(np.uint8), "L")
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.get("/api/videos/{video_id}/annotation")
    def get_annotation(video_id: str):
        if video_id not in by_id:
            raise HTTPException(404, f"unknown video {video_id}")
        records = store.records_for(video_id)
        if not records:
            raise HTTPException(404, f"no annotation for {video_id}")
        latest = max(records.values(), key=lambda r: r["timestamp"])
        return versioned({"annotation": latest, "all": sorted(records.values(),
                                                              key=lambda r: r["timestamp"])})

    @app.post("/api/videos/{video_id}/annotation")
    def post_annotation(video_id: str, payload: dict):
        if video_id not in by_id:
            raise HTTPException(404, f"unknown video {video_id}")
        bio = payload.get("biomarkers")
        if bio is None:
            raise HTTPException(422, "missing field 'biomarkers'")
        result = validate_annotation(bio)
        if not result.ok:
            raise HTTPException(422, detail={
                "errors": [{"index": i.index, "reason": i.reason} for i in result.issues]})
        try:
            severity = check_severity(payload.get("severity"))
        except Exception:
            raise HTTPException(422, f"invalid severity {payload.get('severity')!r}")
        annotator = payload.get("annotator") or "anonymous"
        record = {
            "video_id": video_id,
            "biomarkers": [int(v) for v in bio],
            "severity": severity,
            "annotator": str(annotator),
            "timestamp": payload.get("timestamp")
                         or datetime.now(timezone.utc).isoformat(),
        }
        store.submit(video_id, record)
        return versioned({"annotation": record})

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def serve_annotations(port: int, manifest_path: str | Path, data_dir: str | Path,
                      static_dir: str | Path | None = None):
    """Run the annotation service until interrupted."""
    import uvicorn
    app = create_app(manifest_path, data_dir, static_dir)
    uvicorn.run(app, host="127.0.0.1", port=port)
