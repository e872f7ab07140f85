"""Dataset ingestion, patient-level splitting, oversampling, clip sampling,
and clip augmentation.

All randomness flows through explicitly passed numpy Generators; equal seeds
give bitwise-equal results.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .schema import (
    CANONICAL_SCHEMA,
    BiomarkerSchema,
    InvalidInputError,
    SCHEMA_VERSION,
    bin_sf_ratio,
    check_biomarker_vector,
    check_disease,
    check_severity,
    check_sf_bin,
    validate_annotation,
)

FRAMES_MAGIC = b"LUSF"
FRAMES_VERSION = 1


def rng_for(seed: int, *tags) -> np.random.Generator:
    """Independent RNG stream keyed by a base seed plus string/int tags."""
    h = hashlib.sha256(repr((int(seed),) + tuple(tags)).encode()).digest()
    return np.random.default_rng(int.from_bytes(h[:8], "little"))


@dataclass(frozen=True)
class VideoRecord:
    """One grayscale ultrasound video with its (possibly partial) labels."""

    video_id: str
    patient_id: str
    frames: np.ndarray  # T_raw x H x W, float64 in [0,1]
    biomarkers: np.ndarray | None = None  # length-38 vector
    severity: int | None = None
    sf_bin: int | None = None
    disease: int | None = None

    def label(self, task: str):
        value = {"severity": self.severity, "sf_ratio": self.sf_bin,
                 "disease": self.disease}[task]
        return value


@dataclass(frozen=True)
class Dataset:
    records: tuple[VideoRecord, ...]
    schema: BiomarkerSchema = CANONICAL_SCHEMA

    def __post_init__(self):
        seen = set()
        for r in self.records:
            if r.video_id in seen:
                raise InvalidInputError(f"duplicate video_id {r.video_id!r}")
            seen.add(r.video_id)

    def patient_ids(self) -> list[str]:
        out = []
        for r in self.records:
            if r.patient_id not in out:
                out.append(r.patient_id)
        return out

    def by_patients(self, patients) -> list[VideoRecord]:
        patients = set(patients)
        return [r for r in self.records if r.patient_id in patients]


@dataclass(frozen=True)
class FoldAssignment:
    folds: tuple[tuple[str, ...], ...]  # 4 patient-id lists


def patient_split(dataset: Dataset, seed: int, n_folds: int = 4) -> FoldAssignment:
    """Randomly split patients into n_folds near-equal, disjoint folds."""
    patients = sorted(dataset.patient_ids())
    if len(patients) < n_folds:
        raise InvalidInputError(f"need >= {n_folds} patients, got {len(patients)}")
    rng = rng_for(seed, "patient_split")
    order = rng.permutation(len(patients))
    shuffled = [patients[i] for i in order]
    folds = tuple(tuple(chunk) for chunk in np.array_split(np.array(shuffled, dtype=object), n_folds))
    return FoldAssignment(folds=tuple(tuple(str(p) for p in f) for f in folds))


def oversample(records, label_kind: str, seed: int):
    """Duplicate minority-class records (by reference) until every class
    matches the majority-class count."""
    records = list(records)
    if not records:
        raise InvalidInputError("oversample on empty record list")
    by_class: dict[int, list[VideoRecord]] = {}
    for r in records:
        y = r.label(label_kind)
        if y is None:
            raise InvalidInputError(f"record {r.video_id} has no {label_kind} label")
        by_class.setdefault(y, []).append(r)
    target = max(len(v) for v in by_class.values())
    rng = rng_for(seed, "oversample", label_kind)
    out = list(records)
    for cls in sorted(by_class):
        members = by_class[cls]
        n_add = target - len(members)
        if n_add:
            picks = rng.integers(0, len(members), size=n_add)
            out.extend(members[i] for i in picks)
    return out


def sample_clip_indices(t_raw: int, frames_per_clip: int, rng: np.random.Generator) -> np.ndarray:
    """Equally spaced frame indices with one random start offset.

    Segment length L = floor(t_raw / frames_per_clip); the offset is drawn
    uniformly from [0, L); tail frames beyond frames_per_clip*L are unused.
    """
    if t_raw < frames_per_clip:
        raise InvalidInputError(f"video has {t_raw} frames, need >= {frames_per_clip}")
    seg = t_raw // frames_per_clip
    offset = int(rng.integers(0, seg))
    return offset + seg * np.arange(frames_per_clip)


def sample_clip(frames: np.ndarray, frames_per_clip: int, rng: np.random.Generator) -> np.ndarray:
    return frames[sample_clip_indices(frames.shape[0], frames_per_clip, rng)]


def hflip(clip: np.ndarray) -> np.ndarray:
    return clip[:, :, ::-1].copy()


def scale_intensity(clip: np.ndarray, factor: float) -> np.ndarray:
    return np.clip(clip * factor, 0.0, 1.0)


def affine_clip(clip: np.ndarray, scale: float, angle_deg: float,
                shift_frac: tuple[float, float]) -> np.ndarray:
    """Apply one scale/rotate/translate transform to every frame.

    Bilinear resampling, zero fill outside the frame (matches the black
    border of an ultrasound B-scan).
    """
    side = clip.shape[1]
    center = (side - 1) / 2.0
    theta = np.deg2rad(angle_deg)
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    # output->input mapping for ndimage: inverse of (scale then rotate)
    matrix = np.linalg.inv(rot * scale)
    shift_px = np.array(shift_frac) * side
    offset = np.array([center, center]) - matrix @ (np.array([center, center]) + shift_px)
    out = np.empty_like(clip)
    for t in range(clip.shape[0]):
        out[t] = ndimage.affine_transform(
            clip[t], matrix, offset=offset, order=1, mode="constant", cval=0.0
        )
    return np.clip(out, 0.0, 1.0)


def augment(clip: np.ndarray, rng: np.random.Generator, enabled: bool = True) -> np.ndarray:
    """Randomly flip/scale/rotate/translate a clip; one draw per transform,
    shared by all frames.
    """
    if not enabled:
        return clip
    flip = rng.random() < 0.5
    intensity = rng.uniform(0.8, 1.1)
    spatial_scale = rng.uniform(0.8, 1.2)
    angle = rng.uniform(-15.0, 15.0)
    shift = (rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05))
    out = hflip(clip) if flip else clip
    out = scale_intensity(out, intensity)
    out = affine_clip(out, spatial_scale, angle, shift)
    return out


# ---------------------------------------------------------------------------
# Frame files and manifests
# ---------------------------------------------------------------------------

def write_frames(path: str | Path, frames: np.ndarray):
    """Binary frame stack: header (magic "LUSF", then version, T, H, W as
    little-endian uint32) followed by little-endian float32 pixels."""
    frames = np.asarray(frames)
    if frames.ndim != 3:
        raise InvalidInputError(f"frames must be T x H x W, got shape {frames.shape}")
    t, h, w = frames.shape
    with open(path, "wb") as f:
        f.write(FRAMES_MAGIC)
        f.write(struct.pack("<IIII", FRAMES_VERSION, t, h, w))
        f.write(frames.astype("<f4").tobytes())


def read_frames(path: str | Path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != FRAMES_MAGIC:
            raise InvalidInputError(f"{path}: not a LUSF frame file")
        version, t, h, w = struct.unpack("<IIII", f.read(16))
        data = np.frombuffer(f.read(), dtype="<f4")
    if version != FRAMES_VERSION:
        raise InvalidInputError(f"{path}: unsupported LUSF version {version}")
    if data.size != t * h * w:
        raise InvalidInputError(f"{path}: payload size mismatch")
    return data.reshape(t, h, w).astype(np.float64)


def save_manifest(dataset: Dataset, out_dir: str | Path) -> Path:
    """Write a manifest.json plus one LUSF frame file per record."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    frames_dir = out_dir / "frames"
    frames_dir.mkdir(exist_ok=True)
    records = []
    for r in dataset.records:
        frames_path = frames_dir / f"{r.video_id}.lusf"
        write_frames(frames_path, r.frames)
        labels = {}
        if r.biomarkers is not None:
            labels["biomarkers"] = [int(v) for v in r.biomarkers]
        if r.severity is not None:
            labels["severity"] = int(r.severity)
        if r.sf_bin is not None:
            labels["sf_bin"] = int(r.sf_bin)
        if r.disease is not None:
            labels["disease"] = int(r.disease)
        records.append({
            "video_id": r.video_id,
            "patient_id": r.patient_id,
            "frames_path": str(frames_path.relative_to(out_dir)),
            "labels": labels,
        })
    manifest = {"schema_version": SCHEMA_VERSION, "records": records}
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1))
    return path


def load_manifest(path: str | Path, schema: BiomarkerSchema = CANONICAL_SCHEMA) -> Dataset:
    """Load and validate a manifest; failures name the offending record."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"{path}: manifest parse error: {e}") from e
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise InvalidInputError(
            f"{path}: schema_version {doc.get('schema_version')!r} != {SCHEMA_VERSION!r}")
    base = path.parent
    records = []
    for rec in doc.get("records", []):
        vid = rec.get("video_id", "<missing id>")
        try:
            frames = read_frames(base / rec["frames_path"])
            labels = rec.get("labels", {})
            bio = labels.get("biomarkers")
            if bio is not None:
                result = validate_annotation(bio, schema)
                if not result.ok:
                    raise InvalidInputError(
                        "; ".join(i.reason for i in result.issues))
                bio = np.asarray(check_biomarker_vector(bio, schema), dtype=np.float64)
            sf_bin = labels.get("sf_bin")
            if sf_bin is None and "sf_ratio_raw" in labels:
                sf_bin = bin_sf_ratio(labels["sf_ratio_raw"])
            records.append(VideoRecord(
                video_id=rec["video_id"],
                patient_id=rec["patient_id"],
                frames=frames,
                biomarkers=bio,
                severity=None if labels.get("severity") is None else check_severity(labels["severity"]),
                sf_bin=None if sf_bin is None else check_sf_bin(sf_bin),
                disease=None if labels.get("disease") is None else check_disease(labels["disease"]),
            ))
        except (KeyError, InvalidInputError) as e:
            raise InvalidInputError(f"{path}: record {vid}: {e}") from e
    return Dataset(records=tuple(records), schema=schema)
