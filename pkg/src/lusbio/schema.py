"""Biomarker schema, label taxonomies, and shared configuration defaults.

Everything here is an immutable value object; operations are pure functions.
The canonical schema is also emitted as a versioned JSON document that the
data loader, experiment harness, and annotator UI all consume.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

SCHEMA_VERSION = "1.0"

# (name, number of checkboxes) in canonical order.
CATEGORY_CARDINALITIES = (
    ("A-line", 5),
    ("B-line", 5),
    ("B-line origin", 3),
    ("Pleural line thickness", 4),
    ("Pleural line location", 3),
    ("Pleural indents", 5),
    ("Pleural breaks", 5),
    ("Consolidation", 5),
    ("Effusion", 3),
)

DISEASE_NAMES = (
    "Healthy",
    "COVID Pneumonia",
    "Interstitial Lung Disease",
    "Asthma/COPD Exacerbation",
    "Cardiogenic Pulmonary Edema",
    "Other lung",
    "Other non-lung",
)

N_SEVERITY_CLASSES = 4
N_SF_BINS = 4
N_DISEASE_CLASSES = len(DISEASE_NAMES)


class InvalidInputError(ValueError):
    """Raised when an operation receives an argument outside its domain."""


@dataclass(frozen=True)
class BiomarkerSchema:
    """Ordered biomarker categories and their checkbox counts."""

    categories: tuple[tuple[str, int], ...] = CATEGORY_CARDINALITIES

    def __post_init__(self):
        for name, card in self.categories:
            if card <= 0:
                raise InvalidInputError(f"category {name!r} has cardinality {card}")

    @property
    def total_features(self) -> int:
        return sum(card for _, card in self.categories)

    def feature_index(self, category: str) -> range:
        """Index range of a category's features within the flat vector."""
        start = 0
        for name, card in self.categories:
            if name == category:
                return range(start, start + card)
            start += card
        raise KeyError(category)

    def feature_names(self) -> list[str]:
        return [f"{name}:{i}" for name, card in self.categories for i in range(card)]

    def to_document(self) -> dict:
        """Versioned JSON document; field names are a stable contract."""
        index_map = {}
        start = 0
        for name, card in self.categories:
            index_map[name] = {"start": start, "count": card}
            start += card
        return {
            "schema_version": SCHEMA_VERSION,
            "categories": [{"name": n, "cardinality": c} for n, c in self.categories],
            "total_features": self.total_features,
            "feature_index": index_map,
        }

    @classmethod
    def from_document(cls, doc: dict) -> "BiomarkerSchema":
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise InvalidInputError(
                f"schema_version {doc.get('schema_version')!r} != {SCHEMA_VERSION!r}"
            )
        cats = tuple((c["name"], int(c["cardinality"])) for c in doc["categories"])
        schema = cls(categories=cats)
        if schema.total_features != doc["total_features"]:
            raise InvalidInputError("total_features inconsistent with categories")
        return schema


CANONICAL_SCHEMA = BiomarkerSchema()
assert CANONICAL_SCHEMA.total_features == 38


def write_schema_document(path: str | Path, schema: BiomarkerSchema = CANONICAL_SCHEMA):
    Path(path).write_text(json.dumps(schema.to_document(), indent=2))


@dataclass(frozen=True)
class ValidationIssue:
    index: int | None
    reason: str


@dataclass(frozen=True)
class ValidationResult:
    issues: tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues


def validate_annotation(values, schema: BiomarkerSchema = CANONICAL_SCHEMA) -> ValidationResult:
    """Check an annotated biomarker vector: length 38 and strictly binary.

    Violations are reported as data, one issue per offending index; nothing
    raises.
    """
    values = list(values)
    issues = []
    if len(values) != schema.total_features:
        issues.append(ValidationIssue(None, f"length {len(values)} != {schema.total_features}"))
    for i, v in enumerate(values[: schema.total_features]):
        if v not in (0, 1, 0.0, 1.0):
            issues.append(ValidationIssue(i, f"non-binary value {v!r} at index {i}"))
    return ValidationResult(tuple(issues))


def check_biomarker_vector(values, schema: BiomarkerSchema = CANONICAL_SCHEMA):
    """Validate a predicted (probabilistic) vector: length 38, values in [0,1]."""
    values = list(values)
    if len(values) != schema.total_features:
        raise InvalidInputError(f"biomarker vector length {len(values)} != {schema.total_features}")
    for i, v in enumerate(values):
        if not (0.0 <= float(v) <= 1.0) or not math.isfinite(float(v)):
            raise InvalidInputError(f"biomarker value {v!r} at index {i} outside [0,1]")
    return values


def check_severity(score: int) -> int:
    if score not in range(N_SEVERITY_CLASSES):
        raise InvalidInputError(f"severity {score!r} not in 0..3")
    return int(score)


def check_sf_bin(b: int) -> int:
    if b not in range(N_SF_BINS):
        raise InvalidInputError(f"sf bin {b!r} not in 0..3")
    return int(b)


def check_disease(d: int) -> int:
    if d not in range(N_DISEASE_CLASSES):
        raise InvalidInputError(f"disease {d!r} not in 0..6")
    return int(d)


# Raw-ratio thresholds; a boundary value falls in the sicker (higher) bin.
SF_THRESHOLDS = (430.0, 275.0, 180.0)


def bin_sf_ratio(sf: float) -> int:
    """Bin a raw S/F oxygenation ratio into 4 ordinal classes (0 healthiest).

    Partition: (430, inf) -> 0, (275, 430] -> 1, (180, 275] -> 2, (0, 180] -> 3.
    """
    sf = float(sf)
    if not math.isfinite(sf) or sf <= 0:
        raise InvalidInputError(f"S/F ratio must be positive and finite, got {sf!r}")
    for b, thr in enumerate(SF_THRESHOLDS):
        if sf > thr:
            return b
    return 3


@dataclass(frozen=True)
class TrainConfig:
    """Encoder training and evaluation hyperparameters.

    frame_side defaults to a desk-scale 32 px; set 224 for the full-size
    regime.
    """

    learning_rate: float = 0.0001
    batch_size: int = 4
    epochs: int = 100
    plateau_factor: float = 0.5
    plateau_patience: int = 5
    clip_count_eval: int = 4
    frames_per_clip: int = 15
    shift_fraction: float = 1 / 8
    frame_side: int = 32
    channels: int = 64
    blocks: int = 2
    rng_seed: int = 0
    clip_agg: str = "mean"  # or "max"

    def __post_init__(self):
        positives = (
            self.learning_rate, self.batch_size, self.epochs, self.plateau_factor,
            self.plateau_patience, self.clip_count_eval, self.frames_per_clip,
            self.shift_fraction, self.frame_side, self.channels, self.blocks,
        )
        if any(v <= 0 for v in positives):
            raise InvalidInputError("all TrainConfig numeric fields must be positive")
        k = self.shift_fraction * self.channels
        if abs(k - round(k)) > 1e-9 or round(k) < 1:
            raise InvalidInputError(
                f"shift_fraction*channels = {k} must be a positive integer"
            )
        if self.clip_agg not in ("mean", "max"):
            raise InvalidInputError(f"clip_agg {self.clip_agg!r} not in {{mean,max}}")

    @property
    def shift_channels(self) -> int:
        return round(self.shift_fraction * self.channels)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "TrainConfig":
        return cls(**d)


TASK_CLASS_COUNTS = {
    "severity": N_SEVERITY_CLASSES,
    "sf_ratio": N_SF_BINS,
    "disease": N_DISEASE_CLASSES,
}
