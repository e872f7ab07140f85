"""Experiment harness: the cross-validation protocol, the five method
pipelines, feature extraction, agreement reports, and result persistence.

Protocol: patients are split into four folds with a seeded shuffle; fold 3
is the fixed held-out test set. Three runs r=0,1,2 train on two of the
remaining folds and validate on the third, and we report mean +- population
std of the held-out metrics over the three runs.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import encoder as enc
from .dataio import Dataset, oversample, patient_split, rng_for
from .experts import fit_best_of_3, predict_proba
from .metrics import EvalReport, agreement, binary_auc, evaluate_probs
from .schema import InvalidInputError, TASK_CLASS_COUNTS, TrainConfig
from .synth import SynthParams, generate_synthetic

METHODS = ("E2E", "E2E_Expert", "Bio_Expert", "PretrainBio_E2E",
           "LSFeatures_Expert", "TrueBio_Expert")
EXPERT_METHODS = {"E2E_Expert", "Bio_Expert", "LSFeatures_Expert", "TrueBio_Expert"}
TASKS = ("severity", "sf_ratio", "disease")


@dataclass
class ExperimentConfig:
    method: str
    task: str
    expert_kind: str | None = None
    train_config: TrainConfig = field(default_factory=TrainConfig)
    manifest_path: str | None = None
    synth_params: SynthParams | None = None
    base_seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"unknown method {self.method!r}")
        if self.task not in TASKS:
            raise InvalidInputError(f"unknown task {self.task!r}")
        if (self.method in EXPERT_METHODS) != (self.expert_kind is not None):
            raise InvalidInputError(
                f"method {self.method} {'requires' if self.method in EXPERT_METHODS else 'does not take'} an expert_kind")

    def to_json(self) -> dict:
        d = {"method": self.method, "task": self.task, "expert_kind": self.expert_kind,
             "train_config": self.train_config.to_json(), "base_seed": self.base_seed,
             "manifest_path": self.manifest_path}
        if self.synth_params is not None:
            d["synth_params"] = self.synth_params.__dict__
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ExperimentConfig":
        return cls(
            method=d["method"], task=d["task"], expert_kind=d.get("expert_kind"),
            train_config=TrainConfig.from_json(d.get("train_config", {})),
            manifest_path=d.get("manifest_path"),
            synth_params=SynthParams(**d["synth_params"]) if d.get("synth_params") else None,
            base_seed=d.get("base_seed", 0),
        )


@dataclass
class CrossvalResult:
    config: ExperimentConfig
    runs: list  # 3 EvalReports on the held-out fold
    mean: dict
    std: dict
    wall_clock: dict

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "runs": [r.to_json() for r in self.runs],
            "mean": self.mean, "std": self.std, "wall_clock": self.wall_clock,
        }


METRIC_FIELDS = ("auc_ovo_weighted", "accuracy", "precision_weighted", "f1_weighted")


def _aggregate(runs) -> tuple[dict, dict]:
    mean, std = {}, {}
    for m in METRIC_FIELDS:
        vals = [getattr(r, m) for r in runs]
        if any(v is None for v in vals):
            mean[m] = std[m] = None
        else:
            mean[m] = float(np.mean(vals))
            std[m] = float(np.std(vals))  # population std over the 3 runs
    return mean, std


def load_or_generate(config: ExperimentConfig) -> Dataset:
    from .dataio import load_manifest
    if config.manifest_path:
        return load_manifest(config.manifest_path)
    if config.synth_params is not None:
        return generate_synthetic(config.synth_params)
    raise InvalidInputError("config needs a manifest_path or synth_params")


def _predicted_biomarkers(params, records, config: TrainConfig, seed: int) -> np.ndarray:
    rows = []
    for rec in records:
        rng = rng_for(seed, "bio_feat", rec.video_id)
        rows.append(enc.predict_video(params, rec, config, rng, "biomarker"))
    return np.asarray(rows)


def _trunk_features(params, records, config: TrainConfig, seed: int) -> np.ndarray:
    rows = []
    for rec in records:
        rng = rng_for(seed, "trunk_feat", rec.video_id)
        rows.append(enc.video_trunk_feature(params, rec, config, rng))
    return np.asarray(rows)


def _expert_probs(model, features, n_classes: int) -> np.ndarray:
    """Expand expert probabilities to the task's full class set."""
    p = predict_proba(model, features)
    out = np.zeros((len(features), n_classes))
    for col, cls in enumerate(model.classes):
        out[:, cls] = p[:, col]
    return out


def _encoder_probs(params, records, config: TrainConfig, seed: int) -> np.ndarray:
    rows = []
    for rec in records:
        rng = rng_for(seed, "eval", rec.video_id)
        rows.append(enc.predict_video(params, rec, config, rng, "task"))
    return np.asarray(rows)


def run_crossval(config: ExperimentConfig, dataset: Dataset | None = None) -> CrossvalResult:
    """Execute one method/task cell of the experiment matrix."""
    t0 = time.perf_counter()
    if dataset is None:
        dataset = load_or_generate(config)
    task = config.task
    k = TASK_CLASS_COUNTS[task]
    tc = config.train_config
    folds = patient_split(dataset, config.base_seed).folds
    heldout = dataset.by_patients(folds[3])
    y_held = np.array([r.label(task) for r in heldout])
    if any(r.label(task) is None for r in dataset.records):
        raise InvalidInputError(f"dataset is missing {task} labels")
    wall = {"setup": time.perf_counter() - t0}

    runs = []
    for r in range(3):
        t_run = time.perf_counter()
        val = dataset.by_patients(folds[r])
        train_folds = [f for i, f in enumerate(folds[:3]) if i != r]
        train = dataset.by_patients([p for f in train_folds for p in f])
        seed_r = config.base_seed * 1000 + r
        train_os = oversample(train, task, seed_r)
        run_tc = TrainConfig(**{**tc.to_json(), "rng_seed": seed_r})

        if config.method == "E2E":
            params, _ = enc.train_e2e(train_os, val, task, run_tc, seed_tag=("e2e", r))
            probs = _encoder_probs(params, heldout, run_tc, seed_r)
        elif config.method == "PretrainBio_E2E":
            bio_params, _ = enc.train_biomarker(train_os, val, run_tc, seed_tag=("bio", r))
            params, _ = enc.train_e2e(train_os, val, task, run_tc, init=bio_params,
                                      seed_tag=("e2e", r))
            probs = _encoder_probs(params, heldout, run_tc, seed_r)
        elif config.method == "E2E_Expert":
            params, _ = enc.train_e2e(train_os, val, task, run_tc, seed_tag=("e2e", r))
            probs = _fit_eval_expert(
                config, _trunk_features(params, train_os, run_tc, seed_r),
                [rec.label(task) for rec in train_os],
                _trunk_features(params, val, run_tc, seed_r),
                [rec.label(task) for rec in val],
                _trunk_features(params, heldout, run_tc, seed_r), k, seed_r)
        elif config.method == "Bio_Expert":
            params, _ = enc.train_biomarker(train_os, val, run_tc, seed_tag=("bio", r))
            probs = _fit_eval_expert(
                config, _predicted_biomarkers(params, train_os, run_tc, seed_r),
                [rec.label(task) for rec in train_os],
                _predicted_biomarkers(params, val, run_tc, seed_r),
                [rec.label(task) for rec in val],
                _predicted_biomarkers(params, heldout, run_tc, seed_r), k, seed_r)
        elif config.method == "LSFeatures_Expert":
            # transfer: trunk trained end-to-end on severity, reused for the task
            params, _ = enc.train_e2e(train_os, val, "severity", run_tc,
                                      seed_tag=("e2e-sev", r))
            probs = _fit_eval_expert(
                config, _trunk_features(params, train_os, run_tc, seed_r),
                [rec.label(task) for rec in train_os],
                _trunk_features(params, val, run_tc, seed_r),
                [rec.label(task) for rec in val],
                _trunk_features(params, heldout, run_tc, seed_r), k, seed_r)
        elif config.method == "TrueBio_Expert":
            # oracle: annotated biomarker vectors, no encoder in the loop
            probs = _fit_eval_expert(
                config, np.asarray([rec.biomarkers for rec in train_os]),
                [rec.label(task) for rec in train_os],
                np.asarray([rec.biomarkers for rec in val]),
                [rec.label(task) for rec in val],
                np.asarray([rec.biomarkers for rec in heldout]), k, seed_r)
        else:  # pragma: no cover
            raise InvalidInputError(config.method)

        report = evaluate_probs(probs, y_held, task, config.method)
        runs.append(report)
        wall[f"run{r}"] = time.perf_counter() - t_run

    mean, std = _aggregate(runs)
    return CrossvalResult(config=config, runs=runs, mean=mean, std=std, wall_clock=wall)


def _fit_eval_expert(config, x_tr, y_tr, x_val, y_val, x_held, k, seed):
    model = fit_best_of_3(x_tr, y_tr, x_val, y_val, config.expert_kind, seed)
    return _expert_probs(model, x_held, k)


def extract_features(params: enc.EncoderParams, dataset: Dataset,
                     config: TrainConfig, mode: str, seed: int = 0) -> dict:
    """video_id -> feature row; 'biomarker' gives 38 probabilities,
    'trunk' the pooled trunk feature."""
    if mode not in ("biomarker", "trunk"):
        raise InvalidInputError(f"mode {mode!r} not in {{biomarker, trunk}}")
    table = {}
    for rec in dataset.records:
        rng = rng_for(seed, f"{mode}_feat", rec.video_id)
        if mode == "biomarker":
            table[rec.video_id] = enc.predict_video(params, rec, config, rng, "biomarker")
        else:
            table[rec.video_id] = enc.video_trunk_feature(params, rec, config, rng)
    return table


def feature_table_csv(table: dict) -> str:
    lines = []
    for vid in sorted(table):
        row = ",".join(repr(float(v)) for v in table[vid])
        lines.append(f"{vid},{row}")
    return "\n".join(lines) + "\n"


def run_agreement(entries_a: list, entries_b: list) -> dict:
    """Join two label files on video_id and report agreement (plus binary
    per-class AUC when A carries probabilities).

    Each entry: {"video_id": str, "label": int, "probs": [...]? }.
    """
    a_map = {e["video_id"]: e for e in entries_a}
    b_map = {e["video_id"]: e for e in entries_b}
    if set(a_map) != set(b_map):
        diff = sorted(set(a_map) ^ set(b_map))
        raise InvalidInputError(f"video_id mismatch: {diff}")
    ids = sorted(a_map)
    labels_a = [a_map[v]["label"] for v in ids]
    labels_b = [b_map[v]["label"] for v in ids]
    out = agreement(labels_a, labels_b)
    if all("probs" in a_map[v] for v in ids):
        probs = np.asarray([a_map[v]["probs"] for v in ids], dtype=float)
        ref = np.asarray(labels_b)
        out["auc_per_class"] = {
            int(c): binary_auc(probs[:, c], (ref == c).astype(int))
            for c in range(probs.shape[1])
        }
    return out


def report(results: list[CrossvalResult], path, fmt: str = "csv"):
    """Write the experiment matrix as CSV or JSON with mean +- std columns."""
    if fmt == "json":
        payload = [r.to_json() for r in results]
        with open(path, "w") as f:
            json.dump(payload, f, indent=1)
        return
    if fmt != "csv":
        raise InvalidInputError(f"unknown report format {fmt!r}")
    cols = ["task", "method", "expert_kind"]
    for m in METRIC_FIELDS:
        cols += [f"{m}_mean", f"{m}_std"]
    lines = [",".join(cols)]
    for r in results:
        row = [r.config.task, r.config.method, r.config.expert_kind or ""]
        for m in METRIC_FIELDS:
            row.append("" if r.mean[m] is None else repr(r.mean[m]))
            row.append("" if r.std[m] is None else repr(r.std[m]))
        lines.append(",".join(row))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
