"""Command-line front end: synth-gen, train-bio, train-e2e,
extract-features, fit-expert, crossval, agreement, report, serve-annotator.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import encoder as enc
from .dataio import load_manifest, oversample, patient_split, save_manifest
from .experts import fit_best_of_3, save_expert
from .harness import (
    ExperimentConfig,
    extract_features,
    feature_table_csv,
    report,
    run_agreement,
    run_crossval,
)
from .schema import TrainConfig
from .synth import SynthParams, generate_synthetic


def _train_config(args) -> TrainConfig:
    if args.config:
        doc = json.loads(Path(args.config).read_text())
        tc = doc.get("train_config", doc)
        return TrainConfig(**{**tc, "rng_seed": args.seed})
    return TrainConfig(rng_seed=args.seed)


def _split_records(dataset, seed):
    folds = patient_split(dataset, seed).folds
    train = dataset.by_patients([p for f in folds[:2] for p in f])
    val = dataset.by_patients(folds[2])
    return train, val


def cmd_synth_gen(args):
    params = SynthParams(n_patients=args.patients, videos_per_patient=args.videos,
                         label_noise=args.label_noise, seed=args.seed)
    dataset = generate_synthetic(params)
    path = save_manifest(dataset, args.out)
    print(f"wrote {len(dataset.records)} records to {path}")


def cmd_train_bio(args):
    config = _train_config(args)
    dataset = load_manifest(args.manifest)
    train, val = _split_records(dataset, args.seed)
    train = oversample(train, args.oversample_on, args.seed)
    params, history = enc.train_biomarker(train, val, config)
    enc.save_params(args.out, params, config)
    Path(args.out).with_suffix(".history.csv").write_text(history.to_csv())
    print(f"best epoch {history.best_epoch}, val acc {max(history.val_acc):.4f}")


def cmd_train_e2e(args):
    config = _train_config(args)
    dataset = load_manifest(args.manifest)
    train, val = _split_records(dataset, args.seed)
    train = oversample(train, args.task, args.seed)
    init = None
    if args.init:
        init, _ = enc.load_params(args.init)
    params, history = enc.train_e2e(train, val, args.task, config, init=init)
    enc.save_params(args.out, params, config)
    Path(args.out).with_suffix(".history.csv").write_text(history.to_csv())
    print(f"best epoch {history.best_epoch}, val acc {max(history.val_acc):.4f}")


def cmd_extract_features(args):
    config = _train_config(args)
    params, _ = enc.load_params(args.checkpoint)
    dataset = load_manifest(args.manifest)
    table = extract_features(params, dataset, config, args.mode, seed=args.seed)
    Path(args.out).write_text(feature_table_csv(table))
    print(f"wrote {len(table)} feature rows to {args.out}")


def cmd_fit_expert(args):
    dataset = load_manifest(args.manifest)
    rows = {}
    for line in Path(args.features).read_text().splitlines():
        vid, rest = line.split(",", 1)
        rows[vid] = [float(v) for v in rest.split(",")]
    train, val = _split_records(dataset, args.seed)
    x_tr = np.array([rows[r.video_id] for r in train])
    y_tr = np.array([r.label(args.task) for r in train])
    x_val = np.array([rows[r.video_id] for r in val])
    y_val = np.array([r.label(args.task) for r in val])
    model = fit_best_of_3(x_tr, y_tr, x_val, y_val, args.kind, args.seed)
    save_expert(args.out, model)
    print(f"saved {args.kind} (seed {model.fit_seed}) to {args.out}")


def cmd_crossval(args):
    doc = json.loads(Path(args.config).read_text())
    config = ExperimentConfig.from_json({**doc, "base_seed": args.seed})
    result = run_crossval(config)
    report([result], args.out, fmt="json" if str(args.out).endswith(".json") else "csv")
    for m, v in result.mean.items():
        s = result.std[m]
        print(f"{m}: {'n/a' if v is None else f'{v:.4f} +- {s:.4f}'}")


def cmd_agreement(args):
    a = json.loads(Path(args.file_a).read_text())
    b = json.loads(Path(args.file_b).read_text())
    out = run_agreement(a, b)
    if args.out:
        Path(args.out).write_text(json.dumps(out, indent=1))
    print(f"agreement accuracy: {out['accuracy']:.4f} over {out['n']} videos")


def cmd_report(args):
    from .harness import CrossvalResult
    from .metrics import EvalReport
    results = []
    for path in args.results:
        for item in json.loads(Path(path).read_text()):
            results.append(CrossvalResult(
                config=ExperimentConfig.from_json(item["config"]),
                runs=[EvalReport.from_json(r) for r in item["runs"]],
                mean=item["mean"], std=item["std"], wall_clock=item["wall_clock"]))
    report(results, args.out, fmt=args.format)
    print(f"wrote {len(results)} result rows to {args.out}")


def cmd_serve_annotator(args):
    from .server import serve_annotations
    serve_annotations(args.port, args.manifest, args.data_dir, args.static)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lusbio")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--out", type=str, default=None)
        return p

    p = common(sub.add_parser("synth-gen", help="generate a synthetic dataset"))
    p.add_argument("--patients", type=int, default=40)
    p.add_argument("--videos", type=int, default=3)
    p.add_argument("--label-noise", type=float, default=0.05)
    p.set_defaults(func=cmd_synth_gen)

    p = common(sub.add_parser("train-bio", help="train the biomarker encoder"))
    p.add_argument("--manifest", required=True)
    p.add_argument("--oversample-on", default="severity")
    p.set_defaults(func=cmd_train_bio)

    p = common(sub.add_parser("train-e2e", help="train a task encoder end-to-end"))
    p.add_argument("--manifest", required=True)
    p.add_argument("--task", required=True, choices=("severity", "sf_ratio", "disease"))
    p.add_argument("--init", default=None, help="warm-start trunk checkpoint")
    p.set_defaults(func=cmd_train_e2e)

    p = common(sub.add_parser("extract-features", help="dump per-video features"))
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--mode", choices=("biomarker", "trunk"), default="biomarker")
    p.set_defaults(func=cmd_extract_features)

    p = common(sub.add_parser("fit-expert", help="fit a classical expert on features"))
    p.add_argument("--manifest", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--task", required=True, choices=("severity", "sf_ratio", "disease"))
    p.add_argument("--kind", required=True)
    p.set_defaults(func=cmd_fit_expert)

    p = common(sub.add_parser("crossval", help="run one experiment-matrix cell"))
    p.set_defaults(func=cmd_crossval)

    p = common(sub.add_parser("agreement", help="compare two label files"))
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.set_defaults(func=cmd_agreement)

    p = common(sub.add_parser("report", help="merge crossval JSON results"))
    p.add_argument("results", nargs="+")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_report)

    p = common(sub.add_parser("serve-annotator", help="serve the annotation API/UI"))
    p.add_argument("--manifest", required=True)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static", default=None, help="built frontend assets dir")
    p.set_defaults(func=cmd_serve_annotator)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
