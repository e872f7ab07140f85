"""Run a miniature version of the cross-validation study.

Compares training the video encoder directly on severity (E2E) against
the biomarker-bottleneck pipeline (train the encoder to predict the 38
biomarkers, then fit a classical expert on its outputs), plus the
true-biomarker expert as a ceiling. The full-size version of this table
lives in tests/test_acceptance.py; here everything is shrunk so the run
finishes in about a minute.
"""

from lusbio.harness import ExperimentConfig, run_crossval
from lusbio.schema import TrainConfig
from lusbio.synth import SynthParams, generate_synthetic


def main():
    ds = generate_synthetic(SynthParams(n_patients=32, videos_per_patient=2, seed=1))
    tc = TrainConfig(epochs=6, channels=16, blocks=2, learning_rate=0.003,
                     clip_count_eval=2)

    cells = [
        ("E2E", None),
        ("Bio_Expert", "MLP"),
        ("TrueBio_Expert", "MLP"),
    ]
    print(f"{'method':16s} {'ovo auc':>8s} {'accuracy':>9s} {'f1':>7s}")
    for method, kind in cells:
        res = run_crossval(ExperimentConfig(
            method=method, task="severity", expert_kind=kind, train_config=tc), ds)
        m = res.mean
        print(f"{method:16s} {m['auc_ovo_weighted']:8.4f} "
              f"{m['accuracy']:9.4f} {m['f1_weighted']:7.4f}")


if __name__ == "__main__":
    main()
