"""Lung-ultrasound biomarker pipeline: a weakly supervised temporal-shift
video encoder whose 38-dim biomarker vectors feed lightweight expert
classifiers, plus the evaluation protocol and a synthetic oracle."""

from .schema import (
    CANONICAL_SCHEMA,
    BiomarkerSchema,
    InvalidInputError,
    TrainConfig,
    bin_sf_ratio,
    validate_annotation,
)
from .dataio import (
    Dataset,
    FoldAssignment,
    VideoRecord,
    augment,
    load_manifest,
    oversample,
    patient_split,
    rng_for,
    sample_clip,
    save_manifest,
)
from .synth import SynthParams, disease_lookup, generate_synthetic
from .encoder import (
    EncoderParams,
    TrainHistory,
    forward,
    grad_check,
    load_params,
    predict_video,
    save_params,
    temporal_shift,
    train_biomarker,
    train_e2e,
)
from .metrics import (
    EvalReport,
    agreement,
    auc_ovo_weighted,
    binary_auc,
    confusion_matrix,
    evaluate_probs,
    weighted_precision_f1,
)
from .harness import (
    CrossvalResult,
    ExperimentConfig,
    extract_features,
    report,
    run_agreement,
    run_crossval,
)

__version__ = "0.1.0"
