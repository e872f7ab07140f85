"""The seven-classifier zoo behind a single fit / predict_proba surface.

Labels are remapped to the ordered class list seen at fit time; callers
that need probabilities over a larger label universe expand the columns
themselves via `model.classes`.
"""

from __future__ import annotations

import io
import json
import pickle
import struct
from dataclasses import dataclass

import numpy as np

from ..dataio import rng_for
from ..schema import InvalidInputError
from .mlp import KNNClassifier, MLPClassifier
from .svm import SVMClassifier
from .trees import AdaBoost, DecisionTree, RandomForest

EXPERT_KINDS = (
    "DecisionTree", "RandomForest", "AdaBoost", "NearestNeighbours",
    "SVM", "MLP", "MLPLarge",
)

# Committed defaults, serialized with every model.
EXPERT_HYPERPARAMS = {
    "DecisionTree": {"criterion": "gini", "max_depth": None, "min_samples_split": 2},
    "RandomForest": {"n_trees": 100, "max_features": "sqrt", "bootstrap": True},
    "AdaBoost": {"n_rounds": 50, "stump_depth": 1, "scheme": "SAMME"},
    "NearestNeighbours": {"k": 5, "metric": "euclidean", "weights": "uniform"},
    "SVM": {"kernel": "rbf", "gamma": "scale", "C": 1.0, "kkt_tol": 1e-3,
            "probability": "softmax-over-decision-values"},
    "MLP": {"hidden": [100], "lr": 1e-3, "max_epochs": 200, "tol": 1e-4},
    "MLPLarge": {"hidden": [128, 64, 32], "lr": 1e-3, "max_epochs": 200,
                 "tol": 1e-4, "adaptive": True},
}

MODEL_MAGIC = b"LUSX"
MODEL_VERSION = 1


class _ConstantPredictor:
    def __init__(self):
        self.n_classes = 1

    def fit(self, x, y, rng=None):
        return self

    def predict_proba(self, x):
        return np.ones((len(x), 1))

    def predict(self, x):
        return np.zeros(len(x), dtype=int)


def _make_estimator(kind: str):
    if kind == "DecisionTree":
        return DecisionTree()
    if kind == "RandomForest":
        return RandomForest(n_trees=100)
    if kind == "AdaBoost":
        return AdaBoost(n_rounds=50)
    if kind == "NearestNeighbours":
        return KNNClassifier(k=5)
    if kind == "SVM":
        return SVMClassifier(c=1.0, tol=1e-3)
    if kind == "MLP":
        return MLPClassifier(hidden=(100,))
    if kind == "MLPLarge":
        return MLPClassifier(hidden=(128, 64, 32), adaptive=True)
    raise InvalidInputError(f"unknown expert kind {kind!r}")


@dataclass
class ExpertModel:
    kind: str
    estimator: object
    classes: tuple  # ordered original labels; column order of predict_proba
    n_features: int
    fit_seed: int
    constant: bool = False  # single-class degenerate fit


def fit(features, labels, kind: str, seed: int) -> ExpertModel:
    """Fit one expert; deterministic given the seed."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels)
    if x.ndim != 2 or x.shape[1] < 1:
        raise InvalidInputError(f"features must be N x d, got shape {x.shape}")
    if len(x) != len(y):
        raise InvalidInputError("features and labels length mismatch")
    classes = tuple(sorted(set(int(v) for v in y)))
    if len(y) < len(classes):
        raise InvalidInputError("fewer samples than classes")
    rng = rng_for(seed, "expert", kind)
    if len(classes) < 2:
        return ExpertModel(kind, _ConstantPredictor(), classes, x.shape[1], seed,
                           constant=True)
    remap = {c: i for i, c in enumerate(classes)}
    y_idx = np.array([remap[int(v)] for v in y])
    est = _make_estimator(kind)
    est.fit(x, y_idx, rng=rng)
    return ExpertModel(kind, est, classes, x.shape[1], seed)


def predict_proba(model: ExpertModel, features) -> np.ndarray:
    """M x K probabilities in model.classes column order; rows sum to 1."""
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[1] != model.n_features:
        raise InvalidInputError(
            f"feature dimension {x.shape[1] if x.ndim == 2 else '?'} != fit "
            f"dimension {model.n_features}")
    p = model.estimator.predict_proba(x)
    k = len(model.classes)
    if p.shape[1] < k:
        pad = np.zeros((len(x), k))
        pad[:, :p.shape[1]] = p
        p = pad
    sums = p.sum(axis=1, keepdims=True)
    sums[sums == 0] = 1.0
    return p / sums


def predict(model: ExpertModel, features) -> np.ndarray:
    idx = np.argmax(predict_proba(model, features), axis=1)
    return np.array([model.classes[i] for i in idx])


def accuracy(model: ExpertModel, features, labels) -> float:
    return float(np.mean(predict(model, features) == np.asarray(labels)))


def fit_best_of_3(train_x, train_y, val_x, val_y, kind: str, seed: int,
                  fit_fn=fit) -> ExpertModel:
    """Fit seeds seed..seed+2; keep the highest validation accuracy
    (ties go to the lowest seed)."""
    if len(np.asarray(val_y)) == 0:
        raise InvalidInputError("empty validation set")
    best, best_acc = None, -1.0
    for s in (seed, seed + 1, seed + 2):
        model = fit_fn(train_x, train_y, kind, s)
        acc = accuracy(model, val_x, val_y)
        if acc > best_acc:
            best, best_acc = model, acc
    return best


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def save_expert(path, model: ExpertModel):
    """LUSX container: magic, version, then length-prefixed kind tag,
    hyperparams JSON block, and pickled state block."""
    kind_b = model.kind.encode()
    hp_b = json.dumps(EXPERT_HYPERPARAMS.get(model.kind, {}), sort_keys=True).encode()
    state_b = pickle.dumps({
        "estimator": model.estimator,
        "classes": model.classes,
        "n_features": model.n_features,
        "fit_seed": model.fit_seed,
        "constant": model.constant,
    }, protocol=4)
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack("<I", MODEL_VERSION))
        for block in (kind_b, hp_b, state_b):
            f.write(struct.pack("<I", len(block)))
            f.write(block)


def load_expert(path) -> ExpertModel:
    with open(path, "rb") as f:
        if f.read(4) != MODEL_MAGIC:
            raise InvalidInputError(f"{path}: not a LUSX model file")
        version, = struct.unpack("<I", f.read(4))
        if version != MODEL_VERSION:
            raise InvalidInputError(f"{path}: unsupported model version {version}")

        def block():
            n, = struct.unpack("<I", f.read(4))
            return f.read(n)

        kind = block().decode()
        json.loads(block())  # hyperparams block, informational
        state = pickle.loads(block())
    return ExpertModel(kind, state["estimator"], tuple(state["classes"]),
                       state["n_features"], state["fit_seed"], state["constant"])
