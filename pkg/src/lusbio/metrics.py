"""Classification metrics: weighted precision/F1, Mann-Whitney AUC,
one-vs-one multiclass AUC, and inter-labeler agreement.

Undefined values (e.g. AUC with one class present) propagate as None,
never as 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np
from scipy.stats import rankdata

from .schema import InvalidInputError


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if len(y_true) != len(y_pred):
        raise InvalidInputError("y_true and y_pred length mismatch")
    if len(y_true) and (y_true.min() < 0 or y_true.max() >= n_classes
                        or y_pred.min() < 0 or y_pred.max() >= n_classes):
        raise InvalidInputError(f"labels outside [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    if len(y_true) == 0:
        raise InvalidInputError("empty input")
    return float(np.mean(y_true == np.asarray(y_pred)))


def weighted_precision_f1(y_true, y_pred, n_classes: int) -> tuple[float, float]:
    """Support-weighted precision and F1; undefined per-class terms are 0."""
    cm = confusion_matrix(y_true, y_pred, n_classes)
    n = cm.sum()
    if n == 0:
        raise InvalidInputError("empty input")
    tp = np.diag(cm).astype(float)
    pred_n = cm.sum(axis=0).astype(float)
    true_n = cm.sum(axis=1).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        prec = np.where(pred_n > 0, tp / pred_n, 0.0)
        rec = np.where(true_n > 0, tp / true_n, 0.0)
        f1 = np.where(prec + rec > 0, 2 * prec * rec / (prec + rec), 0.0)
    w = true_n / n
    return float(np.sum(w * prec)), float(np.sum(w * f1))


def binary_auc(scores, labels) -> float | None:
    """Mann-Whitney AUC with midrank tie handling; None when one-class."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores)
    r_pos = ranks[labels == 1].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def auc_ovo_weighted(probs, y_true) -> float:
    """Hand-Till style one-vs-one AUC, pairs weighted by combined support.

    For each unordered present pair (i, j): restrict to samples of i or j and
    average AUC(p_i vs class i) with AUC(p_j vs class j).
    """
    probs = np.asarray(probs, dtype=float)
    y_true = np.asarray(y_true, dtype=int)
    present = sorted(set(y_true.tolist()))
    if len(present) < 2:
        raise InvalidInputError("fewer than 2 classes present")
    num, den = 0.0, 0.0
    for a_i, i in enumerate(present):
        for j in present[a_i + 1:]:
            mask = (y_true == i) | (y_true == j)
            auc_i = binary_auc(probs[mask, i], (y_true[mask] == i).astype(int))
            auc_j = binary_auc(probs[mask, j], (y_true[mask] == j).astype(int))
            pair_auc = 0.5 * (auc_i + auc_j)
            w = float(mask.sum())
            num += w * pair_auc
            den += w
    return num / den


def agreement(labels_a, labels_b) -> dict:
    """Exact-match rate between two labelings plus their cross tabulation."""
    a = np.asarray(labels_a, dtype=int)
    b = np.asarray(labels_b, dtype=int)
    if len(a) != len(b):
        raise InvalidInputError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) == 0:
        raise InvalidInputError("empty input")
    k = int(max(a.max(), b.max())) + 1
    return {
        "accuracy": float(np.mean(a == b)),
        "confusion": confusion_matrix(a, b, k).tolist(),
        "n": int(len(a)),
    }


@dataclass
class EvalReport:
    """Held-out metrics for one method on one task."""

    task: str
    method: str
    auc_ovo_weighted: float | None
    accuracy: float
    precision_weighted: float
    f1_weighted: float
    support: dict

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "EvalReport":
        return cls(**d)

    def csv_row(self) -> str:
        auc = "" if self.auc_ovo_weighted is None else repr(self.auc_ovo_weighted)
        return (f"{self.task},{self.method},{auc},{self.accuracy!r},"
                f"{self.precision_weighted!r},{self.f1_weighted!r}")


def evaluate_probs(probs: np.ndarray, y_true, task: str, method: str) -> EvalReport:
    """Full report from an N x K probability matrix and true labels."""
    probs = np.asarray(probs, dtype=float)
    y_true = np.asarray(y_true, dtype=int)
    k = probs.shape[1]
    y_pred = np.argmax(probs, axis=1)
    prec, f1 = weighted_precision_f1(y_true, y_pred, k)
    try:
        auc = auc_ovo_weighted(probs, y_true)
    except InvalidInputError:
        auc = None
    support = {int(c): int(np.sum(y_true == c)) for c in sorted(set(y_true.tolist()))}
    return EvalReport(task=task, method=method, auc_ovo_weighted=auc,
                      accuracy=accuracy(y_true, y_pred),
                      precision_weighted=prec, f1_weighted=f1, support=support)
