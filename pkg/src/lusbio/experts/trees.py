"""CART-style decision trees, bagged forests, and SAMME boosting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..schema import InvalidInputError


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None
    proba: np.ndarray | None = None  # leaf class distribution

    @property
    def is_leaf(self) -> bool:
        return self.proba is not None


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return 1.0 - float(np.sum(p * p))


def _best_split(x: np.ndarray, y: np.ndarray, w: np.ndarray, n_classes: int,
                features) -> tuple[int, float, float] | None:
    """Lowest weighted-Gini split over the given features.

    Ties break to the lowest feature index then lowest threshold; thresholds
    are midpoints between distinct consecutive sorted values. Returns None
    when no split separates the data.
    """
    best = None
    total = np.zeros(n_classes)
    np.add.at(total, y, w)
    n = w.sum()
    for f in features:
        order = np.argsort(x[:, f], kind="stable")
        xs, ys, ws = x[order, f], y[order], w[order]
        left = np.zeros(n_classes)
        left_n = 0.0
        for i in range(len(xs) - 1):
            left[ys[i]] += ws[i]
            left_n += ws[i]
            if xs[i + 1] <= xs[i]:
                continue
            right = total - left
            score = (left_n * _gini(left) + (n - left_n) * _gini(right)) / n
            thr = 0.5 * (xs[i] + xs[i + 1])
            if best is None or score < best[2] - 1e-12:
                best = (f, thr, score)
    return best


class DecisionTree:
    """Gini-impurity CART classifier; exact fit on consistent data.

    max_features (per-split random subset) and sample weights support the
    forest and boosting wrappers; without them the tree is deterministic.
    """

    def __init__(self, max_depth: int | None = None, min_samples_split: int = 2,
                 max_features: int | None = None):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.root: _Node | None = None
        self.n_classes = 0
        self.n_features = 0

    def fit(self, x, y, sample_weight=None, rng: np.random.Generator | None = None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=int)
        w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        self.n_classes = int(y.max()) + 1
        self.n_features = x.shape[1]
        self._rng = rng
        self.root = self._build(x, y, w, depth=0)
        del self._rng
        return self

    def _leaf(self, y, w) -> _Node:
        counts = np.zeros(self.n_classes)
        np.add.at(counts, y, w)
        total = counts.sum()
        proba = counts / total if total > 0 else np.full(self.n_classes, 1.0 / self.n_classes)
        return _Node(proba=proba)

    def _build(self, x, y, w, depth) -> _Node:
        if (len(y) < self.min_samples_split or len(np.unique(y)) == 1
                or (self.max_depth is not None and depth >= self.max_depth)):
            return self._leaf(y, w)
        if self.max_features is not None and self.max_features < self.n_features:
            features = np.sort(self._rng.choice(self.n_features, self.max_features, replace=False))
        else:
            features = range(self.n_features)
        parent_counts = np.zeros(self.n_classes)
        np.add.at(parent_counts, y, w)
        split = _best_split(x, y, w, self.n_classes, features)
        if split is None or split[2] >= _gini(parent_counts) - 1e-12:
            return self._leaf(y, w)
        f, thr, _ = split
        mask = x[:, f] < thr
        node = _Node(feature=f, threshold=thr)
        node.left = self._build(x[mask], y[mask], w[mask], depth + 1)
        node.right = self._build(x[~mask], y[~mask], w[~mask], depth + 1)
        return node

    def predict_proba(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.empty((len(x), self.n_classes))
        for i, row in enumerate(x):
            node = self.root
            while not node.is_leaf:
                node = node.left if row[node.feature] < node.threshold else node.right
            out[i] = node.proba
        return out

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.predict_proba(x), axis=1)


class RandomForest:
    """Bagged Gini trees with per-split sqrt(d) feature subsets.

    predict_proba is the plain mean of member-tree leaf distributions.
    """

    def __init__(self, n_trees: int = 100):
        self.n_trees = n_trees
        self.trees: list[DecisionTree] = []
        self.n_classes = 0

    def fit(self, x, y, rng: np.random.Generator):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=int)
        self.n_classes = int(y.max()) + 1
        d = x.shape[1]
        k = int(np.ceil(np.sqrt(d)))
        self.trees = []
        for _ in range(self.n_trees):
            idx = rng.integers(0, len(y), size=len(y))
            tree = DecisionTree(max_features=k)
            tree.fit(x[idx], y[idx], rng=rng)
            tree.n_classes = self.n_classes
            self.trees.append(tree)
        return self

    def predict_proba(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros((len(x), self.n_classes))
        for tree in self.trees:
            p = tree.predict_proba(x)
            if p.shape[1] < self.n_classes:  # bootstrap sample missed a class
                pad = np.zeros((len(x), self.n_classes))
                pad[:, :p.shape[1]] = p
                p = pad
            out += p
        return out / len(self.trees)

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.predict_proba(x), axis=1)


class AdaBoost:
    """Multi-class SAMME boosting over depth-1 Gini stumps.

    A stump is admitted only while its weighted error stays below the
    (K-1)/K random-guessing bound; otherwise boosting halts.
    """

    def __init__(self, n_rounds: int = 50):
        self.n_rounds = n_rounds
        self.stumps: list[DecisionTree] = []
        self.alphas: list[float] = []
        self.n_classes = 0

    def fit(self, x, y, rng: np.random.Generator | None = None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=int)
        n = len(y)
        self.n_classes = int(y.max()) + 1
        k = self.n_classes
        w = np.full(n, 1.0 / n)
        self.stumps, self.alphas = [], []
        for _ in range(self.n_rounds):
            stump = DecisionTree(max_depth=1)
            stump.fit(x, y, sample_weight=w)
            stump.n_classes = k
            pred = stump.predict(x)
            miss = pred != y
            err = float(w[miss].sum())
            if err >= (k - 1) / k:
                break
            err = max(err, 1e-12)
            alpha = np.log((1 - err) / err) + np.log(k - 1)
            self.stumps.append(stump)
            self.alphas.append(alpha)
            w = w * np.exp(alpha * miss)
            w /= w.sum()
            if err <= 1e-12:
                break
        if not self.stumps:  # first stump already at chance: constant fallback
            stump = DecisionTree(max_depth=1)
            stump.fit(x, y)
            stump.n_classes = k
            self.stumps, self.alphas = [stump], [1.0]
        return self

    def predict_proba(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        votes = np.zeros((len(x), self.n_classes))
        for stump, alpha in zip(self.stumps, self.alphas):
            pred = stump.predict(x)
            votes[np.arange(len(x)), pred] += alpha
        return votes / sum(self.alphas)

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.predict_proba(x), axis=1)
