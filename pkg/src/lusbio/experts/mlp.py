"""Small feed-forward classifiers trained with Adam on softmax CE."""

from __future__ import annotations

import numpy as np


def _softmax(z):
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


class MLPClassifier:
    """ReLU MLP; minibatch Adam, epoch-loss early stopping.

    `adaptive` halves the learning rate after the epoch loss fails to
    improve by `tol` twice in a row (and keeps training); without it the
    same condition repeated `patience` times stops training.
    """

    def __init__(self, hidden=(100,), lr: float = 1e-3, max_epochs: int = 200,
                 tol: float = 1e-4, batch_size: int = 32, adaptive: bool = False,
                 patience: int = 10):
        self.hidden = tuple(hidden)
        self.lr = lr
        self.max_epochs = max_epochs
        self.tol = tol
        self.batch_size = batch_size
        self.adaptive = adaptive
        self.patience = patience

    def _init(self, d, k, rng):
        sizes = (d,) + self.hidden + (k,)
        self.weights = [rng.normal(0, np.sqrt(2.0 / sizes[i]), (sizes[i], sizes[i + 1]))
                        for i in range(len(sizes) - 1)]
        self.biases = [np.zeros(s) for s in sizes[1:]]

    def _forward(self, x):
        acts = [x]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w + b
            acts.append(np.maximum(z, 0.0) if i < len(self.weights) - 1 else z)
        return acts

    def fit(self, x, y, rng: np.random.Generator):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=int)
        n, d = x.shape
        self.n_classes = int(y.max()) + 1
        self._init(d, self.n_classes, rng)
        m = [np.zeros_like(w) for w in self.weights + self.biases]
        v = [np.zeros_like(w) for w in self.weights + self.biases]
        step = 0
        lr = self.lr
        best_loss, bad_epochs = np.inf, 0
        bs = min(self.batch_size, n)
        for _ in range(self.max_epochs):
            order = rng.permutation(n)
            epoch_loss = 0.0
            for start in range(0, n, bs):
                idx = order[start:start + bs]
                xb, yb = x[idx], y[idx]
                acts = self._forward(xb)
                probs = _softmax(acts[-1])
                eps = 1e-12
                epoch_loss += -np.sum(np.log(probs[np.arange(len(yb)), yb] + eps))
                delta = probs
                delta[np.arange(len(yb)), yb] -= 1.0
                delta /= len(yb)
                grads_w, grads_b = [], []
                for i in reversed(range(len(self.weights))):
                    grads_w.append(acts[i].T @ delta)
                    grads_b.append(delta.sum(axis=0))
                    if i > 0:
                        delta = (delta @ self.weights[i].T) * (acts[i] > 0)
                grads = list(reversed(grads_w)) + list(reversed(grads_b))
                tensors = self.weights + self.biases
                step += 1
                for j, (t, g) in enumerate(zip(tensors, grads)):
                    m[j] = 0.9 * m[j] + 0.1 * g
                    v[j] = 0.999 * v[j] + 0.001 * g * g
                    mh = m[j] / (1 - 0.9 ** step)
                    vh = v[j] / (1 - 0.999 ** step)
                    t -= lr * mh / (np.sqrt(vh) + 1e-8)
            epoch_loss /= n
            if epoch_loss < best_loss - self.tol:
                best_loss, bad_epochs = epoch_loss, 0
            else:
                bad_epochs += 1
                if self.adaptive and bad_epochs >= 2:
                    lr *= 0.5
                    bad_epochs = 0
                    if lr < 1e-6:
                        break
                elif not self.adaptive and bad_epochs >= self.patience:
                    break
        return self

    def predict_proba(self, x) -> np.ndarray:
        return _softmax(self._forward(np.asarray(x, dtype=float))[-1])

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.predict_proba(x), axis=1)


class KNNClassifier:
    """k nearest neighbours with uniform votes; probability = vote fraction.

    Distance ties resolve to the lower sample index (stable sort).
    """

    def __init__(self, k: int = 5):
        self.k = k

    def fit(self, x, y, rng=None):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=int)
        self.n_classes = int(self.y.max()) + 1
        return self

    def predict_proba(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        d2 = (np.sum(q * q, axis=1)[:, None] + np.sum(self.x * self.x, axis=1)[None, :]
              - 2.0 * q @ self.x.T)
        k = min(self.k, len(self.y))
        out = np.zeros((len(q), self.n_classes))
        for i in range(len(q)):
            nn = np.argsort(d2[i], kind="stable")[:k]
            np.add.at(out[i], self.y[nn], 1.0 / k)
        return out

    def predict(self, q) -> np.ndarray:
        return np.argmax(self.predict_proba(q), axis=1)
