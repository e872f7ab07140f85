"""RBF-kernel SVM trained with Platt's SMO, one-vs-rest for multi-class."""

from __future__ import annotations

import numpy as np

from ..schema import InvalidInputError


def rbf_gamma(x: np.ndarray) -> float:
    """gamma = 1 / (d * Var(X)) over all feature entries ('scale' rule)."""
    var = float(np.var(x))
    d = x.shape[1]
    return 1.0 / (d * var) if var > 0 else 1.0 / d


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    sq = (np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :]
          - 2.0 * a @ b.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


class BinarySVM:
    """Soft-margin dual SVM solved by sequential minimal optimization.

    Labels are +-1. Convergence certificate: every sample's KKT violation
    is at most `tol` at the end of fit.
    """

    def __init__(self, c: float = 1.0, gamma: float = 1.0, tol: float = 1e-3,
                 max_passes: int = 200):
        self.c = c
        self.gamma = gamma
        self.tol = tol
        self.max_passes = max_passes

    def fit(self, x: np.ndarray, y: np.ndarray, rng: np.random.Generator):
        n = len(y)
        self.x, self.y = x, y.astype(float)
        k = rbf_kernel(x, x, self.gamma)
        alpha = np.zeros(n)
        b = 0.0
        # error cache: f(x_i) - y_i with f = sum_j alpha_j y_j K_ij + b
        err = -self.y.copy()

        def take_step(i1: int, i2: int) -> bool:
            nonlocal b
            if i1 == i2:
                return False
            a1, a2 = alpha[i1], alpha[i2]
            y1, y2 = self.y[i1], self.y[i2]
            e1, e2 = err[i1], err[i2]
            s = y1 * y2
            if s > 0:
                lo, hi = max(0.0, a1 + a2 - self.c), min(self.c, a1 + a2)
            else:
                lo, hi = max(0.0, a2 - a1), min(self.c, self.c + a2 - a1)
            if hi - lo < 1e-12:
                return False
            eta = k[i1, i1] + k[i2, i2] - 2 * k[i1, i2]
            if eta <= 1e-12:
                return False
            a2_new = np.clip(a2 + y2 * (e1 - e2) / eta, lo, hi)
            if abs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12):
                return False
            a1_new = a1 + s * (a2 - a2_new)
            d1 = y1 * (a1_new - a1)
            d2 = y2 * (a2_new - a2)
            b1 = b - e1 - d1 * k[i1, i1] - d2 * k[i1, i2]
            b2 = b - e2 - d1 * k[i1, i2] - d2 * k[i2, i2]
            if 0 < a1_new < self.c:
                b_new = b1
            elif 0 < a2_new < self.c:
                b_new = b2
            else:
                b_new = 0.5 * (b1 + b2)
            err[:] += d1 * k[i1] + d2 * k[i2] + (b_new - b)
            alpha[i1], alpha[i2] = a1_new, a2_new
            b = b_new
            return True

        def examine(i2: int) -> bool:
            y2, a2, e2 = self.y[i2], alpha[i2], err[i2]
            r2 = e2 * y2
            if (r2 < -self.tol and a2 < self.c) or (r2 > self.tol and a2 > 0):
                non_bound = np.where((alpha > 0) & (alpha < self.c))[0]
                if len(non_bound) > 1:
                    i1 = int(non_bound[np.argmax(np.abs(err[non_bound] - e2))])
                    if take_step(i1, i2):
                        return True
                for i1 in rng.permutation(non_bound):
                    if take_step(int(i1), i2):
                        return True
                for i1 in rng.permutation(n):
                    if take_step(int(i1), i2):
                        return True
            return False

        examine_all = True
        passes = 0
        while passes < self.max_passes:
            changed = 0
            if examine_all:
                for i in range(n):
                    changed += examine(i)
            else:
                for i in np.where((alpha > 0) & (alpha < self.c))[0]:
                    changed += examine(int(i))
            passes += 1
            if examine_all:
                if changed == 0:
                    break
                examine_all = False
            elif changed == 0:
                examine_all = True

        self.alpha, self.b = alpha, b
        self._train_decision = err + self.y  # f(x_i) on training points
        return self

    def kkt_violation(self) -> float:
        """Max KKT violation over training points at the current solution."""
        margins = self.y * self._train_decision
        viol = np.zeros(len(self.y))
        free = (self.alpha > 1e-9) & (self.alpha < self.c - 1e-9)
        viol[self.alpha <= 1e-9] = np.maximum(0.0, 1.0 - margins[self.alpha <= 1e-9])
        viol[free] = np.abs(1.0 - margins[free])
        at_c = self.alpha >= self.c - 1e-9
        viol[at_c] = np.maximum(0.0, margins[at_c] - 1.0)
        return float(viol.max())

    def decision(self, x: np.ndarray) -> np.ndarray:
        k = rbf_kernel(x, self.x, self.gamma)
        return k @ (self.alpha * self.y) + self.b


class SVMClassifier:
    """One-vs-rest multi-class SVM; probabilities are the softmax of the
    per-class decision values (a committed deviation from Platt scaling)."""

    def __init__(self, c: float = 1.0, tol: float = 1e-3):
        self.c = c
        self.tol = tol
        self.machines: list[BinarySVM] = []
        self.n_classes = 0

    def fit(self, x, y, rng: np.random.Generator):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=int)
        self.gamma = rbf_gamma(x)
        self.n_classes = int(y.max()) + 1
        self.machines = []
        for cls in range(self.n_classes):
            target = np.where(y == cls, 1.0, -1.0)
            m = BinarySVM(c=self.c, gamma=self.gamma, tol=self.tol)
            m.fit(x, target, rng)
            self.machines.append(m)
        return self

    def kkt_violation(self) -> float:
        return max(m.kkt_violation() for m in self.machines)

    def decision_values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.stack([m.decision(x) for m in self.machines], axis=1)

    def predict_proba(self, x) -> np.ndarray:
        d = self.decision_values(x)
        z = d - d.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.decision_values(x), axis=1)
