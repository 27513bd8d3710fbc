"""Incremental classifiers: the shared contract plus the two non-tree learners.

All learners share one contract: ``predict_proba_one`` is pure (never touches
state), ``learn_one`` absorbs exactly one labeled instance, and the batch
methods (``partial_fit`` / ``predict_proba`` / ``predict``) wrap those so the
classifiers compose with the usual estimator tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .core import ShapeError, TrainingDivergedError, as_feature_matrix, as_feature_vector


def softmax(logits: np.ndarray) -> np.ndarray:
    """Overflow-safe softmax along the last axis (max subtraction)."""
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class StreamingClassifier(BaseEstimator, ClassifierMixin):
    """Base class for classifiers that learn one labeled instance at a time.

    Subclasses implement ``_predict_proba_rows`` and ``_learn_one``; the
    label space size is fixed up front through the ``n_classes`` parameter
    so predictions are well-formed before any instance has been seen.
    """

    n_classes: int

    @property
    def n_learned_(self) -> int:
        """Number of labeled instances absorbed so far."""
        return getattr(self, "_n_learned", 0)

    def _check_label(self, y) -> int:
        y = int(y)
        if not 0 <= y < self.n_classes:
            raise ValueError(f"label {y} outside 0..{self.n_classes - 1}")
        return y

    # -- single-instance interface (the streaming contract) --

    def predict_proba_one(self, x) -> np.ndarray:
        """Class-probability vector for one instance. Pure: no state change."""
        x = as_feature_vector(x)
        return self._predict_proba_rows(x.reshape(1, -1))[0]

    def learn_one(self, x, y):
        """Absorb one labeled instance; increments ``n_learned_`` by one."""
        x = as_feature_vector(x)
        self._learn_one(x, self._check_label(y))
        self._n_learned = self.n_learned_ + 1
        return self

    def predict_one(self, x) -> int:
        return int(np.argmax(self.predict_proba_one(x)))

    # -- batch interface --

    def predict_proba(self, X) -> np.ndarray:
        return self._predict_proba_rows(as_feature_matrix(X))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def partial_fit(self, X, y, classes=None):
        if classes is not None and max(classes) >= self.n_classes:
            raise ValueError(f"classes {classes} exceed n_classes={self.n_classes}")
        X = as_feature_matrix(X)
        y = np.asarray(y).ravel()
        if X.shape[0] != y.shape[0]:
            raise ShapeError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        for row, label in zip(X, y):
            self._learn_one(row, self._check_label(label))
            self._n_learned = self.n_learned_ + 1
        return self

    def fit(self, X, y):
        """Reset, then one pass over (X, y) in the order given."""
        self.reset()
        return self.partial_fit(X, y)

    # -- to implement --

    def reset(self):
        raise NotImplementedError

    def _predict_proba_rows(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _learn_one(self, x: np.ndarray, y: int):
        raise NotImplementedError


class StreamingLogisticRegression(StreamingClassifier):
    """Multinomial logistic regression trained by per-instance SGD.

    Prediction is ``softmax(W x + b)``. Each labeled instance applies one
    cross-entropy gradient step: ``w_c -= lr * (p_c - [c == y]) * x`` and
    likewise for the bias. Weights start at zero, so the untrained model
    predicts the uniform distribution.

    Parameters
    ----------
    n_classes: int
        Size of the label space.

    learning_rate: float (default=0.01)
        Constant SGD step size.

    l2: float (default=0.0)
        Optional ridge penalty coefficient added to the weight gradient.
    """

    def __init__(self, n_classes: int, learning_rate: float = 0.01, l2: float = 0.0):
        self.n_classes = n_classes
        self.learning_rate = learning_rate
        self.l2 = l2

    def reset(self):
        for attr in ("weights_", "bias_", "_n_learned"):
            if hasattr(self, attr):
                delattr(self, attr)
        return self

    def _ensure_state(self, n_features: int):
        if not hasattr(self, "weights_"):
            self.weights_ = np.zeros((self.n_classes, n_features))
            self.bias_ = np.zeros(self.n_classes)
        elif self.weights_.shape[1] != n_features:
            raise ShapeError(
                f"expected {self.weights_.shape[1]} features, got {n_features}"
            )

    def _predict_proba_rows(self, X):
        if not hasattr(self, "weights_"):
            return np.full((X.shape[0], self.n_classes), 1.0 / self.n_classes)
        if X.shape[1] != self.weights_.shape[1]:
            raise ShapeError(
                f"expected {self.weights_.shape[1]} features, got {X.shape[1]}"
            )
        return softmax(X @ self.weights_.T + self.bias_)

    def _learn_one(self, x, y):
        self._ensure_state(x.shape[0])
        p = softmax(self.weights_ @ x + self.bias_)
        grad = p.copy()
        grad[y] -= 1.0
        self.weights_ -= self.learning_rate * (grad[:, None] * x[None, :] + self.l2 * self.weights_)
        self.bias_ -= self.learning_rate * grad
        if not (np.all(np.isfinite(self.weights_)) and np.all(np.isfinite(self.bias_))):
            raise TrainingDivergedError("weight update produced non-finite values")


class SlidingWindowKNNClassifier(StreamingClassifier):
    """k-nearest-neighbors over a bounded FIFO window of recent instances.

    ``learn_one`` appends to the window, evicting the oldest instance once
    capacity is reached. Prediction returns class vote fractions among the
    ``min(n_neighbors, window size)`` nearest stored instances by Euclidean
    distance; distance ties resolve by insertion order, older first. An
    empty window predicts the uniform distribution.

    Parameters
    ----------
    n_classes: int
        Size of the label space.

    n_neighbors: int (default=5)
        Number of neighbors to vote.

    max_window_size: int (default=1000)
        Capacity of the instance window.
    """

    def __init__(self, n_classes: int, n_neighbors: int = 5, max_window_size: int = 1000):
        self.n_classes = n_classes
        self.n_neighbors = n_neighbors
        self.max_window_size = max_window_size

    def reset(self):
        for attr in ("_wx", "_wy", "_seq", "_size", "_next", "_counter", "_n_learned"):
            if hasattr(self, attr):
                delattr(self, attr)
        return self

    @property
    def window_size_(self) -> int:
        return getattr(self, "_size", 0)

    def window_contents(self) -> tuple[np.ndarray, np.ndarray]:
        """Stored (features, labels) in insertion order, oldest first."""
        if self.window_size_ == 0:
            return np.empty((0, 0)), np.empty(0, dtype=np.int64)
        order = np.argsort(self._seq[: self._size], kind="stable")
        return self._wx[: self._size][order].copy(), self._wy[: self._size][order].copy()

    def _ensure_state(self, n_features: int):
        if not hasattr(self, "_wx"):
            self._wx = np.empty((self.max_window_size, n_features))
            self._wy = np.empty(self.max_window_size, dtype=np.int64)
            self._seq = np.empty(self.max_window_size, dtype=np.int64)
            self._size = 0
            self._next = 0
            self._counter = 0
        elif self._wx.shape[1] != n_features:
            raise ShapeError(f"expected {self._wx.shape[1]} features, got {n_features}")

    def _learn_one(self, x, y):
        self._ensure_state(x.shape[0])
        self._wx[self._next] = x
        self._wy[self._next] = y
        self._seq[self._next] = self._counter
        self._counter += 1
        self._next = (self._next + 1) % self.max_window_size
        self._size = min(self._size + 1, self.max_window_size)

    def _predict_proba_rows(self, X):
        n = X.shape[0]
        if self.window_size_ == 0:
            return np.full((n, self.n_classes), 1.0 / self.n_classes)
        wx = self._wx[: self._size]
        wy = self._wy[: self._size]
        seq = self._seq[: self._size]
        if X.shape[1] != wx.shape[1]:
            raise ShapeError(f"expected {wx.shape[1]} features, got {X.shape[1]}")
        k = min(self.n_neighbors, self._size)

        # squared distances via the dot-product expansion (BLAS-friendly)
        d2 = np.maximum(
            (X * X).sum(axis=1)[:, None] + (wx * wx).sum(axis=1)[None, :] - 2.0 * (X @ wx.T),
            0.0,
        )
        probs = np.empty((n, self.n_classes))
        if k == self._size:
            chosen = np.broadcast_to(np.arange(self._size), (n, self._size))
        else:
            chosen = np.argpartition(d2, k - 1, axis=1)[:, :k]
            kth = np.take_along_axis(d2, chosen, axis=1).max(axis=1)
            # rows whose k-th distance is tied across the cut need the
            # insertion-order rule applied exactly
            tied = (d2 <= kth[:, None]).sum(axis=1) > k
            for i in np.flatnonzero(tied):
                chosen[i] = np.lexsort((seq, d2[i]))[:k]
        for i in range(n):
            votes = np.bincount(wy[chosen[i]], minlength=self.n_classes)
            probs[i] = votes / k
        return probs
