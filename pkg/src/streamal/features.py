"""Mutual-information feature scoring and top-sqrt(N) selection.

Each real-valued feature column is scored against the discrete label with a
nearest-neighbor mutual-information estimate (continuous/discrete variant:
``I = psi(N) - <psi(N_y)> + psi(k) - <psi(m_i)>`` where the k-th neighbor
distance is taken among same-class points and ``m_i`` counts all points
strictly within that distance). The ``floor(sqrt(N))`` best-scoring columns
are kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .core import (
    DomainError,
    InsufficientDataError,
    Instance,
    ShapeError,
    as_feature_matrix,
)

_ASYMPTOTIC_CUTOFF = 10.0
_JITTER_SCALE = 1e-10


def digamma(x):
    """Digamma function for positive reals, elementwise on arrays.

    Uses the recurrence ``psi(x) = psi(x+1) - 1/x`` to lift arguments to
    x >= 10, then the asymptotic (Bernoulli) series. Absolute error is
    below 1e-12 for x >= 1e-3.
    """
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr).astype(np.float64).copy()
    if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr <= 0)):
        raise DomainError("digamma requires finite x > 0")
    acc = np.zeros_like(arr)
    while True:
        small = arr < _ASYMPTOTIC_CUTOFF
        if not small.any():
            break
        acc[small] -= 1.0 / arr[small]
        arr[small] += 1.0
    inv = 1.0 / arr
    u = inv * inv
    # B_{2k}/(2k) tail, truncated where the next term is ~1e-15 at x=10
    tail = u * (
        1 / 12
        - u * (1 / 120 - u * (1 / 252 - u * (1 / 240 - u * (1 / 132 - u * (691 / 32760)))))
    )
    out = acc + np.log(arr) - 0.5 * inv - tail
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class MIScore:
    """Mutual information of one feature column with the label, in nats."""

    feature_index: int
    mi_nats: float


@dataclass(frozen=True)
class SelectionMask:
    """Indices of the kept feature columns, ordered by descending score.

    ``n_train`` is the number of labeled instances the selection was fit on;
    ``len(selected) == min(floor(sqrt(n_train)), D)``. ``warnings`` records
    columns that could not be scored (degenerate or data-starved) and were
    assigned score 0 instead of aborting the selection.
    """

    selected: tuple[int, ...]
    n_train: int
    scores: tuple[float, ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if len(set(self.selected)) != len(self.selected):
            raise ValueError("selected feature indices must be unique")
        if len(self.selected) < 1:
            raise ValueError("a selection mask must keep at least one feature")

    @property
    def k(self) -> int:
        return len(self.selected)


def _resolve_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(0 if rng is None else rng)


def estimate_mi_cd(values, labels, k: int = 3, rng=None) -> float:
    """Nearest-neighbor MI estimate (nats) between a real feature and labels.

    For each point, the distance to its k-th nearest same-class neighbor
    (1-D absolute difference) defines a radius; ``m_i`` counts all points
    strictly inside it. Exact duplicate values get deterministic seeded
    jitter of 1e-10 x value-range so neighbor distances are well defined.
    Negative raw estimates clamp to 0.

    Raises
    ------
    InsufficientDataError
        If any class present has fewer than k+1 instances.
    """
    x = np.asarray(values, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.int64).ravel()
    if x.shape[0] != y.shape[0]:
        raise ShapeError(f"values ({x.shape[0]}) and labels ({y.shape[0]}) differ in length")
    if not np.all(np.isfinite(x)):
        raise ValueError("feature values must be finite")
    if k < 1:
        raise ValueError("k must be >= 1")
    n = x.shape[0]

    classes, counts = np.unique(y, return_counts=True)
    small = counts < k + 1
    if small.any():
        bad = classes[small][0]
        raise InsufficientDataError(
            f"class {bad} has {counts[small][0]} instances, need at least {k + 1}"
        )

    value_range = float(x.max() - x.min())
    if value_range == 0.0:
        return 0.0
    if np.unique(x).shape[0] < n:
        gen = _resolve_rng(rng)
        x = x + gen.uniform(-0.5, 0.5, size=n) * (_JITTER_SCALE * value_range)

    radius = np.empty(n)
    for c in classes:
        idx = np.flatnonzero(y == c)
        sub = x[idx]
        # row j: distances to every same-class point; column k skips self (0)
        dists = np.abs(sub[:, None] - sub[None, :])
        radius[idx] = np.partition(dists, k, axis=1)[:, k]

    order = np.sort(x)
    lo = np.searchsorted(order, x - radius, side="right")
    hi = np.searchsorted(order, x + radius, side="left")
    m = hi - lo  # strictly-within count, self included

    n_y = counts[np.searchsorted(classes, y)]
    mi = digamma(n) - float(np.mean(digamma(n_y))) + digamma(k) - float(np.mean(digamma(m)))
    return max(0.0, mi)


def top_k_count(n_train: int, n_features: int) -> int:
    """floor(sqrt(N)) kept features, at least 1, never more than D."""
    return max(1, min(math.isqrt(n_train), n_features))


def select_top_k(X, y, k: int = 3, rng=None) -> SelectionMask:
    """Score every column with `estimate_mi_cd` and keep the floor(sqrt(N)) best.

    Columns that cannot be scored (constant, or a class too small for the
    neighbor count) get score 0 and a warning entry rather than failing the
    whole selection. Ties rank by ascending column index.
    """
    X = as_feature_matrix(X)
    y = np.asarray(y, dtype=np.int64).ravel()
    n, d = X.shape
    if n < 1:
        raise InsufficientDataError("need at least one labeled instance")
    if y.shape[0] != n:
        raise ShapeError(f"X has {n} rows but y has {y.shape[0]} entries")

    base = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(
        0 if rng is None else rng
    )
    # independent jitter stream per column so per-feature work can be
    # parallelized without changing results
    seeds = base.integers(0, 2**63 - 1, size=d)

    scores = np.zeros(d)
    warnings: list[str] = []
    for j in range(d):
        try:
            scores[j] = estimate_mi_cd(X[:, j], y, k=k, rng=np.random.default_rng(seeds[j]))
        except InsufficientDataError as exc:
            warnings.append(f"feature {j}: {exc}")
            scores[j] = 0.0

    keep = top_k_count(n, d)
    order = np.lexsort((np.arange(d), -scores))[:keep]
    return SelectionMask(
        selected=tuple(int(j) for j in order),
        n_train=n,
        scores=tuple(float(scores[j]) for j in order),
        warnings=tuple(warnings),
    )


def apply_mask(instance: Instance, mask: SelectionMask) -> Instance:
    """Restrict an instance's features to the mask's columns, mask order."""
    top = max(mask.selected)
    if instance.n_features <= top:
        raise ShapeError(
            f"instance has {instance.n_features} features, mask needs index {top}"
        )
    return Instance(
        id=instance.id,
        features=instance.features[list(mask.selected)],
        label=instance.label,
    )


def apply_mask_matrix(X, mask: SelectionMask) -> np.ndarray:
    """Column-select a feature matrix by the mask, mask order."""
    X = as_feature_matrix(X)
    top = max(mask.selected)
    if X.shape[1] <= top:
        raise ShapeError(f"matrix has {X.shape[1]} columns, mask needs index {top}")
    return X[:, list(mask.selected)]


class TopKMutualInfoSelector(BaseEstimator, TransformerMixin):
    """Transformer keeping the floor(sqrt(N)) columns with highest label MI.

    Parameters
    ----------
    n_neighbors: int (default=3)
        Neighbor count for the MI estimate.

    random_state: int (default=0)
        Seed for the duplicate-value jitter; selection is deterministic
        given the data and this seed.
    """

    def __init__(self, n_neighbors: int = 3, random_state: int = 0):
        self.n_neighbors = n_neighbors
        self.random_state = random_state

    def fit(self, X, y):
        self.mask_ = select_top_k(
            X, y, k=self.n_neighbors, rng=np.random.default_rng(self.random_state)
        )
        self.n_features_in_ = as_feature_matrix(X).shape[1]
        return self

    def transform(self, X):
        if not hasattr(self, "mask_"):
            raise RuntimeError("selector must be fitted before transform")
        return apply_mask_matrix(X, self.mask_)

    def get_support(self) -> np.ndarray:
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[list(self.mask_.selected)] = True
        return mask
