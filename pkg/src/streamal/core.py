"""Shared domain types, probability helpers and the seeded-randomness contract.

Everything downstream (feature selection, learners, the stream loop, the
cross-validation harness) works in terms of the small value types defined
here: class labels, instances carrying an embedding vector, probability
predictions, and `SeededRng` handles that make every run replayable.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

PROB_SUM_TOL = 1e-9


# ---------------------------------------------------------------------------
# Errors


class InvalidScoreError(ValueError):
    """A score vector contains negative or non-finite entries."""


class ShapeError(ValueError):
    """An array does not have the expected dimensionality or length."""


class DomainError(ValueError):
    """A numeric argument lies outside the function's domain."""


class InsufficientDataError(ValueError):
    """Not enough samples to carry out the requested estimate."""


class TrainingDivergedError(RuntimeError):
    """A learner update produced non-finite parameters."""


class StratificationError(ValueError):
    """A class has too few instances for the requested fold count."""


class UndefinedAUCError(ValueError):
    """AUC is undefined because only one class is present."""


class DataIntegrityError(ValueError):
    """Stream data and oracle ground truth disagree."""


class InvalidSpecError(ValueError):
    """A synthetic-data generator spec is inconsistent."""


class LoadError(ValueError):
    """An embeddings file violates the expected schema."""


class ConfigError(ValueError):
    """A run configuration value is missing, unknown or out of range."""


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class ClassLabel:
    """A class in the label space: contiguous index plus a human-readable name."""

    index: int
    name: str

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"class index must be non-negative, got {self.index}")


@dataclass(frozen=True)
class Instance:
    """One unit of stream data: an id, an embedding vector, an optional label."""

    id: str
    features: np.ndarray
    label: ClassLabel | None = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 1:
            raise ShapeError(f"features must be 1-D, got shape {feats.shape}")
        if not np.all(np.isfinite(feats)):
            raise ValueError(f"instance {self.id!r} has non-finite feature values")
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)

    @property
    def n_features(self) -> int:
        return self.features.shape[0]


@dataclass
class Dataset:
    """A labeled instance collection plus its class registry.

    `classes` fixes the label space: indices are contiguous ``0..C-1`` and
    names are unique. `meta` carries generator provenance (seed, noise
    indices, drift step) and is never consumed by algorithms.
    """

    instances: list[Instance]
    classes: list[ClassLabel]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.classes) < 2:
            raise ValueError("a dataset needs at least two classes")
        for i, c in enumerate(self.classes):
            if c.index != i:
                raise ValueError("class indices must be contiguous from 0")
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise ValueError("class names must be unique")

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def n_features(self) -> int:
        return self.instances[0].n_features if self.instances else 0

    def feature_matrix(self) -> np.ndarray:
        return np.stack([inst.features for inst in self.instances])

    def label_array(self) -> np.ndarray:
        labels = np.empty(len(self.instances), dtype=np.int64)
        for i, inst in enumerate(self.instances):
            if inst.label is None:
                raise ValueError(f"instance {inst.id!r} is unlabeled")
            labels[i] = inst.label.index
        return labels

    def ids(self) -> list[str]:
        return [inst.id for inst in self.instances]


@dataclass(frozen=True)
class Prediction:
    """A probability distribution over the C classes."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.shape[0] < 1:
            raise ShapeError(f"probs must be a non-empty 1-D vector, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
            raise InvalidScoreError("probabilities must be finite and within [0, 1]")
        if abs(float(p.sum()) - 1.0) > PROB_SUM_TOL:
            raise InvalidScoreError(f"probabilities sum to {p.sum()!r}, expected 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def n_classes(self) -> int:
        return self.probs.shape[0]


# ---------------------------------------------------------------------------
# Probability utilities


def normalize(scores) -> Prediction:
    """Turn a vector of non-negative scores into a Prediction.

    Scores are scaled to sum to one. The all-zero vector carries no
    information and maps to the uniform distribution.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.shape[0] < 1:
        raise ShapeError(f"scores must be a non-empty 1-D vector, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise InvalidScoreError("scores must be finite")
    if np.any(s < 0):
        raise InvalidScoreError("scores must be non-negative")
    total = float(s.sum())
    if total == 0.0:
        probs = np.full(s.shape[0], 1.0 / s.shape[0])
    else:
        probs = s / total
    return Prediction(probs)


def argmax_class(p: Prediction) -> int:
    """Index of the most probable class; ties break toward the lowest index."""
    return int(np.argmax(p.probs))


# ---------------------------------------------------------------------------
# Seeded randomness


def _encode_path_step(step) -> int:
    if isinstance(step, str):
        return zlib.crc32(step.encode("utf-8"))
    if isinstance(step, (int, np.integer)):
        if step < 0:
            raise ValueError("path steps must be non-negative integers or strings")
        return int(step)
    raise TypeError(f"path step must be int or str, got {type(step).__name__}")


@dataclass(frozen=True)
class SeededRng:
    """A deterministic random source addressed by a base seed and a derivation path.

    Two handles with the same ``(seed, path)`` yield identical draw sequences
    regardless of creation order or thread scheduling, which is what makes
    parallel fold evaluation reproducible. Handles are cheap; derive one per
    (repeat, fold, stage) instead of sharing generators.
    """

    seed: int
    path: tuple[int, ...] = ()

    def child(self, *steps) -> "SeededRng":
        return SeededRng(self.seed, self.path + tuple(_encode_path_step(s) for s in steps))

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=self.path))

    def int_seed(self) -> int:
        """A derived integer seed for APIs that take a plain seed."""
        return int(np.random.SeedSequence(self.seed, spawn_key=self.path).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Input validation helpers


def as_feature_vector(x, n_features: int | None = None) -> np.ndarray:
    """Validate and convert a single feature vector to 1-D float64."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"expected a 1-D feature vector, got shape {arr.shape}")
    if n_features is not None and arr.shape[0] != n_features:
        raise ShapeError(f"expected {n_features} features, got {arr.shape[0]}")
    return arr


def as_feature_matrix(X, n_features: int | None = None) -> np.ndarray:
    """Validate and convert a batch of feature vectors to 2-D float64."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-D feature matrix, got shape {arr.shape}")
    if n_features is not None and arr.shape[1] != n_features:
        raise ShapeError(f"expected {n_features} feature columns, got {arr.shape[1]}")
    return arr
