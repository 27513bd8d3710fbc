"""Synthetic embedding datasets: Gaussian class blobs and an abrupt-drift
stream variant.

Class ``c`` is an isotropic unit-variance Gaussian centered at
``c * separation`` along axis ``c``, so separability is controlled by a
single number. Label noise reassigns a seeded subset of labels uniformly
at random. The drift stream permutes the class-to-center mapping cyclically
at a fixed step, which is what the adaptive tree's detector must catch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ClassLabel, Dataset, Instance, InvalidSpecError, SeededRng


@dataclass(frozen=True)
class BlobSpec:
    """Gaussian-blob dataset description.

    The defaults are the desk-scale benchmark: 510 instances in three
    imbalanced classes over 512 dimensions, well separated, with 5% label
    noise.
    """

    n_per_class: tuple[int, ...] = (300, 150, 60)
    dims: int = 512
    separation: float = 6.0
    noise_frac: float = 0.05
    seed: int = 0
    class_names: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.n_per_class) < 2:
            raise InvalidSpecError("need at least two classes")
        if any(n < 0 for n in self.n_per_class):
            raise InvalidSpecError("class counts must be non-negative")
        if self.dims < 1:
            raise InvalidSpecError("dims must be >= 1")
        if len(self.n_per_class) > self.dims:
            raise InvalidSpecError(
                f"{len(self.n_per_class)} classes need at least that many dims, got {self.dims}"
            )
        if self.separation < 0:
            raise InvalidSpecError("separation must be >= 0")
        if not 0.0 <= self.noise_frac < 1.0:
            raise InvalidSpecError("noise_frac must lie in [0, 1)")
        if self.class_names and len(self.class_names) != len(self.n_per_class):
            raise InvalidSpecError("class_names must match n_per_class in length")

    @property
    def n_classes(self) -> int:
        return len(self.n_per_class)

    @property
    def n_total(self) -> int:
        return sum(self.n_per_class)

    def labels(self) -> list[ClassLabel]:
        names = self.class_names or tuple(f"class_{c}" for c in range(self.n_classes))
        return [ClassLabel(index=c, name=names[c]) for c in range(self.n_classes)]

    def centers(self) -> np.ndarray:
        centers = np.zeros((self.n_classes, self.dims))
        for c in range(self.n_classes):
            centers[c, c] = c * self.separation
        return centers


@dataclass(frozen=True)
class DriftSpec:
    """Blob stream whose class-to-center mapping permutes cyclically at
    ``drift_step``: from that step on, class ``y`` draws from the center of
    class ``(y + 1) mod C``."""

    blobs: BlobSpec = field(default_factory=BlobSpec)
    drift_step: int = 255

    def __post_init__(self):
        if not 0 < self.drift_step <= self.blobs.n_total:
            raise InvalidSpecError(
                f"drift_step must lie in (0, {self.blobs.n_total}], got {self.drift_step}"
            )


def _apply_label_noise(labels: np.ndarray, spec: BlobSpec, rng: np.random.Generator):
    n = labels.shape[0]
    n_flips = int(np.rint(spec.noise_frac * n))
    flip_idx = rng.choice(n, size=n_flips, replace=False)
    labels[flip_idx] = rng.integers(0, spec.n_classes, size=n_flips)
    return np.sort(flip_idx)


def gen_blobs(spec: BlobSpec) -> Dataset:
    """Generate the blob dataset, grouped by class, labels then noised.

    Deterministic per seed; the chosen noise indices are recorded in
    ``dataset.meta["noise_indices"]``.
    """
    rng = SeededRng(spec.seed).child("blobs").generator()
    centers = spec.centers()
    labels = np.repeat(np.arange(spec.n_classes), spec.n_per_class)
    features = rng.standard_normal((spec.n_total, spec.dims)) + centers[labels]
    noise_idx = _apply_label_noise(labels, spec, rng)

    classes = spec.labels()
    instances = [
        Instance(id=f"b{i:06d}", features=features[i], label=classes[labels[i]])
        for i in range(spec.n_total)
    ]
    meta = {
        "generator": "blobs",
        "seed": spec.seed,
        "n_per_class": list(spec.n_per_class),
        "separation": spec.separation,
        "noise_frac": spec.noise_frac,
        "noise_indices": [int(i) for i in noise_idx],
    }
    return Dataset(instances=instances, classes=classes, meta=meta)


def gen_drift_stream(spec: DriftSpec) -> Dataset:
    """Generate the ordered drift stream.

    Class labels are interleaved by a seeded shuffle; features are drawn
    from the label's center before ``drift_step`` and from the cyclically
    permuted center at and after it. ``drift_step == n_total`` degenerates
    to a plain blob stream.
    """
    blobs = spec.blobs
    rng = SeededRng(blobs.seed).child("drift-stream").generator()
    centers = blobs.centers()
    labels = np.repeat(np.arange(blobs.n_classes), blobs.n_per_class)
    rng.shuffle(labels)

    center_of = labels.copy()
    center_of[spec.drift_step :] = (labels[spec.drift_step :] + 1) % blobs.n_classes
    features = rng.standard_normal((blobs.n_total, blobs.dims)) + centers[center_of]
    noise_idx = _apply_label_noise(labels, blobs, rng)

    classes = blobs.labels()
    instances = [
        Instance(id=f"s{i:06d}", features=features[i], label=classes[labels[i]])
        for i in range(blobs.n_total)
    ]
    meta = {
        "generator": "drift",
        "seed": blobs.seed,
        "n_per_class": list(blobs.n_per_class),
        "separation": blobs.separation,
        "noise_frac": blobs.noise_frac,
        "drift_step": spec.drift_step,
        "noise_indices": [int(i) for i in noise_idx],
    }
    return Dataset(instances=instances, classes=classes, meta=meta)
