"""Name registry for the five streaming learners."""

from __future__ import annotations

from .learners import SlidingWindowKNNClassifier, StreamingClassifier, StreamingLogisticRegression
from .trees import (
    HoeffdingAdaptiveTreeClassifier,
    HoeffdingTreeClassifier,
    StochasticGradientTreeClassifier,
)

LEARNERS = {
    "slgr": StreamingLogisticRegression,
    "sknn": SlidingWindowKNNClassifier,
    "sgt": StochasticGradientTreeClassifier,
    "ht": HoeffdingTreeClassifier,
    "hat": HoeffdingAdaptiveTreeClassifier,
}


def make_learner(name: str, n_classes: int, params: dict | None = None) -> StreamingClassifier:
    """Instantiate a registered learner; unknown params are rejected."""
    if name not in LEARNERS:
        raise KeyError(f"unknown learner {name!r}; registry: {sorted(LEARNERS)}")
    return LEARNERS[name](n_classes=n_classes, **(params or {}))
