"""Uncertainty-driven label querying and the test-then-maybe-train stream loop.

Each stream instance is first predicted, then the query policy decides
whether to ask the simulated oracle for its label; only queried instances
are learned, skipped ones are discarded. After every step (or every
``eval_every`` steps) the current model is scored on the held-out test set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import DataIntegrityError, Instance, Prediction


class QueryMode(Enum):
    NO_AL = "no_al"
    AL = "al"


UNCERTAINTY_KINDS = ("least_confidence", "margin", "entropy")


def _probs(p) -> np.ndarray:
    return p.probs if isinstance(p, Prediction) else np.asarray(p, dtype=np.float64)


def uncertainty(p, kind: str = "least_confidence") -> float:
    """Classification uncertainty of a prediction.

    ``least_confidence`` (the default) is ``1 - max_c p_c``, ranging over
    ``[0, 1 - 1/C]``. ``margin`` is one minus the top-two probability gap;
    ``entropy`` is the Shannon entropy in nats.
    """
    probs = _probs(p)
    if kind == "least_confidence":
        return float(1.0 - probs.max())
    if kind == "margin":
        top2 = np.partition(probs, -2)[-2:]
        return float(1.0 - (top2[1] - top2[0]))
    if kind == "entropy":
        pos = probs[probs > 0]
        return float(-(pos * np.log(pos)).sum())
    raise ValueError(f"unknown uncertainty kind {kind!r}, expected one of {UNCERTAINTY_KINDS}")


@dataclass(frozen=True)
class QueryPolicy:
    """When to ask the oracle: always (NO_AL) or on uncertainty strictly
    above the threshold (AL)."""

    mode: QueryMode = QueryMode.AL
    threshold: float = 0.55
    kind: str = "least_confidence"

    def __post_init__(self):
        if not np.isfinite(self.threshold):
            raise ValueError("threshold must be finite")
        if self.kind not in UNCERTAINTY_KINDS:
            raise ValueError(f"unknown uncertainty kind {self.kind!r}")


def should_query(policy: QueryPolicy, p) -> bool:
    """NO_AL queries everything; AL queries only strictly-above-threshold."""
    if policy.mode is QueryMode.NO_AL:
        return True
    return uncertainty(p, policy.kind) > policy.threshold


class OracleSim:
    """Label source simulated from held-out ground truth."""

    def __init__(self, labels_by_id: dict[str, int]):
        self._labels = dict(labels_by_id)

    def label_for(self, instance_id: str) -> int:
        try:
            return self._labels[instance_id]
        except KeyError:
            raise DataIntegrityError(f"oracle has no label for instance {instance_id!r}") from None

    def __contains__(self, instance_id: str) -> bool:
        return instance_id in self._labels

    def __len__(self) -> int:
        return len(self._labels)


@dataclass(frozen=True)
class ALRecord:
    """One stream step: what was predicted, whether it was queried, and the
    test-set score after the step (None on steps where scoring was skipped)."""

    step: int
    probs: np.ndarray
    uncertainty: float
    queried: bool
    test_auc_after: float | None = None


@dataclass
class StreamResult:
    records: list[ALRecord] = field(default_factory=list)

    @property
    def n_queried(self) -> int:
        return sum(1 for r in self.records if r.queried)

    def auc_series(self) -> np.ndarray:
        """Test AUC at the evaluated steps, in step order."""
        return np.array([r.test_auc_after for r in self.records if r.test_auc_after is not None])


def run_stream(
    learner,
    stream: list[Instance],
    oracle: OracleSim,
    policy: QueryPolicy,
    evaluator,
    eval_every: int = 1,
) -> list[ALRecord]:
    """Consume the stream in order: predict, maybe query and learn, score.

    `evaluator` is a callable scoring the current learner on the held-out
    test set (typically OvR-weighted AUC). Scoring runs every `eval_every`
    steps and always on the final step. Skipped instances are discarded;
    the learner only ever sees queried labels.
    """
    if not stream:
        raise ValueError("stream must be non-empty")
    if eval_every < 1:
        raise ValueError("eval_every must be >= 1")
    for inst in stream:
        if inst.id not in oracle:
            raise DataIntegrityError(f"oracle has no label for instance {inst.id!r}")

    records = []
    last = len(stream) - 1
    for step, inst in enumerate(stream):
        probs = learner.predict_proba_one(inst.features)
        u = uncertainty(probs, policy.kind)
        queried = should_query(policy, probs)
        if queried:
            learner.learn_one(inst.features, oracle.label_for(inst.id))
        auc = None
        if step % eval_every == 0 or step == last:
            auc = float(evaluator(learner))
        records.append(
            ALRecord(step=step, probs=probs, uncertainty=u, queried=queried, test_auc_after=auc)
        )
    return records


def effort_gain(records: list[ALRecord]) -> float:
    """Percentage of stream instances never shown to the oracle."""
    if not records:
        raise ValueError("effort gain is undefined on an empty record list")
    skipped = sum(1 for r in records if not r.queried)
    return 100.0 * skipped / len(records)


def replay_query_count(records: list[ALRecord], threshold: float) -> int:
    """How many recorded steps would have been queried at a different
    threshold, replaying the frozen uncertainty log offline."""
    return sum(1 for r in records if r.uncertainty > threshold)
