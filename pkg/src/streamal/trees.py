"""Incremental decision trees: Hoeffding tree, its drift-adaptive variant,
and a gradient-based tree, all over numeric features.

Numeric attributes are summarized per leaf by class-conditional Gaussians
(Welford running moments); candidate splits are threshold cuts whose child
class counts are estimated from Gaussian tail mass, so no instances are
replayed and leaf memory stays bounded.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import stats
from scipy.special import ndtr

from .core import DomainError, ShapeError
from .drift import Adwin
from .learners import StreamingClassifier, softmax

_EPS_COUNT = 1e-12


class InvalidSplitError(ValueError):
    """Child counts do not add up to the parent's."""


def hoeffding_bound(value_range: float, delta: float, n: int) -> float:
    """Confidence radius eps = sqrt(R^2 ln(1/delta) / (2n))."""
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if value_range <= 0:
        raise DomainError(f"range must be positive, got {value_range}")
    if n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    return math.sqrt(value_range * value_range * math.log(1.0 / delta) / (2.0 * n))


def _entropy_bits(counts: np.ndarray) -> float:
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def info_gain(parent_counts, left_counts, right_counts) -> float:
    """Entropy reduction (bits) of splitting `parent` into the two children."""
    parent = np.asarray(parent_counts, dtype=np.float64)
    left = np.asarray(left_counts, dtype=np.float64)
    right = np.asarray(right_counts, dtype=np.float64)
    if parent.shape != left.shape or parent.shape != right.shape:
        raise InvalidSplitError("count vectors must share one shape")
    if np.any(parent < 0) or np.any(left < 0) or np.any(right < 0):
        raise InvalidSplitError("counts must be non-negative")
    if not np.allclose(left + right, parent, rtol=1e-9, atol=1e-9):
        raise InvalidSplitError("left + right must equal parent elementwise")
    n = parent.sum()
    if n < 1:
        raise InvalidSplitError("parent must hold at least one instance")
    n_l, n_r = left.sum(), right.sum()
    gain = _entropy_bits(parent)
    gain -= (n_l / n) * _entropy_bits(left)
    gain -= (n_r / n) * _entropy_bits(right)
    return float(gain)


class GaussianObserver:
    """Per-leaf numeric attribute summary: class-conditional running
    Gaussians (Welford) per feature plus the observed value range."""

    def __init__(self, n_classes: int, n_features: int):
        self.counts = np.zeros(n_classes)
        self.mean = np.zeros((n_classes, n_features))
        self.m2 = np.zeros((n_classes, n_features))
        self.fmin = np.full(n_features, np.inf)
        self.fmax = np.full(n_features, -np.inf)

    @property
    def n(self) -> float:
        return float(self.counts.sum())

    def update(self, x: np.ndarray, y: int):
        self.counts[y] += 1
        delta = x - self.mean[y]
        self.mean[y] += delta / self.counts[y]
        self.m2[y] += delta * (x - self.mean[y])
        np.minimum(self.fmin, x, out=self.fmin)
        np.maximum(self.fmax, x, out=self.fmax)

    def variance(self) -> np.ndarray:
        var = np.zeros_like(self.m2)
        filled = self.counts > 1
        var[filled] = self.m2[filled] / (self.counts[filled] - 1)[:, None]
        return var

    def left_mass(self, thresholds: np.ndarray) -> np.ndarray:
        """P(X <= t | class) per (class, feature, threshold).

        `thresholds` has shape (n_features, n_thresholds). Classes never
        observed get mass 0.5 (uninformed); zero-variance classes degrade
        to a step function at their mean.
        """
        c, d = self.mean.shape
        t = thresholds[None, :, :]  # (1, D, T)
        mu = self.mean[:, :, None]
        sd = np.sqrt(self.variance())[:, :, None]
        mass = np.where(t >= mu, 1.0, 0.0)
        spread = np.broadcast_to(sd > 0, mass.shape)
        z = np.divide(t - mu, sd, out=np.zeros_like(mass), where=spread)
        mass = np.where(spread, ndtr(z), mass)
        unseen = self.counts == 0
        if unseen.any():
            mass[unseen] = 0.5
        return mass


def _candidate_thresholds(fmin: np.ndarray, fmax: np.ndarray, n_candidates: int) -> np.ndarray:
    """Evenly spaced interior thresholds over each feature's observed range."""
    grid = np.linspace(0.0, 1.0, n_candidates + 2)[1:-1]
    return fmin[:, None] + (fmax - fmin)[:, None] * grid[None, :]


def _batched_entropy_bits(counts: np.ndarray) -> np.ndarray:
    """Entropy in bits along axis 0 of a (C, ...) count array."""
    total = counts.sum(axis=0)
    safe_total = np.where(total > 0, total, 1.0)
    p = counts / safe_total
    terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return np.where(total > 0, -terms.sum(axis=0), 0.0)


class _SplitCandidate:
    __slots__ = ("gain", "second_gain", "feature", "threshold", "left_fraction")

    def __init__(self, gain, second_gain, feature, threshold, left_fraction):
        self.gain = gain
        self.second_gain = second_gain
        self.feature = feature
        self.threshold = threshold
        self.left_fraction = left_fraction


def _best_split(obs: GaussianObserver, n_candidates: int) -> _SplitCandidate | None:
    """Best and second-best (per feature) info-gain candidates from the
    observer's Gaussian child-count estimates."""
    usable = obs.fmax > obs.fmin
    if not usable.any() or obs.n < 1:
        return None
    thresholds = _candidate_thresholds(obs.fmin, obs.fmax, n_candidates)
    mass = obs.left_mass(thresholds)  # (C, D, T)
    left = obs.counts[:, None, None] * mass
    right = obs.counts[:, None, None] - left
    n = obs.n
    parent_h = _entropy_bits(obs.counts)
    gains = (
        parent_h
        - (left.sum(axis=0) / n) * _batched_entropy_bits(left)
        - (right.sum(axis=0) / n) * _batched_entropy_bits(right)
    )  # (D, T)
    gains[~usable, :] = -np.inf

    per_feature = gains.max(axis=1)
    best_f = int(np.argmax(per_feature))
    best_t = int(np.argmax(gains[best_f]))
    others = per_feature[np.arange(per_feature.shape[0]) != best_f]
    second = float(others.max()) if others.size else -np.inf
    second = max(second, 0.0)  # the no-split alternative gains nothing
    return _SplitCandidate(
        gain=float(per_feature[best_f]),
        second_gain=second,
        feature=best_f,
        threshold=float(thresholds[best_f, best_t]),
        left_fraction=mass[:, best_f, best_t].copy(),
    )


class _Leaf:
    __slots__ = ("pred_counts", "obs", "n_since_attempt", "adwin", "alternate")

    def __init__(self, n_classes: int, n_features: int, pred_counts=None):
        self.pred_counts = (
            np.zeros(n_classes) if pred_counts is None else np.asarray(pred_counts, float)
        )
        self.obs = GaussianObserver(n_classes, n_features)
        self.n_since_attempt = 0
        self.adwin = None
        self.alternate = None


class _Split:
    __slots__ = ("feature", "threshold", "left", "right", "adwin", "alternate")

    def __init__(self, feature: int, threshold: float, left, right):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.adwin = None
        self.alternate = None

    def route(self, x: np.ndarray):
        return self.left if x[self.feature] <= self.threshold else self.right


def _route_to_leaf(node, x: np.ndarray) -> _Leaf:
    while isinstance(node, _Split):
        node = node.route(x)
    return node


def _iter_leaves(node):
    stack = [node]
    while stack:
        cur = stack.pop()
        if isinstance(cur, _Split):
            stack.append(cur.left)
            stack.append(cur.right)
        else:
            yield cur


def _structure(node):
    """Hashable tree shape: thresholds and leaf counts, for equality checks."""
    if isinstance(node, _Split):
        return ("split", node.feature, node.threshold, _structure(node.left), _structure(node.right))
    return ("leaf", tuple(float(c) for c in node.pred_counts))


class HoeffdingTreeClassifier(StreamingClassifier):
    """Incremental decision tree with Hoeffding-bound split decisions.

    Every `grace_period` instances at a leaf, candidate threshold splits
    (estimated from the leaf's Gaussian observers) are ranked by info gain;
    the leaf splits when the best feature's gain beats the runner-up by the
    Hoeffding radius ``eps = sqrt(R^2 ln(1/delta) / 2n)`` with ``R = log2 C``,
    or when ``eps`` drops below the tie threshold. Leaves predict
    Laplace-smoothed class frequencies ``(count_c + 1) / (n + C)``.

    Parameters
    ----------
    n_classes: int
        Size of the label space.

    grace_period: int (default=200)
        Instances a leaf accumulates between split attempts.

    split_confidence: float (default=1e-7)
        ``delta`` of the Hoeffding bound.

    tie_threshold: float (default=0.05)
        Force a split once ``eps`` shrinks below this value.

    n_candidates: int (default=10)
        Candidate thresholds per feature, evenly spaced over the observed
        value range.
    """

    def __init__(
        self,
        n_classes: int,
        grace_period: int = 200,
        split_confidence: float = 1e-7,
        tie_threshold: float = 0.05,
        n_candidates: int = 10,
    ):
        self.n_classes = n_classes
        self.grace_period = grace_period
        self.split_confidence = split_confidence
        self.tie_threshold = tie_threshold
        self.n_candidates = n_candidates

    def reset(self):
        for attr in ("root_", "_n_features", "_n_learned"):
            if hasattr(self, attr):
                delattr(self, attr)
        return self

    # -- structure helpers --

    def iter_leaves(self):
        if hasattr(self, "root_"):
            yield from _iter_leaves(self.root_)

    def structure(self):
        return _structure(self.root_) if hasattr(self, "root_") else ("leaf", ())

    @property
    def n_leaves_(self) -> int:
        return sum(1 for _ in self.iter_leaves())

    def _ensure_state(self, n_features: int):
        if not hasattr(self, "root_"):
            self.root_ = _Leaf(self.n_classes, n_features)
            self._n_features = n_features
        elif self._n_features != n_features:
            raise ShapeError(f"expected {self._n_features} features, got {n_features}")

    # -- prediction --

    def _leaf_probs(self, leaf: _Leaf) -> np.ndarray:
        counts = leaf.pred_counts
        return (counts + 1.0) / (counts.sum() + self.n_classes)

    def _predict_proba_rows(self, X):
        if not hasattr(self, "root_"):
            return np.full((X.shape[0], self.n_classes), 1.0 / self.n_classes)
        if X.shape[1] != self._n_features:
            raise ShapeError(f"expected {self._n_features} features, got {X.shape[1]}")
        out = np.empty((X.shape[0], self.n_classes))
        for i, x in enumerate(X):
            out[i] = self._leaf_probs(_route_to_leaf(self.root_, x))
        return out

    # -- learning --

    def _learn_one(self, x, y):
        self._ensure_state(x.shape[0])
        parent, is_left = None, False
        node = self.root_
        while isinstance(node, _Split):
            parent, is_left = node, x[node.feature] <= node.threshold
            node = node.left if is_left else node.right
        self._update_leaf(node, x, y)
        self._maybe_split(node, parent, is_left)

    def _update_leaf(self, leaf: _Leaf, x, y):
        leaf.pred_counts[y] += 1
        leaf.obs.update(x, y)
        leaf.n_since_attempt += 1

    def _maybe_split(self, leaf: _Leaf, parent, is_left: bool):
        if leaf.n_since_attempt < self.grace_period:
            return
        leaf.n_since_attempt = 0
        split = self._check_split(leaf)
        if split is None:
            return
        new_node = self._make_split_node(leaf, split)
        if parent is None:
            self.root_ = new_node
        elif is_left:
            parent.left = new_node
        else:
            parent.right = new_node

    def _check_split(self, leaf: _Leaf) -> _SplitCandidate | None:
        cand = _best_split(leaf.obs, self.n_candidates)
        if cand is None or cand.gain <= 0:
            return None
        eps = hoeffding_bound(
            math.log2(self.n_classes), self.split_confidence, int(leaf.obs.n)
        )
        if cand.gain - cand.second_gain > eps or eps < self.tie_threshold:
            return cand
        return None

    def _make_split_node(self, leaf: _Leaf, cand: _SplitCandidate) -> _Split:
        # children inherit the parent's class counts apportioned by the
        # estimated split mass, so leaf counts stay conserved tree-wide
        left_counts = np.clip(np.rint(leaf.pred_counts * cand.left_fraction), 0, leaf.pred_counts)
        right_counts = leaf.pred_counts - left_counts
        left = _Leaf(self.n_classes, self._n_features, pred_counts=left_counts)
        right = _Leaf(self.n_classes, self._n_features, pred_counts=right_counts)
        node = _Split(cand.feature, cand.threshold, left, right)
        node.adwin = leaf.adwin
        node.alternate = leaf.alternate
        return node


class _Alternate:
    """A candidate replacement subtree grown in the shadow of a main-tree node."""

    __slots__ = ("root", "adwin")

    def __init__(self, root, adwin: Adwin):
        self.root = root
        self.adwin = adwin


class HoeffdingAdaptiveTreeClassifier(HoeffdingTreeClassifier):
    """Hoeffding tree with per-node ADWIN drift detection and subtree swap.

    Every node on an instance's path feeds its 0/1 misclassification
    indicator (computed before learning) to a node-local ADWIN. When a
    node's ADWIN cuts with the error increasing, the node starts an
    alternate subtree that trains on subsequently routed instances; at the
    node's next drift signal the alternate replaces the node if its ADWIN
    mean error is lower. Prediction always uses the main tree only.

    Parameters
    ----------
    drift_confidence: float (default=0.002)
        ``delta`` of the per-node ADWIN detectors.

    Other parameters as `HoeffdingTreeClassifier`.
    """

    _ALTERNATE_MIN_WIDTH = 10

    def __init__(
        self,
        n_classes: int,
        grace_period: int = 200,
        split_confidence: float = 1e-7,
        tie_threshold: float = 0.05,
        n_candidates: int = 10,
        drift_confidence: float = 0.002,
    ):
        super().__init__(
            n_classes=n_classes,
            grace_period=grace_period,
            split_confidence=split_confidence,
            tie_threshold=tie_threshold,
            n_candidates=n_candidates,
        )
        self.drift_confidence = drift_confidence

    @property
    def n_drifts_(self) -> int:
        return getattr(self, "_n_drifts", 0)

    @property
    def n_replacements_(self) -> int:
        return getattr(self, "_n_replacements", 0)

    def reset(self):
        for attr in ("_n_drifts", "_n_replacements"):
            if hasattr(self, attr):
                delattr(self, attr)
        return super().reset()

    def _learn_one(self, x, y):
        self._ensure_state(x.shape[0])
        err = 1.0 if int(np.argmax(self._predict_proba_rows(x.reshape(1, -1))[0])) != y else 0.0
        self._learn_adaptive(x, y, err, parent=None, is_left=False, node=self.root_)

    def _learn_adaptive(self, x, y, err, parent, is_left, node):
        node, absorbed = self._handle_drift(node, x, y, err, parent, is_left)
        if absorbed:
            return
        if isinstance(node, _Split):
            child_left = x[node.feature] <= node.threshold
            child = node.left if child_left else node.right
            self._learn_adaptive(x, y, err, parent=node, is_left=child_left, node=child)
        else:
            self._update_leaf(node, x, y)
            self._maybe_split(node, parent, is_left)

    def _handle_drift(self, node, x, y, err, parent, is_left):
        if node.adwin is None:
            node.adwin = Adwin(delta=self.drift_confidence)
        mean_before = node.adwin.mean
        cut = node.adwin.update(err)
        error_increased = cut and node.adwin.mean > mean_before

        if error_increased and node.alternate is None:
            node.alternate = _Alternate(
                _Leaf(self.n_classes, self._n_features), Adwin(delta=self.drift_confidence)
            )
            self._n_drifts = self.n_drifts_ + 1

        if node.alternate is not None:
            self._train_alternate(node.alternate, x, y)
            promoted = self._consider_swap(node, parent, is_left)
            if promoted is not None:
                # the alternate already absorbed this instance
                return promoted, True
        return node, False

    def _consider_swap(self, node, parent, is_left):
        """Replace the node with its alternate once the alternate's ADWIN
        error is lower by a confidence bound, or discard a clearly worse
        alternate. Compared on every routed instance because a saturated
        post-drift error never re-triggers the node's own detector."""
        alt = node.alternate
        if (
            alt.adwin.width < self._ALTERNATE_MIN_WIDTH
            or node.adwin.width < self._ALTERNATE_MIN_WIDTH
        ):
            return None
        old = node.adwin.mean
        new = alt.adwin.mean
        size_term = 1.0 / node.adwin.width + 1.0 / alt.adwin.width
        bound = math.sqrt(2.0 * old * (1.0 - old) * math.log(2.0 / 0.05) * size_term)
        if old - new > bound:
            promoted = self._promote(alt, parent, is_left)
            self._n_replacements = self.n_replacements_ + 1
            return promoted
        if new - old > bound:
            node.alternate = None
        return None

    def _promote(self, alt: _Alternate, parent, is_left):
        if parent is None:
            self.root_ = alt.root
        elif is_left:
            parent.left = alt.root
        else:
            parent.right = alt.root
        return alt.root

    def _train_alternate(self, alt: _Alternate, x, y):
        leaf = _route_to_leaf(alt.root, x)
        alt_err = 1.0 if int(np.argmax(self._leaf_probs(leaf))) != y else 0.0
        alt.adwin.update(alt_err)
        # plain Hoeffding-tree growth inside the alternate
        parent, went_left = None, False
        node = alt.root
        while isinstance(node, _Split):
            parent, went_left = node, x[node.feature] <= node.threshold
            node = node.left if went_left else node.right
        self._update_leaf(node, x, y)
        if node.n_since_attempt >= self.grace_period:
            node.n_since_attempt = 0
            cand = self._check_split(node)
            if cand is not None:
                new_node = self._make_split_node(node, cand)
                if parent is None:
                    alt.root = new_node
                elif went_left:
                    parent.left = new_node
                else:
                    parent.right = new_node


def _sigmoid(v: float) -> float:
    if v >= 0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


# per-side accumulator slots: n, sum g, sum h, sum g^2, sum h^2, sum g*h
_N, _G, _H, _G2, _H2, _GH = range(6)


class _SgtLeaf:
    __slots__ = (
        "value",
        "n_window",
        "sum_g",
        "sum_h",
        "fmin",
        "fmax",
        "thresholds",
        "side_stats",
    )

    def __init__(self, value: float, n_features: int):
        self.value = value
        self.n_window = 0
        self.sum_g = 0.0
        self.sum_h = 0.0
        self.fmin = np.full(n_features, np.inf)
        self.fmax = np.full(n_features, -np.inf)
        self.thresholds = None  # (D, T) once the first window closes
        self.side_stats = None  # (D, T, 2, 6)


class _SgtSplit:
    __slots__ = ("feature", "threshold", "left", "right")

    def __init__(self, feature, threshold, left, right):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right


class StochasticGradientTreeClassifier(StreamingClassifier):
    """One-vs-rest gradient trees combined by softmax over leaf logits.

    Each class keeps a tree whose leaves hold a logit value. Per labeled
    instance the leaf accumulates the logistic gradient ``g = p - t`` and
    hessian ``h = p (1 - p)`` overall and per candidate split side. Every
    `grace_period` instances at a leaf, candidates are scored by
    ``sum_children (Sg)^2/(Sh+lambda) - (Sg_leaf)^2/(Sh_leaf+lambda)``; the
    best is accepted only if a one-sample t-test on the per-instance
    loss-delta (split minus in-place Newton update) rejects "no
    improvement" at `alpha`, Bonferroni-corrected over the candidate count.
    Otherwise the leaf takes the Newton step ``v -= Sg / (Sh + lambda)``.
    Accumulators reset after each decision.

    Parameters
    ----------
    n_classes: int
        Size of the label space.

    grace_period: int (default=200)
        Window length between split-or-update decisions at a leaf.

    reg_lambda: float (default=0.1)
        Ridge term added to hessian sums.

    alpha: float (default=0.05)
        Significance level of the split t-test before correction.

    n_candidates: int (default=10)
        Candidate thresholds per feature, spaced over the window's range.
    """

    def __init__(
        self,
        n_classes: int,
        grace_period: int = 200,
        reg_lambda: float = 0.1,
        alpha: float = 0.05,
        n_candidates: int = 10,
    ):
        self.n_classes = n_classes
        self.grace_period = grace_period
        self.reg_lambda = reg_lambda
        self.alpha = alpha
        self.n_candidates = n_candidates

    def reset(self):
        for attr in ("trees_", "_n_features", "_n_learned"):
            if hasattr(self, attr):
                delattr(self, attr)
        return self

    def _ensure_state(self, n_features: int):
        if not hasattr(self, "trees_"):
            self.trees_ = [_SgtLeaf(0.0, n_features) for _ in range(self.n_classes)]
            self._n_features = n_features
        elif self._n_features != n_features:
            raise ShapeError(f"expected {self._n_features} features, got {n_features}")

    @property
    def n_leaves_(self) -> int:
        total = 0
        for root in getattr(self, "trees_", []):
            stack = [root]
            while stack:
                node = stack.pop()
                if isinstance(node, _SgtSplit):
                    stack.extend((node.left, node.right))
                else:
                    total += 1
        return total

    def _route(self, root, x):
        parent, is_left = None, False
        node = root
        while isinstance(node, _SgtSplit):
            parent, is_left = node, x[node.feature] <= node.threshold
            node = node.left if is_left else node.right
        return node, parent, is_left

    def _predict_proba_rows(self, X):
        if not hasattr(self, "trees_"):
            return np.full((X.shape[0], self.n_classes), 1.0 / self.n_classes)
        if X.shape[1] != self._n_features:
            raise ShapeError(f"expected {self._n_features} features, got {X.shape[1]}")
        logits = np.empty((X.shape[0], self.n_classes))
        for i, x in enumerate(X):
            for c, root in enumerate(self.trees_):
                leaf, _, _ = self._route(root, x)
                logits[i, c] = leaf.value
        return softmax(logits)

    def _learn_one(self, x, y):
        self._ensure_state(x.shape[0])
        for c in range(self.n_classes):
            target = 1.0 if c == y else 0.0
            leaf, parent, is_left = self._route(self.trees_[c], x)
            p = _sigmoid(leaf.value)
            g = p - target
            h = p * (1.0 - p)
            leaf.n_window += 1
            leaf.sum_g += g
            leaf.sum_h += h
            np.minimum(leaf.fmin, x, out=leaf.fmin)
            np.maximum(leaf.fmax, x, out=leaf.fmax)
            if leaf.thresholds is not None:
                sides = (x[:, None] > leaf.thresholds).astype(np.intp)  # (D, T)
                d, t = leaf.thresholds.shape
                leaf.side_stats[
                    np.arange(d)[:, None], np.arange(t)[None, :], sides
                ] += np.array([1.0, g, h, g * g, h * h, g * h])
            if leaf.n_window >= self.grace_period:
                self._close_window(c, leaf, parent, is_left)

    def _close_window(self, c, leaf: _SgtLeaf, parent, is_left):
        if leaf.thresholds is None:
            # first window only fixes the candidate grid; stats accumulate
            # over the next window
            if np.all(np.isfinite(leaf.fmin)):
                leaf.thresholds = _candidate_thresholds(
                    leaf.fmin, leaf.fmax, self.n_candidates
                )
                leaf.side_stats = np.zeros(leaf.thresholds.shape + (2, 6))
            self._newton_update(leaf)
            return
        accepted = self._try_split(c, leaf, parent, is_left)
        if not accepted:
            self._newton_update(leaf)

    def _newton_update(self, leaf: _SgtLeaf):
        leaf.value -= leaf.sum_g / (leaf.sum_h + self.reg_lambda)
        self._reset_window(leaf)

    def _reset_window(self, leaf: _SgtLeaf):
        leaf.n_window = 0
        leaf.sum_g = 0.0
        leaf.sum_h = 0.0
        if leaf.side_stats is not None:
            leaf.side_stats[:] = 0.0

    def _try_split(self, c, leaf: _SgtLeaf, parent, is_left) -> bool:
        lam = self.reg_lambda
        st = leaf.side_stats  # (D, T, 2, 6)
        sg = st[..., _G]
        sh = st[..., _H]
        base = (leaf.sum_g * leaf.sum_g) / (leaf.sum_h + lam)
        scores = (sg * sg / (sh + lam)).sum(axis=2) - base  # (D, T)
        n_cands = scores.size
        best_flat = int(np.argmax(scores))
        d_idx, t_idx = divmod(best_flat, scores.shape[1])
        if scores[d_idx, t_idx] <= 0.0:
            return False

        # per-instance loss delta of splitting vs. updating in place:
        # delta_i = g_i (dv_side - dv0) + h_i (dv_side^2 - dv0^2) / 2
        side = st[d_idx, t_idx]  # (2, 6)
        dv0 = -leaf.sum_g / (leaf.sum_h + lam)
        dv = -side[:, _G] / (side[:, _H] + lam)  # (2,)
        a = dv - dv0
        b = 0.5 * (dv * dv - dv0 * dv0)
        n = leaf.n_window
        total = float((a * side[:, _G] + b * side[:, _H]).sum())
        total_sq = float(
            (
                a * a * side[:, _G2]
                + 2.0 * a * b * side[:, _GH]
                + b * b * side[:, _H2]
            ).sum()
        )
        mean = total / n
        var = max((total_sq - n * mean * mean) / (n - 1), 0.0)
        if var == 0.0:
            significant = mean < 0.0
        else:
            t_stat = mean / math.sqrt(var / n)
            p_value = float(stats.t.cdf(t_stat, df=n - 1))
            significant = p_value < self.alpha / n_cands
        if not significant:
            return False

        threshold = float(leaf.thresholds[d_idx, t_idx])
        left = _SgtLeaf(leaf.value + dv[0], self._n_features)
        right = _SgtLeaf(leaf.value + dv[1], self._n_features)
        node = _SgtSplit(int(d_idx), threshold, left, right)
        if parent is None:
            self.trees_[c] = node
        elif is_left:
            parent.left = node
        else:
            parent.right = node
        return True
