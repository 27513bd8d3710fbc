"""Repeated stratified cross-validation with a train/stream split, ranked
AUC metrics, and the experiment orchestrator.

Each (repeat, fold) cell holds out one test fold, splits the rest into a
small labeled train set and an unlabeled stream, selects features on the
train set only, trains each learner with a single shuffled pass, then runs
the stream loop once per scenario. Results aggregate into the run report:
mean AUC with normal-approximation confidence intervals, stream-timeline
quartile means, and effort-gain distribution statistics.
"""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy import stats as _scipy_stats

from .active import (
    ALRecord,
    OracleSim,
    QueryMode,
    QueryPolicy,
    effort_gain,
    run_stream,
)
from .core import (
    Dataset,
    InsufficientDataError,
    Instance,
    SeededRng,
    ShapeError,
    StratificationError,
    UndefinedAUCError,
)
from .features import apply_mask_matrix, select_top_k
from .registry import make_learner


class DegenerateSplitWarning(UserWarning):
    """A class ended up absent from the train split."""


# ---------------------------------------------------------------------------
# Partitioning


def stratified_kfold(labels, k: int, seed) -> list[np.ndarray]:
    """k disjoint test-index sets; per class, fold sizes differ by <= 1."""
    y = np.asarray(labels, dtype=np.int64).ravel()
    if k < 2:
        raise ValueError("k must be >= 2")
    classes, counts = np.unique(y, return_counts=True)
    if (counts < k).any():
        small = classes[counts < k][0]
        raise StratificationError(
            f"class {small} has {counts[counts < k][0]} instances, fewer than k={k}"
        )
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for c in classes:
        idx = np.flatnonzero(y == c)
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            folds[(j + offset) % k].append(int(i))
        offset += len(idx) % k  # rotate so remainder instances spread over folds
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def partition_train_stream(indices, labels, train_frac: float = 0.2, seed=None):
    """Stratified split of the non-test indices into train and stream.

    Per class, ``floor(train_frac * n_c)`` indices go to train; the rest
    form the stream, whose order is a seeded shuffle. A class that ends up
    absent from train raises a `DegenerateSplitWarning` but the split
    proceeds.
    """
    idx = np.asarray(indices, dtype=np.int64).ravel()
    if idx.size == 0:
        raise ValueError("cannot partition an empty index set")
    if not 0.0 < train_frac < 1.0:
        raise ValueError(f"train_frac must lie in (0, 1), got {train_frac}")
    y = np.asarray(labels, dtype=np.int64).ravel()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    train_parts = []
    stream_parts = []
    for c in np.unique(y[idx]):
        members = idx[y[idx] == c]
        rng.shuffle(members)
        n_train = int(math.floor(train_frac * members.size))
        if n_train == 0:
            _warnings.warn(
                f"class {c} has no train instances at train_frac={train_frac}",
                DegenerateSplitWarning,
            )
        train_parts.append(members[:n_train])
        stream_parts.append(members[n_train:])
    train = np.sort(np.concatenate(train_parts))
    stream = np.concatenate(stream_parts)
    rng.shuffle(stream)
    return train, stream


@dataclass(frozen=True)
class FoldCell:
    repeat: int
    fold: int
    test_idx: np.ndarray
    train_idx: np.ndarray
    stream_idx: np.ndarray
    warnings: tuple = ()


@dataclass
class FoldPlan:
    """All (repeat, fold) partitions of one experiment, fixed up front."""

    k: int
    repeats: int
    seed: int
    cells: dict = field(default_factory=dict)


def build_fold_plan(labels, k: int, repeats: int, train_frac: float, seed: int) -> FoldPlan:
    y = np.asarray(labels, dtype=np.int64).ravel()
    root = SeededRng(seed)
    plan = FoldPlan(k=k, repeats=repeats, seed=seed)
    all_idx = np.arange(y.shape[0])
    for r in range(repeats):
        folds = stratified_kfold(y, k, root.child("kfold", r).generator())
        for f in range(k):
            test = folds[f]
            non_test = np.setdiff1d(all_idx, test, assume_unique=True)
            with _warnings.catch_warnings(record=True) as caught:
                _warnings.simplefilter("always", DegenerateSplitWarning)
                train, stream = partition_train_stream(
                    non_test, y, train_frac, root.child("partition", r, f).generator()
                )
            plan.cells[(r, f)] = FoldCell(
                repeat=r,
                fold=f,
                test_idx=test,
                train_idx=train,
                stream_idx=stream,
                warnings=tuple(str(w.message) for w in caught),
            )
    return plan


# ---------------------------------------------------------------------------
# Metrics


def auc_binary(scores, positives) -> float:
    """Mann-Whitney AUC by average ranks, ties counting one half."""
    s = np.asarray(scores, dtype=np.float64).ravel()
    pos = np.asarray(positives, dtype=bool).ravel()
    if s.shape[0] != pos.shape[0]:
        raise ShapeError(f"scores ({s.shape[0]}) and positives ({pos.shape[0]}) differ")
    n_pos = int(pos.sum())
    n_neg = s.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUCError("need at least one positive and one negative")
    _, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    avg_rank = ends - (counts - 1) / 2.0  # 1-based average rank per tie group
    ranks = avg_rank[inverse]
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_ovr_weighted(prob_matrix, labels) -> float:
    """One-vs-rest AUC weighted by class support.

    Classes absent from `labels` are excluded from both the sum and the
    weights (weights renormalize over the classes present).
    """
    probs = np.asarray(prob_matrix, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64).ravel()
    if probs.ndim != 2 or probs.shape[0] != y.shape[0]:
        raise ShapeError(f"prob matrix {probs.shape} does not match {y.shape[0]} labels")
    classes, support = np.unique(y, return_counts=True)
    if classes.shape[0] < 2:
        raise UndefinedAUCError("need at least two classes present")
    if classes.max() >= probs.shape[1]:
        raise ShapeError(f"label {classes.max()} exceeds {probs.shape[1]} score columns")
    total = 0.0
    for c, n_c in zip(classes, support):
        total += n_c * auc_binary(probs[:, c], y == c)
    return float(total / support.sum())


def mean_ci(values, level: float = 0.95, method: str = "normal") -> tuple[float, float]:
    """Sample mean and confidence-interval half width.

    The default is the normal approximation ``z * sd / sqrt(n)`` with
    ``z = 1.96`` at the 95% level; ``method="t"`` uses the Student-t
    quantile instead.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.shape[0] < 2:
        raise InsufficientDataError("confidence interval needs at least two values")
    mean = float(v.mean())
    sd = float(v.std(ddof=1))
    if method == "normal":
        q = 1.96 if level == 0.95 else float(_scipy_stats.norm.ppf((1 + level) / 2))
    elif method == "t":
        q = float(_scipy_stats.t.ppf((1 + level) / 2, df=v.shape[0] - 1))
    else:
        raise ValueError(f"unknown CI method {method!r}")
    return mean, q * sd / math.sqrt(v.shape[0])


def timeline_quartile_means(series) -> tuple[float, float, float, float]:
    """Means of the four contiguous quarters of a step series.

    Remainder steps go to the earlier quarters (length 10 -> 3, 3, 2, 2).
    """
    v = np.asarray(series, dtype=np.float64).ravel()
    n = v.shape[0]
    if n < 4:
        raise InsufficientDataError(f"need a series of length >= 4, got {n}")
    base, rem = divmod(n, 4)
    sizes = [base + (1 if i < rem else 0) for i in range(4)]
    bounds = np.cumsum([0] + sizes)
    return tuple(float(v[bounds[i] : bounds[i + 1]].mean()) for i in range(4))


# ---------------------------------------------------------------------------
# Experiment orchestration


SCENARIOS = ("no_al", "al")


@dataclass(frozen=True)
class ExperimentConfig:
    """Algorithmic settings of one experiment run."""

    learners: tuple[str, ...]
    scenarios: tuple[str, ...] = SCENARIOS
    threshold: float = 0.55
    uncertainty_kind: str = "least_confidence"
    k_folds: int = 10
    repeats: int = 10
    train_frac: float = 0.2
    eval_every: int = 1
    seed: int = 0
    mi_neighbors: int = 3
    ci_level: float = 0.95
    ci_method: str = "normal"
    ci_over: str = "cells"  # or "repeats": CI over per-repeat means
    learner_params: dict = field(default_factory=dict, hash=False)


@dataclass
class CellRun:
    """Raw outcome of one learner x scenario pass over one cell's stream."""

    learner: str
    scenario: str
    repeat: int
    fold: int
    records: list[ALRecord]

    def auc_series(self) -> np.ndarray:
        return np.array(
            [r.test_auc_after for r in self.records if r.test_auc_after is not None]
        )

    @property
    def n_queried(self) -> int:
        return sum(1 for r in self.records if r.queried)


@dataclass
class CellInfo:
    repeat: int
    fold: int
    n_test: int
    n_train: int
    n_stream: int
    selected_features: list[int]
    warnings: list[str]


@dataclass
class ScenarioResult:
    """Aggregate over all cells for one (learner, scenario) pair.

    The ``cell_*`` lists hold the underlying per-cell values in canonical
    (repeat, fold) order so downstream consumers can pool across learners
    or recompute intervals without the raw series.
    """

    learner: str
    scenario: str
    n_cells: int
    auc_mean: float
    auc_ci: float
    q1_mean: float
    q1_ci: float
    q2_mean: float
    q2_ci: float
    q3_mean: float
    q3_ci: float
    q4_mean: float
    q4_ci: float
    final_auc_mean: float
    effort_min: float
    effort_max: float
    effort_mean: float
    effort_std: float
    effort_q1: float
    effort_q2: float
    effort_q3: float
    cell_auc_means: list = field(default_factory=list)
    cell_q1: list = field(default_factory=list)
    cell_q4: list = field(default_factory=list)
    cell_final: list = field(default_factory=list)
    cell_effort: list = field(default_factory=list)


@dataclass
class RunReport:
    """Everything one experiment produced, minus raw per-step series."""

    config: dict
    cells: list[CellInfo]
    results: list[ScenarioResult]
    failures: list[dict]
    runs: list[CellRun] = field(default_factory=list, repr=False)

    @property
    def n_stream_runs(self) -> int:
        return len(self.runs)

    def result_for(self, learner: str, scenario: str) -> ScenarioResult:
        for res in self.results:
            if res.learner == learner and res.scenario == scenario:
                return res
        raise KeyError(f"no result for {learner}/{scenario}")


def _scenario_policy(scenario: str, config: ExperimentConfig) -> QueryPolicy:
    mode = QueryMode.NO_AL if scenario == "no_al" else QueryMode.AL
    return QueryPolicy(mode=mode, threshold=config.threshold, kind=config.uncertainty_kind)


def _run_cell(X, y, ids, n_classes, cell: FoldCell, config: ExperimentConfig):
    """One (repeat, fold): select features, then train+stream every
    (learner, scenario). Returns (CellInfo, runs, failures)."""
    root = SeededRng(config.seed)
    r, f = cell.repeat, cell.fold
    cell_warnings: list[str] = list(cell.warnings)

    mask = select_top_k(
        X[cell.train_idx],
        y[cell.train_idx],
        k=config.mi_neighbors,
        rng=root.child("mi", r, f).generator(),
    )
    cell_warnings.extend(mask.warnings)
    Xm = apply_mask_matrix(X, mask)

    train_order = cell.train_idx.copy()
    root.child("train", r, f).generator().shuffle(train_order)

    X_test = Xm[cell.test_idx]
    y_test = y[cell.test_idx]

    def evaluator(learner):
        return auc_ovr_weighted(learner.predict_proba(X_test), y_test)

    stream_instances = [Instance(id=ids[i], features=Xm[i]) for i in cell.stream_idx]
    oracle = OracleSim({ids[i]: int(y[i]) for i in cell.stream_idx})

    info = CellInfo(
        repeat=r,
        fold=f,
        n_test=int(cell.test_idx.size),
        n_train=int(cell.train_idx.size),
        n_stream=int(cell.stream_idx.size),
        selected_features=list(mask.selected),
        warnings=cell_warnings,
    )

    runs: list[CellRun] = []
    failures: list[dict] = []
    for learner_name in config.learners:
        for scenario in config.scenarios:
            try:
                learner = make_learner(
                    learner_name, n_classes, config.learner_params.get(learner_name, {})
                )
                learner.partial_fit(Xm[train_order], y[train_order])
                records = run_stream(
                    learner,
                    stream_instances,
                    oracle,
                    _scenario_policy(scenario, config),
                    evaluator,
                    eval_every=config.eval_every,
                )
                runs.append(
                    CellRun(
                        learner=learner_name,
                        scenario=scenario,
                        repeat=r,
                        fold=f,
                        records=records,
                    )
                )
            except Exception as exc:  # cell failure is recorded, not fatal
                failures.append(
                    {
                        "learner": learner_name,
                        "scenario": scenario,
                        "repeat": r,
                        "fold": f,
                        "error": f"{type(exc).__name__}: {exc}",
                    }
                )
    return info, runs, failures


def _aggregate(learner, scenario, runs, config: ExperimentConfig) -> ScenarioResult:
    cell_means, q1s, q2s, q3s, q4s, finals, efforts, repeats = [], [], [], [], [], [], [], []
    for run in runs:
        series = run.auc_series()
        cell_means.append(float(series.mean()))
        q1, q2, q3, q4 = timeline_quartile_means(series)
        q1s.append(q1)
        q2s.append(q2)
        q3s.append(q3)
        q4s.append(q4)
        finals.append(float(series[-1]))
        efforts.append(effort_gain(run.records))
        repeats.append(run.repeat)

    def ci_of(values) -> tuple[float, float]:
        v = np.asarray(values, dtype=np.float64)
        if config.ci_over == "repeats":
            reps = np.asarray(repeats)
            v = np.array([v[reps == rep].mean() for rep in np.unique(reps)])
        if v.shape[0] < 2:
            return float(v.mean()), 0.0
        return mean_ci(v, level=config.ci_level, method=config.ci_method)

    auc_mean, auc_ci = ci_of(cell_means)
    q1_mean, q1_ci = ci_of(q1s)
    q2_mean, q2_ci = ci_of(q2s)
    q3_mean, q3_ci = ci_of(q3s)
    q4_mean, q4_ci = ci_of(q4s)
    eff = np.asarray(efforts, dtype=np.float64)
    return ScenarioResult(
        learner=learner,
        scenario=scenario,
        n_cells=len(runs),
        auc_mean=auc_mean,
        auc_ci=auc_ci,
        q1_mean=q1_mean,
        q1_ci=q1_ci,
        q2_mean=q2_mean,
        q2_ci=q2_ci,
        q3_mean=q3_mean,
        q3_ci=q3_ci,
        q4_mean=q4_mean,
        q4_ci=q4_ci,
        final_auc_mean=float(np.mean(finals)),
        effort_min=float(eff.min()),
        effort_max=float(eff.max()),
        effort_mean=float(eff.mean()),
        effort_std=float(eff.std(ddof=1)) if eff.size > 1 else 0.0,
        effort_q1=float(np.percentile(eff, 25)),
        effort_q2=float(np.percentile(eff, 50)),
        effort_q3=float(np.percentile(eff, 75)),
        cell_auc_means=[float(v) for v in cell_means],
        cell_q1=[float(v) for v in q1s],
        cell_q4=[float(v) for v in q4s],
        cell_final=[float(v) for v in finals],
        cell_effort=[float(v) for v in efforts],
    )


def run_experiment(dataset: Dataset, config: ExperimentConfig, n_jobs: int = 1) -> RunReport:
    """Run the full repeated-CV experiment; deterministic given the config seed.

    Cells are independent and run in parallel when ``n_jobs > 1``;
    aggregation orders them canonically so the report does not depend on
    scheduling.
    """
    X = dataset.feature_matrix()
    y = dataset.label_array()
    ids = dataset.ids()

    plan = build_fold_plan(y, config.k_folds, config.repeats, config.train_frac, config.seed)
    keys = sorted(plan.cells)
    outputs = Parallel(n_jobs=n_jobs)(
        delayed(_run_cell)(X, y, ids, dataset.n_classes, plan.cells[key], config)
        for key in keys
    )

    cells: list[CellInfo] = []
    all_runs: list[CellRun] = []
    failures: list[dict] = []
    for info, runs, fails in outputs:
        cells.append(info)
        all_runs.extend(runs)
        failures.extend(fails)

    results = []
    for learner in config.learners:
        for scenario in config.scenarios:
            matching = [
                run for run in all_runs if run.learner == learner and run.scenario == scenario
            ]
            matching.sort(key=lambda run: (run.repeat, run.fold))
            if matching:
                results.append(_aggregate(learner, scenario, matching, config))

    return RunReport(
        config=asdict(config),
        cells=cells,
        results=results,
        failures=failures,
        runs=sorted(all_runs, key=lambda run: (run.learner, run.scenario, run.repeat, run.fold)),
    )
