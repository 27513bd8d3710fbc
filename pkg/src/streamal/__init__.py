"""streamal: streaming classifiers, uncertainty-driven labeling, and
prequential evaluation for embedding streams."""

from .active import ALRecord, OracleSim, QueryMode, QueryPolicy, effort_gain, run_stream, should_query, uncertainty
from .core import ClassLabel, Dataset, Instance, Prediction, SeededRng, argmax_class, normalize
from .datagen import BlobSpec, DriftSpec, gen_blobs, gen_drift_stream
from .drift import Adwin
from .evaluation import (
    ExperimentConfig,
    RunReport,
    auc_binary,
    auc_ovr_weighted,
    mean_ci,
    partition_train_stream,
    run_experiment,
    stratified_kfold,
    timeline_quartile_means,
)
from .features import (
    SelectionMask,
    TopKMutualInfoSelector,
    apply_mask,
    digamma,
    estimate_mi_cd,
    select_top_k,
)
from .learners import SlidingWindowKNNClassifier, StreamingClassifier, StreamingLogisticRegression
from .registry import LEARNERS, make_learner
from .trees import (
    GaussianObserver,
    HoeffdingAdaptiveTreeClassifier,
    HoeffdingTreeClassifier,
    StochasticGradientTreeClassifier,
    hoeffding_bound,
    info_gain,
)

__version__ = "0.1.0"

__all__ = [
    "ALRecord",
    "Adwin",
    "BlobSpec",
    "ClassLabel",
    "Dataset",
    "DriftSpec",
    "ExperimentConfig",
    "GaussianObserver",
    "HoeffdingAdaptiveTreeClassifier",
    "HoeffdingTreeClassifier",
    "Instance",
    "LEARNERS",
    "OracleSim",
    "Prediction",
    "QueryMode",
    "QueryPolicy",
    "RunReport",
    "SeededRng",
    "SelectionMask",
    "SlidingWindowKNNClassifier",
    "StochasticGradientTreeClassifier",
    "StreamingClassifier",
    "StreamingLogisticRegression",
    "TopKMutualInfoSelector",
    "apply_mask",
    "argmax_class",
    "auc_binary",
    "auc_ovr_weighted",
    "digamma",
    "effort_gain",
    "estimate_mi_cd",
    "gen_blobs",
    "gen_drift_stream",
    "hoeffding_bound",
    "info_gain",
    "make_learner",
    "mean_ci",
    "normalize",
    "partition_train_stream",
    "run_experiment",
    "run_stream",
    "select_top_k",
    "should_query",
    "stratified_kfold",
    "timeline_quartile_means",
    "uncertainty",
]
