"""Classifiers, AUC scoring and the utility-evaluation protocols."""

from kdeknn.evaluation.experiments import (
    ExperimentReport,
    ExperimentRow,
    run_experiment1,
    run_experiment2,
    run_experiment3,
)
from kdeknn.evaluation.metrics import auc, roc_curve
from kdeknn.evaluation.models import (
    DEFAULT_SPECS,
    ClassifierSpec,
    TrainedModel,
    predict_score,
    predict_scores,
    train,
)

__all__ = [
    "ClassifierSpec", "DEFAULT_SPECS", "ExperimentReport", "ExperimentRow", "TrainedModel",
    "auc", "predict_score", "predict_scores", "roc_curve", "run_experiment1",
    "run_experiment2", "run_experiment3", "train",
]
