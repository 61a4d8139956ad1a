"""KDE-KNN: privacy-preserving synthetic tabular data by class-conditional KDE
sampling with KNN validation, plus SMOTE, DCR privacy analysis and
train-on-synthetic utility evaluation."""

from kdeknn._backend import BACKEND
from kdeknn.dataset import (
    CohortSpec,
    Dataset,
    NormStats,
    benchmark_cohorts,
    impute_median,
    load_csv,
    simulate_cohort,
    split,
    write_csv,
    zscore_apply,
    zscore_fit,
)
from kdeknn.errors import GenerationStalled
from kdeknn.generators import GenConfig, SyntheticBatch, kde_knn_generate, smote_full_synthetic
from kdeknn.privacy import DcrReport, dcr, dcr_baseline, dcr_histogram

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CohortSpec", "Dataset", "DcrReport", "GenConfig", "GenerationStalled",
    "NormStats", "SyntheticBatch", "benchmark_cohorts", "dcr", "dcr_baseline", "dcr_histogram",
    "impute_median", "kde_knn_generate", "load_csv", "simulate_cohort", "smote_full_synthetic",
    "split", "write_csv", "zscore_apply", "zscore_fit",
]
