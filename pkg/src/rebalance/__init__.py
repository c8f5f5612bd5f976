"""Resampling toolkit for imbalanced binary classification.

Oversamplers (random, SMOTE family, a GMM-guided adaptive selector), an
SMO-trained RBF SVM for evaluation, F-beta metrics, and a cross-validated
benchmark harness with a CLI.
"""

__version__ = "0.1.0"

from .data import (
    FoldPlan,
    LabeledDataset,
    Standardizer,
    apply_standardizer,
    fit_standardizer,
    generate_clover,
    load_csv,
    load_keel,
    save_csv,
    stratified_kfold,
)
from .metrics import ConfusionCounts, CvSummary, aggregate, confusion, f_beta
from .samplers import SamplerSpec, SyntheticPool, adaptive_gmm_resample, resample

__all__ = [
    "__version__",
    "ConfusionCounts",
    "CvSummary",
    "FoldPlan",
    "LabeledDataset",
    "SamplerSpec",
    "Standardizer",
    "SyntheticPool",
    "adaptive_gmm_resample",
    "aggregate",
    "apply_standardizer",
    "confusion",
    "f_beta",
    "fit_standardizer",
    "generate_clover",
    "load_csv",
    "load_keel",
    "resample",
    "save_csv",
    "stratified_kfold",
]
