"""Residual-eigenspace features for noisy, small-sample binary classification."""
from .bounds import MarkovBound, markov_rhs, tail_bound
from .errors import ConvergenceError, DataError, DimensionError, FinderError, NumericError, RoundError
from .evaluation import ClassSplit, CvReport, PipelineConfig, Regime, accuracy, auc, make_splits, run_lpocv
from .kle import (
    Dataset,
    Eigensystem,
    center,
    eigendecompose,
    eigendecompose_dual,
    empirical_covariance,
    empirical_mean,
    energy_truncation,
    estimate_eigensystem,
    truncation_error,
)
from .subspace import (
    FeatureTransform,
    SubspaceBasis,
    Variant,
    aca_subspace,
    complement_basis,
    direct_residual,
    mls_basis,
    mls_residual,
)
from .svm import Kernel, SvmModel, svm_score, svm_train
from .synth import SynthSpec, sample, two_class_scenario

__version__ = "0.1.0"

__all__ = [
    "MarkovBound",
    "markov_rhs",
    "tail_bound",
    "ConvergenceError",
    "DataError",
    "DimensionError",
    "FinderError",
    "NumericError",
    "RoundError",
    "ClassSplit",
    "CvReport",
    "PipelineConfig",
    "Regime",
    "accuracy",
    "auc",
    "make_splits",
    "run_lpocv",
    "Dataset",
    "Eigensystem",
    "center",
    "eigendecompose",
    "eigendecompose_dual",
    "empirical_covariance",
    "empirical_mean",
    "energy_truncation",
    "estimate_eigensystem",
    "truncation_error",
    "FeatureTransform",
    "SubspaceBasis",
    "Variant",
    "aca_subspace",
    "complement_basis",
    "direct_residual",
    "mls_basis",
    "mls_residual",
    "Kernel",
    "SvmModel",
    "svm_score",
    "svm_train",
    "SynthSpec",
    "sample",
    "two_class_scenario",
]
