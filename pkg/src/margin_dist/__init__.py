"""Margin-distribution classifiers: average margin and semi-variance optimisation."""

from .baselines import FmmConfig, train_fmm, train_lssvm, train_mamc
from .bounds import (BoundReport, generalization_bound, rademacher_kernel,
                     rademacher_linear)
from .core import (Dataset, Instance, KernelKind, KernelModel, KernelSpec,
                   LinearModel, ScalingParams, classify, gaussian_kernel,
                   gram_matrix, predict_score)
from .estimators import (FMMClassifier, LSSVMClassifier, MAMCClassifier,
                         MSVMAvClassifier)
from .kernel_solver import train_kernel
from .linear_solver import SolverConfig, SolverError, train_linear
from .margin_stats import MarginStats, cumulative_margin_curve

__version__ = "0.1.0"

__all__ = [
    "BoundReport", "Dataset", "FMMClassifier", "FmmConfig", "Instance", "KernelKind",
    "KernelModel", "KernelSpec", "LSSVMClassifier", "LinearModel", "MAMCClassifier",
    "MSVMAvClassifier", "MarginStats", "ScalingParams", "SolverConfig", "SolverError",
    "classify", "cumulative_margin_curve", "gaussian_kernel", "generalization_bound",
    "gram_matrix", "predict_score", "rademacher_kernel", "rademacher_linear",
    "train_fmm", "train_kernel", "train_linear", "train_lssvm", "train_mamc",
]
