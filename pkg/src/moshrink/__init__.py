"""Bayesian multi-outcome regression with shared global-local shrinkage priors."""
__version__ = "0.1.0"

from .diagnostics import dic, mspe, rank_predictors, sse_partitioned
from .estimator import MultiOutcomeShrinkageRegressor
from .exceptions import (
    ChainAbortError,
    DegenerateColumnError,
    NumericalError,
    ParameterDomainError,
    ShapeError,
    UnsupportedFamilyError,
)
from .model import Dataset, Family, Hyperparams, ModelSpec, load_dataset, predict, standardize
from .samplers import PosteriorSamples, run_chain

__all__ = [
    "ChainAbortError", "Dataset", "DegenerateColumnError", "Family", "Hyperparams", "ModelSpec",
    "MultiOutcomeShrinkageRegressor", "NumericalError", "ParameterDomainError", "PosteriorSamples",
    "ShapeError", "UnsupportedFamilyError", "dic", "load_dataset", "mspe", "predict",
    "rank_predictors", "run_chain", "sse_partitioned", "standardize",
]
