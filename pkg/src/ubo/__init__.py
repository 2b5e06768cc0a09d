"""Unscented Bayesian optimization: Bayesian optimization that prefers optima
robust to noise in the query location."""

from .acquisition import expected_improvement, unscented_expected_improvement
from .benchfns import gm_function, rkhs_function, robustness_eval
from .driver import Mode, OptimizerConfig, run_optimization, select_incumbent, unscented_outcome
from .gp import Dataset, GPPosterior, KernelHyperparameters
from .mcmc import SliceSamplerConfig
from .unscented import InputNoise, sigma_points, unscented_mean

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "GPPosterior",
    "InputNoise",
    "KernelHyperparameters",
    "Mode",
    "OptimizerConfig",
    "SliceSamplerConfig",
    "expected_improvement",
    "gm_function",
    "rkhs_function",
    "robustness_eval",
    "run_optimization",
    "select_incumbent",
    "sigma_points",
    "unscented_expected_improvement",
    "unscented_mean",
    "unscented_outcome",
]
