"""Robust Bayesian graphical regression: covariate-dependent conditional
sign-independence graphs for heavy-tailed multivariate data."""

__version__ = "0.1.0"

from .model import (ChainConfig, DataError, Dataset, HyperParams, NodeState,
                    csif_eval, theta_eval, validate_dataset)
from .piecewise import (ImproperDensityError, PiecewiseDensity, PriorKernel,
                        QuadraticPiece, build)
from .gibbs import (NodeSampler, PosteriorDraws, SamplerOptions, rescale_pair,
                    run_all, run_node)

__all__ = [
    "ChainConfig", "DataError", "Dataset", "HyperParams", "NodeState",
    "csif_eval", "theta_eval", "validate_dataset",
    "ImproperDensityError", "PiecewiseDensity", "PriorKernel",
    "QuadraticPiece", "build",
    "NodeSampler", "PosteriorDraws", "SamplerOptions", "rescale_pair",
    "run_all", "run_node",
    "__version__",
]
