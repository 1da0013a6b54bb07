"""Bayesian decompounding of discretely observed compound Poisson processes."""

__version__ = "0.1.0"

from .data import AuxiliaryState, ObservationSet
from .model import (
    IncrementLaw,
    MixtureDensity,
    ModelParams,
    convolution_pdf,
    increment_pdf,
    log_continuous_likelihood,
    mixture_pdf,
    reparametrise,
)
from .sampler import Hyperparameters, InitPolicy, Trace, run_chain
from .simulate import discretize, simulate_increments, simulate_path

__all__ = [
    "AuxiliaryState",
    "ObservationSet",
    "IncrementLaw",
    "MixtureDensity",
    "ModelParams",
    "convolution_pdf",
    "increment_pdf",
    "log_continuous_likelihood",
    "mixture_pdf",
    "reparametrise",
    "Hyperparameters",
    "InitPolicy",
    "Trace",
    "run_chain",
    "discretize",
    "simulate_increments",
    "simulate_path",
]
