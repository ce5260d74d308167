"""Models package"""
from .grid import Interpretation, TimeGrid, Path, linear_interpolate, stepwise_approximation, pointwise_leq
from .rng import RngStream
from .estimate import MCEstimate, pooled_std_error, sample_covariance
from .simulation import run_paths, simulate_paths, evaluate_functionals
from .functionals import Monotonicity, MonotoneFunctional, WeightMeasure, ScalarMap, compose
from .gaussian_vectors import CovMatrix, FactorizationResult, pitt_check, nonneg_factorization, horn_matrix

__all__ = [
    "Interpretation", "TimeGrid", "Path", "linear_interpolate", "stepwise_approximation", "pointwise_leq",
    "RngStream", "MCEstimate", "pooled_std_error", "sample_covariance", "run_paths", "simulate_paths",
    "evaluate_functionals", "Monotonicity", "MonotoneFunctional", "WeightMeasure", "ScalarMap", "compose",
    "CovMatrix", "FactorizationResult", "pitt_check", "nonneg_factorization", "horn_matrix",
]
