"""Monte Carlo estimates and paired-sample statistics."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..errors import DomainError, SimulationError


@dataclass(frozen=True)
class MCEstimate:
    """Sample mean of n_samples draws with its variance and standard error."""
    mean: float
    variance: float
    n_samples: int
    std_error: float

    def __post_init__(self):
        if self.n_samples < 2:
            raise DomainError(f"an estimate needs at least 2 samples, got {self.n_samples}")
        if self.variance < 0:
            raise DomainError(f"variance must be non-negative, got {self.variance}")
        expected = float(np.sqrt(self.variance / self.n_samples))
        if not np.isclose(self.std_error, expected, rtol=1e-12, atol=0.0):
            raise DomainError("std_error must equal sqrt(variance / n_samples)")

    @classmethod
    def from_samples(cls, samples: np.ndarray, name: str = "samples") -> "MCEstimate":
        x = np.asarray(samples, dtype=np.float64).ravel()
        if not np.all(np.isfinite(x)):
            raise SimulationError(f"non-finite values in {name}")
        if x.shape[0] < 2:
            raise DomainError(f"an estimate needs at least 2 samples, got {x.shape[0]}")
        mean = float(np.mean(x))
        variance = float(np.var(x, ddof=1))
        return cls(mean, variance, x.shape[0], float(np.sqrt(variance / x.shape[0])))

    @classmethod
    def paired_difference(cls, a: np.ndarray, b: np.ndarray) -> "MCEstimate":
        """Estimate of E a - E b from paired samples drawn on common random numbers."""
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.shape != b.shape:
            raise DomainError("paired samples must have the same shape")
        return cls.from_samples(a - b, name="paired difference")

    def z_score(self, reference: float) -> float:
        if self.std_error == 0:
            return 0.0 if self.mean == reference else float(np.sign(self.mean - reference) * np.inf)
        return (self.mean - reference) / self.std_error

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "variance": self.variance,
            "n_samples": self.n_samples,
            "std_error": self.std_error,
        }


def pooled_std_error(*estimates: MCEstimate) -> float:
    return float(np.sqrt(sum(e.std_error ** 2 for e in estimates)))


def sample_covariance(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    """
    Paired covariance estimate (1/(N-1)) sum (x_i - x̄)(y_i - ȳ) and its standard error.

    The standard error is the sample standard deviation of the centered products over sqrt(N).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    if y.shape[0] != n or n < 2:
        raise DomainError("covariance needs two paired samples of equal length >= 2")
    products = (x - x.mean()) * (y - y.mean())
    cov = float(products.sum() / (n - 1))
    std_error = float(np.std(products, ddof=1) / np.sqrt(n))
    return cov, std_error


def covariance_matrix_with_errors(paths: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Empirical covariance matrix of path nodes and the entrywise standard errors."""
    centered = paths - paths.mean(axis=0)
    n = paths.shape[0]
    cov = centered.T @ centered / (n - 1)
    second = (centered ** 2).T @ (centered ** 2) / (n - 1)
    var_products = np.maximum(second - cov ** 2, 0.0)
    return cov, np.sqrt(var_products / n)
