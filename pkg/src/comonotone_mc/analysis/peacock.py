"""Peacock Lab - Convex-Order Monotonicity Curves on Common Random Numbers and the Scalar Vega Identity"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence
import logging

import numpy as np
from scipy import special, stats

from ..errors import DomainError
from ..models.estimate import MCEstimate, pooled_std_error
from ..models.functionals import WeightMeasure
from ..models.grid import TimeGrid
from ..models.rng import RngStream
from ..models.simulation import run_paths
from ..processes.diffusion import GBMSpec
from ..processes.gaussian import BrownianMotion
from ..processes.pii import PIISpec
from .comonotony import DEFAULT_Z, Verdict

logger = logging.getLogger(__name__)


class ConvexVariant(Enum):
    CALL_PART = "call_part"
    ABS_DEV = "abs_dev"
    SQUARE = "square"
    SOFT_PLUS = "soft_plus"
    LINEAR = "linear"


@dataclass(frozen=True)
class ConvexTestFn:
    """
    Convex test function phi with its right derivative phi'_r.

    call_part(K) = (x - K)_+, abs_dev(K) = |x - K|, square = x^2,
    soft_plus(K, eps) = eps log(1 + e^{(x - K)/eps}), linear = x.
    """
    variant: ConvexVariant
    strike: float = 0.0
    eps: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "variant", ConvexVariant(self.variant))
        if self.strike < 0:
            raise DomainError(f"strike must be non-negative, got {self.strike}")
        if not self.eps > 0:
            raise DomainError(f"smoothing width must be positive, got {self.eps}")

    @classmethod
    def call_part(cls, strike: float) -> "ConvexTestFn":
        return cls(ConvexVariant.CALL_PART, strike)

    @classmethod
    def abs_dev(cls, strike: float) -> "ConvexTestFn":
        return cls(ConvexVariant.ABS_DEV, strike)

    @classmethod
    def square(cls) -> "ConvexTestFn":
        return cls(ConvexVariant.SQUARE)

    @classmethod
    def soft_plus(cls, strike: float, eps: float) -> "ConvexTestFn":
        return cls(ConvexVariant.SOFT_PLUS, strike, eps)

    @classmethod
    def linear(cls) -> "ConvexTestFn":
        return cls(ConvexVariant.LINEAR)

    @property
    def name(self) -> str:
        if self.variant in (ConvexVariant.SQUARE, ConvexVariant.LINEAR):
            return self.variant.value
        if self.variant is ConvexVariant.SOFT_PLUS:
            return f"soft_plus({self.strike:g},{self.eps:g})"
        return f"{self.variant.value}({self.strike:g})"

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        v = self.variant
        if v is ConvexVariant.CALL_PART:
            return np.maximum(x - self.strike, 0.0)
        if v is ConvexVariant.ABS_DEV:
            return np.abs(x - self.strike)
        if v is ConvexVariant.SQUARE:
            return x * x
        if v is ConvexVariant.SOFT_PLUS:
            return self.eps * np.logaddexp(0.0, (x - self.strike) / self.eps)
        return x

    def right_derivative(self, x):
        x = np.asarray(x, dtype=np.float64)
        v = self.variant
        if v is ConvexVariant.CALL_PART:
            return (x >= self.strike).astype(np.float64)
        if v is ConvexVariant.ABS_DEV:
            return np.where(x >= self.strike, 1.0, -1.0)
        if v is ConvexVariant.SQUARE:
            return 2.0 * x
        if v is ConvexVariant.SOFT_PLUS:
            return special.expit((x - self.strike) / self.eps)
        return np.ones_like(x)

    def to_dict(self) -> dict:
        return {"variant": self.variant.value, "strike": self.strike, "eps": self.eps}


def check_midpoint_convexity(phi: ConvexTestFn, n_checks: int = 1000, seed: int = 0,
                             low: float = -10.0, high: float = 10.0) -> int:
    """Number of random pairs (a, b) violating phi((a+b)/2) <= (phi(a)+phi(b))/2; 0 means passed."""
    gen = RngStream(seed, 0).generator()
    a = gen.uniform(low, high, n_checks)
    b = gen.uniform(low, high, n_checks)
    lhs = phi(0.5 * (a + b))
    rhs = 0.5 * (phi(a) + phi(b))
    slack = 1e-12 * np.maximum(1.0, np.abs(rhs))
    return int(np.sum(lhs > rhs + slack))


@dataclass(frozen=True, eq=False)
class PeacockCurve:
    """
    E phi(Y_lambda) over a parameter grid, every point on the same driving noise.

    `differences[j]` estimates value[j+1] - value[j] from the paired samples.
    """
    name: str
    parameter: str
    grid: np.ndarray
    estimates: List[MCEstimate]
    differences: List[MCEstimate]
    note: str = ""

    @classmethod
    def from_samples(cls, name: str, parameter: str, grid: Sequence[float], samples: np.ndarray,
                     note: str = "") -> "PeacockCurve":
        samples = np.asarray(samples, dtype=np.float64)
        estimates = [MCEstimate.from_samples(samples[:, j], f"{name}[{j}]") for j in range(samples.shape[1])]
        differences = [MCEstimate.paired_difference(samples[:, j + 1], samples[:, j])
                       for j in range(samples.shape[1] - 1)]
        return cls(name, parameter, np.asarray(grid, dtype=np.float64), estimates, differences, note)

    @property
    def values(self) -> np.ndarray:
        return np.array([e.mean for e in self.estimates])

    @property
    def std_errors(self) -> np.ndarray:
        return np.array([e.std_error for e in self.estimates])

    def difference_verdicts(self, z_threshold: float = DEFAULT_Z) -> List[Verdict]:
        return [Verdict.VIOLATION if d.mean < -z_threshold * d.std_error else Verdict.CONSISTENT
                for d in self.differences]

    def is_monotone(self, z_threshold: float = DEFAULT_Z) -> bool:
        """One-sided test on consecutive paired differences."""
        return Verdict.VIOLATION not in self.difference_verdicts(z_threshold)

    def is_flat(self, reference: Optional[float] = None, z_threshold: float = DEFAULT_Z) -> bool:
        """Every difference, and every point against `reference` if given, within z standard errors."""
        if any(abs(d.mean) > z_threshold * d.std_error for d in self.differences):
            return False
        if reference is None:
            return True
        return all(abs(e.mean - reference) <= z_threshold * e.std_error for e in self.estimates)

    def curve_rows(self) -> List[dict]:
        return [{"curve": self.name, "parameter": float(p), "value": e.mean, "stderr": e.std_error}
                for p, e in zip(self.grid, self.estimates)]

    def report_rows(self, z_threshold: float = DEFAULT_Z) -> List[dict]:
        rows = []
        for j, (d, verdict) in enumerate(zip(self.differences, self.difference_verdicts(z_threshold))):
            rows.append({"name": f"{self.name}:diff[{self.grid[j]:g}->{self.grid[j + 1]:g}]", "mean": d.mean,
                         "stderr": d.std_error, "n": d.n_samples, "predicted": ">=0", "verdict": verdict.value})
        return rows

    def flat_rows(self, reference: Optional[float] = None, z_threshold: float = DEFAULT_Z) -> List[dict]:
        """Rows of a control curve that must be constant: every difference, then every point against `reference`."""
        rows = []
        for j, d in enumerate(self.differences):
            verdict = Verdict.VIOLATION if abs(d.mean) > z_threshold * d.std_error else Verdict.CONSISTENT
            rows.append({"name": f"{self.name}:diff[{self.grid[j]:g}->{self.grid[j + 1]:g}]", "mean": d.mean,
                         "stderr": d.std_error, "n": d.n_samples, "predicted": "==0", "verdict": verdict.value})
        if reference is not None:
            for p, e in zip(self.grid, self.estimates):
                rows.append(self._point_row(f"{self.name}:level[{p:g}]", e, reference, z_threshold))
        return rows

    def anchor_row(self, expected: float, z_threshold: float = DEFAULT_Z) -> dict:
        """First point of the curve against its exact value (sigma = 0 or the shortest maturity)."""
        return self._point_row(f"{self.name}:anchor[{self.grid[0]:g}]", self.estimates[0], expected, z_threshold)

    @staticmethod
    def _point_row(name: str, estimate: MCEstimate, expected: float, z_threshold: float) -> dict:
        gap = estimate.mean - expected
        slack = z_threshold * estimate.std_error + 1e-12 * max(1.0, abs(expected))
        verdict = Verdict.VIOLATION if abs(gap) > slack else Verdict.CONSISTENT
        return {"name": name, "mean": gap, "stderr": estimate.std_error, "n": estimate.n_samples,
                "predicted": "==0", "verdict": verdict.value}


def _check_sigma_grid(sigma_grid: Sequence[float], allow_zero: bool = True) -> np.ndarray:
    grid = np.asarray(sigma_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("parameter grid must be a non-empty sequence")
    if np.any(grid < 0) or (not allow_zero and np.any(grid == 0)):
        raise DomainError("volatility grid must be positive")
    return grid


def exp_pii_peacock(
    spec: PIISpec,
    grid: TimeGrid,
    measure: WeightMeasure,
    phi: ConvexTestFn,
    sigma_grid: Sequence[float],
    n_paths: int,
    seed: int,
    stream_offset: int = 0,
    workers: int = 1,
    chunk_size: int = 4096,
) -> PeacockCurve:
    """sigma -> E phi(int_0^T exp(sigma X_t - Psi(sigma, t)) mu(dt)), each path reused at every sigma."""
    sigmas = _check_sigma_grid(sigma_grid)
    weights = measure.node_weights(grid)
    psi = np.stack([spec.log_laplace(float(s), grid.points) for s in sigmas])

    def evaluate(paths):
        out = np.empty((paths.shape[0], sigmas.size))
        for j, s in enumerate(sigmas):
            out[:, j] = phi(np.exp(s * paths - psi[j][None, :]) @ weights)
        return out

    samples = run_paths(spec, grid, n_paths, seed, evaluate, stream_offset=stream_offset,
                        workers=workers, chunk_size=chunk_size)
    return PeacockCurve.from_samples(f"exp_pii[{spec.label}|{measure.label}|{phi.name}]", "sigma",
                                     sigmas, samples)


def centered_antiderivative_peacock(
    process,
    grid: TimeGrid,
    measure: WeightMeasure,
    phi: ConvexTestFn,
    t_grid: Sequence[float],
    n_paths: int,
    seed: int,
    mean: Optional[np.ndarray] = None,
    prepass_factor: int = 10,
    stream_offset: int = 0,
    workers: int = 1,
    chunk_size: int = 4096,
) -> PeacockCurve:
    """
    t -> E phi(int_{[0,t]} (X_s - E X_s) mu(ds)).

    E X_s comes from `mean`, else the process's closed form, else a pre-pass on `prepass_factor`
    times the path budget drawn from streams disjoint from the main run.
    """
    ts = np.asarray(t_grid, dtype=np.float64)
    for t in ts:
        grid.check_time(float(t))
    note = ""
    if mean is None:
        mean = process.mean(grid)
    if mean is None:
        n_pre = prepass_factor * n_paths
        logger.warning("no closed-form mean for %s; estimating it from %d pre-pass paths",
                       getattr(process, "name", "process"), n_pre)
        pre = run_paths(process, grid, n_pre, seed, lambda p: p, stream_offset=stream_offset + n_paths,
                        workers=workers, chunk_size=chunk_size)
        mean = pre.mean(axis=0)
        bias = float(np.max(pre.std(axis=0, ddof=1)) / np.sqrt(n_pre))
        note = f"pre-pass mean, max stderr {bias:.3g}"
    mean = np.asarray(mean, dtype=np.float64)
    node_weights = np.stack([measure.node_weights(grid, grid.floor_index(float(t))) for t in ts])

    def evaluate(paths):
        return phi((paths - mean[None, :]) @ node_weights.T)

    samples = run_paths(process, grid, n_paths, seed, evaluate, stream_offset=stream_offset,
                        workers=workers, chunk_size=chunk_size)
    name = f"centered[{getattr(process, 'name', 'process')}|{measure.label}|{phi.name}]"
    return PeacockCurve.from_samples(name, "t", ts, samples, note)


def asian_vega_curve(
    base: GBMSpec,
    grid: TimeGrid,
    sigma_grid: Sequence[float],
    strike: float,
    n_paths: int,
    seed: int,
    stream_offset: int = 0,
    workers: int = 1,
    chunk_size: int = 4096,
) -> PeacockCurve:
    """sigma -> e^{-rT} E (1/T int_0^T S_s ds - K)_+ on one Brownian path family."""
    sigmas = _check_sigma_grid(sigma_grid, allow_zero=False)
    weights = WeightMeasure.lebesgue().node_weights(grid)
    phi = ConvexTestFn.call_part(strike)
    t = grid.points
    discount = np.exp(-base.rate * grid.horizon)

    def evaluate(w):
        out = np.empty((w.shape[0], sigmas.size))
        for j, s in enumerate(sigmas):
            spot = base.s0 * np.exp(s * w + ((base.rate - 0.5 * s * s) * t)[None, :])
            out[:, j] = discount * phi(spot @ weights)
        return out

    samples = run_paths(BrownianMotion(), grid, n_paths, seed, evaluate, stream_offset=stream_offset,
                        workers=workers, chunk_size=chunk_size)
    return PeacockCurve.from_samples(f"asian_vega[K={strike:g},r={base.rate:g}]", "sigma", sigmas, samples)


def _running_average_curve(name: str, base: GBMSpec, grid: TimeGrid, phi: ConvexTestFn,
                           t_grid: Sequence[float], n_paths: int, seed: int, stream_offset: int,
                           workers: int, chunk_size: int) -> PeacockCurve:
    ts = np.asarray(t_grid, dtype=np.float64)
    if np.any(ts <= 0):
        raise DomainError("maturities must be positive")
    ends = [grid.floor_index(float(t)) for t in ts]
    if min(ends) < 1:
        raise DomainError(f"maturities must be at least one grid step ({grid.step:g})")
    # left-point average over [0, t_j): the first node average is S_0 exactly
    weights = np.zeros((ts.size, grid.size))
    for i, j in enumerate(ends):
        weights[i, :j] = 1.0 / j

    def evaluate(paths):
        return phi(paths @ weights.T)

    samples = run_paths(base, grid, n_paths, seed, evaluate, stream_offset=stream_offset,
                        workers=workers, chunk_size=chunk_size)
    return PeacockCurve.from_samples(name, "t", grid.points[ends], samples)


def carr_maturity_curve(
    grid: TimeGrid,
    t_grid: Sequence[float],
    phi: ConvexTestFn,
    n_paths: int,
    seed: int,
    stream_offset: int = 0,
    workers: int = 1,
    chunk_size: int = 4096,
) -> PeacockCurve:
    """t -> E phi((1/t) int_0^t e^{B_s - s/2} ds), one path family evaluated at every t."""
    return _running_average_curve(f"carr[{phi.name}]", GBMSpec(s0=1.0, rate=0.0, vol=1.0), grid, phi, t_grid,
                                  n_paths, seed, stream_offset, workers, chunk_size)


def asian_maturity_curve(
    base: GBMSpec,
    grid: TimeGrid,
    t_grid: Sequence[float],
    strike: float,
    n_paths: int,
    seed: int,
    stream_offset: int = 0,
    workers: int = 1,
    chunk_size: int = 4096,
) -> PeacockCurve:
    """t -> E (1/t int_0^t S_s ds - K)_+; non-decreasing in t when the rate is 0."""
    if base.rate != 0:
        logger.warning("asian maturity curve at rate %g: monotony in t is only certified at rate 0", base.rate)
    return _running_average_curve(f"asian_maturity[K={strike:g}]", base, grid, ConvexTestFn.call_part(strike),
                                  t_grid, n_paths, seed, stream_offset, workers, chunk_size)


@dataclass(frozen=True)
class VegaReport:
    """f'(sigma) for f(sigma) = E phi(e^{sigma Z - sigma^2/2}) by two estimators on common normals."""
    phi: ConvexTestFn
    sigma: float
    finite_difference: MCEstimate
    cameron_martin: MCEstimate
    closed_form: Optional[float] = None
    step: float = 1e-3
    z_threshold: float = DEFAULT_Z

    @property
    def agree(self) -> bool:
        gap = self.finite_difference.mean - self.cameron_martin.mean
        return abs(gap) <= self.z_threshold * pooled_std_error(self.finite_difference, self.cameron_martin)

    @property
    def nonnegative(self) -> bool:
        return all(e.mean >= -self.z_threshold * e.std_error
                   for e in (self.finite_difference, self.cameron_martin))

    def relative_error(self) -> Optional[float]:
        if self.closed_form is None or self.closed_form == 0:
            return None
        return abs(self.finite_difference.mean - self.closed_form) / abs(self.closed_form)

    def report_rows(self) -> List[dict]:
        rows = []
        for label, est in (("finite_difference", self.finite_difference), ("cameron_martin", self.cameron_martin)):
            verdict = Verdict.CONSISTENT if est.mean >= -self.z_threshold * est.std_error else Verdict.VIOLATION
            if label == "cameron_martin" and not self.agree:
                verdict = Verdict.VIOLATION
            rows.append({"name": f"vega[{self.phi.name},sigma={self.sigma:g}]:{label}", "mean": est.mean,
                         "stderr": est.std_error, "n": est.n_samples, "predicted": ">=0",
                         "verdict": verdict.value})
        return rows


def vega_closed_form(phi: ConvexTestFn, sigma: float) -> Optional[float]:
    """d/dsigma E phi(e^{sigma Z - sigma^2/2}) where it is known in closed form."""
    v = phi.variant
    if v is ConvexVariant.LINEAR:
        return 0.0
    if v is ConvexVariant.SQUARE:
        return float(2.0 * sigma * np.exp(sigma ** 2))
    if v in (ConvexVariant.CALL_PART, ConvexVariant.ABS_DEV):
        if phi.strike == 0:
            return 0.0
        d1 = (-np.log(phi.strike) + 0.5 * sigma ** 2) / sigma
        vega = float(stats.norm.pdf(d1))
        return vega if v is ConvexVariant.CALL_PART else 2.0 * vega
    return None


def scalar_vega_identity(
    phi: ConvexTestFn,
    sigma: float,
    n_samples: int,
    seed: int,
    step: float = 1e-3,
    z_threshold: float = DEFAULT_Z,
) -> VegaReport:
    """
    Central finite difference of f against the Cameron-Martin form E phi'_r(e^{sigma Z + sigma^2/2}) Z.

    Both use the same normals, drawn from the single stream (seed, 0).
    """
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if not 0 < step < sigma:
        raise DomainError(f"finite difference step must lie in (0, sigma), got {step}")
    z = RngStream(seed, 0).generator().standard_normal(n_samples)
    up, down = sigma + step, sigma - step
    fd = (phi(np.exp(up * z - 0.5 * up ** 2)) - phi(np.exp(down * z - 0.5 * down ** 2))) / (2.0 * step)
    cm = phi.right_derivative(np.exp(sigma * z + 0.5 * sigma ** 2)) * z
    return VegaReport(phi, float(sigma), MCEstimate.from_samples(fd, "finite difference"),
                      MCEstimate.from_samples(cm, "cameron-martin"), vega_closed_form(phi, sigma), step, z_threshold)
