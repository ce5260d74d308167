"""Co-monotony Lab - Covariance Sign Tests, Functional Antithetic Estimator and Running Extrema"""

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations_with_replacement
from typing import Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy import stats

from ..errors import DomainError, SimulationError
from ..models.estimate import MCEstimate, pooled_std_error, sample_covariance
from ..models.functionals import MonotoneFunctional, Monotonicity, ScalarMap, compose, coordinate, running_max
from ..models.gaussian_vectors import CovMatrix
from ..models.grid import TimeGrid
from ..models.simulation import evaluate_functionals, run_paths
from ..processes.gaussian import GaussianVector

logger = logging.getLogger(__name__)

MIN_PATHS = 100
DEFAULT_Z = 4.0
DEFAULT_KURTOSIS_LIMIT = 100.0


class PredictedSign(Enum):
    NONNEGATIVE = ">=0"
    NONPOSITIVE = "<=0"
    NONE = "none"


class Verdict(Enum):
    CONSISTENT = "consistent"
    VIOLATION = "violation"
    INCONCLUSIVE = "inconclusive"


def predicted_sign(f: MonotoneFunctional, g: MonotoneFunctional) -> PredictedSign:
    """Same monotony -> Cov >= 0, opposite -> Cov <= 0, otherwise no prediction."""
    if Monotonicity.NONE in (f.monotonicity, g.monotonicity):
        return PredictedSign.NONE
    if f.monotonicity is g.monotonicity:
        return PredictedSign.NONNEGATIVE
    return PredictedSign.NONPOSITIVE


def judge(estimate: float, std_error: float, sign: PredictedSign, z_threshold: float = DEFAULT_Z) -> Verdict:
    """Violation iff the estimate lies beyond z_threshold * std_error on the wrong side."""
    if sign is PredictedSign.NONE:
        return Verdict.INCONCLUSIVE
    margin = z_threshold * std_error
    if sign is PredictedSign.NONNEGATIVE and estimate < -margin:
        return Verdict.VIOLATION
    if sign is PredictedSign.NONPOSITIVE and estimate > margin:
        return Verdict.VIOLATION
    return Verdict.CONSISTENT


@dataclass(frozen=True)
class CovTestReport:
    """Paired covariance estimate of (F(X), G(X)) with the verdict of the co-monotony sign test."""
    name: str
    cov_estimate: float
    std_error: float
    n_paths: int
    predicted_sign: PredictedSign
    verdict: Verdict
    z_threshold: float = DEFAULT_Z
    kurtosis: Optional[float] = None
    note: str = ""

    def to_row(self) -> dict:
        return {
            "name": self.name,
            "mean": self.cov_estimate,
            "stderr": self.std_error,
            "n": self.n_paths,
            "predicted": self.predicted_sign.value,
            "verdict": self.verdict.value,
        }

    def to_dict(self) -> dict:
        return {**self.to_row(), "z_threshold": self.z_threshold, "kurtosis": self.kurtosis, "note": self.note}


def _check_finite(values: np.ndarray, functional: MonotoneFunctional) -> None:
    bad = ~np.isfinite(values)
    if np.any(bad):
        raise SimulationError(f"functional {functional.name} is not finite on path {int(np.argmax(bad))}")


def covariance_report(
    name: str,
    f_values: np.ndarray,
    g_values: np.ndarray,
    sign: PredictedSign,
    z_threshold: float = DEFAULT_Z,
    kurtosis_limit: float = DEFAULT_KURTOSIS_LIMIT,
) -> CovTestReport:
    """Sign test on already evaluated, paired functional samples."""
    cov, se = sample_covariance(f_values, g_values)
    products = (f_values - f_values.mean()) * (g_values - g_values.mean())
    kurt = None
    note = ""
    verdict = judge(cov, se, sign, z_threshold)
    if se > 0:
        kurt = float(stats.kurtosis(products, fisher=False))
        if np.isfinite(kurt) and kurt > kurtosis_limit:
            logger.warning("%s: kurtosis %.1f of the centered products exceeds %.0f; verdict downgraded",
                           name, kurt, kurtosis_limit)
            verdict = Verdict.INCONCLUSIVE
            note = "kurtosis guard"
    return CovTestReport(name, cov, se, int(f_values.shape[0]), sign, verdict, z_threshold, kurt, note)


def estimate_cov(
    process,
    grid: TimeGrid,
    f: MonotoneFunctional,
    g: MonotoneFunctional,
    n_paths: int,
    seed: int,
    z_threshold: float = DEFAULT_Z,
    kurtosis_limit: float = DEFAULT_KURTOSIS_LIMIT,
    stream_offset: int = 0,
    workers: int = 1,
    chunk_size: int = 4096,
    name: Optional[str] = None,
) -> CovTestReport:
    """
    Estimate Cov(F(X), G(X)) on common paths and test the sign predicted by the monotony metadata.

    Args:
        process: process spec
        grid: simulation grid
        f, g: functionals evaluated on the same paths
        n_paths: number of paths (>= 100)
        seed: master seed
        z_threshold: one-sided threshold in standard errors

    Returns:
        CovTestReport
    """
    if n_paths < MIN_PATHS:
        raise DomainError(f"the covariance test needs at least {MIN_PATHS} paths, got {n_paths}")
    values = evaluate_functionals(process, grid, [f, g], n_paths, seed, stream_offset=stream_offset,
                                  workers=workers, chunk_size=chunk_size)
    _check_finite(values[:, 0], f)
    _check_finite(values[:, 1], g)
    label = name or f"{getattr(process, 'name', 'process')}:{f.name}~{g.name}"
    return covariance_report(label, values[:, 0], values[:, 1], predicted_sign(f, g), z_threshold, kurtosis_limit)


def sweep(
    cases: Sequence[Tuple[str, object, TimeGrid]],
    functionals: Sequence[MonotoneFunctional],
    n_paths: int,
    seed: int,
    pairs: Optional[Sequence[Tuple[int, int]]] = None,
    z_threshold: float = DEFAULT_Z,
    kurtosis_limit: float = DEFAULT_KURTOSIS_LIMIT,
    workers: int = 1,
    chunk_size: int = 4096,
) -> List[CovTestReport]:
    """
    Covariance sign tests over processes x functional pairs.

    Each process is simulated once and every functional is evaluated on the same paths. `pairs`
    indexes into `functionals`; by default every unordered pair, diagonal included.
    """
    if n_paths < MIN_PATHS:
        raise DomainError(f"the covariance test needs at least {MIN_PATHS} paths, got {n_paths}")
    index_pairs = list(pairs) if pairs is not None else list(combinations_with_replacement(range(len(functionals)), 2))
    reports = []
    for label, process, grid in cases:
        values = evaluate_functionals(process, grid, list(functionals), n_paths, seed,
                                      workers=workers, chunk_size=chunk_size)
        for j, f in enumerate(functionals):
            _check_finite(values[:, j], f)
        for i, j in index_pairs:
            f, g = functionals[i], functionals[j]
            reports.append(covariance_report(f"{label}:{f.name}~{g.name}", values[:, i], values[:, j],
                                             predicted_sign(f, g), z_threshold, kurtosis_limit))
        logger.info("sweep %s: %d pairs", label, len(index_pairs))
    return reports


def pitt_consistency(
    label: str,
    cov: CovMatrix,
    maps: Sequence[ScalarMap],
    n_paths: int,
    seed: int,
    z_threshold: float = DEFAULT_Z,
    kurtosis_limit: float = DEFAULT_KURTOSIS_LIMIT,
    workers: int = 1,
    chunk_size: int = 4096,
) -> List[CovTestReport]:
    """
    Cov(f(X_i), g(X_j)) for every ordered pair of scalar maps (f, g) and every i < j.

    With nonnegative covariance entries no row should be a violation.
    """
    vector = GaussianVector(cov)
    d = cov.dimension
    functionals = [compose(m, coordinate(k)) for m in maps for k in range(d)]
    pairs = [(a * d + i, b * d + j)
             for a in range(len(maps)) for b in range(len(maps))
             for i in range(d) for j in range(i + 1, d)]
    return sweep([(label, vector, vector.grid())], functionals, n_paths, seed, pairs=pairs,
                 z_threshold=z_threshold, kurtosis_limit=kurtosis_limit, workers=workers, chunk_size=chunk_size)


@dataclass(frozen=True)
class AntitheticReport:
    """Plain vs functional antithetic estimator on the same driving noise."""
    name: str
    plain: MCEstimate
    antithetic: MCEstimate
    variance_ratio: float
    ratio_ci: Optional[Tuple[float, float]] = None
    confidence: float = 0.99
    z_threshold: float = DEFAULT_Z

    @property
    def mean_gap(self) -> float:
        return self.antithetic.mean - self.plain.mean

    @property
    def unbiased(self) -> bool:
        return abs(self.mean_gap) <= self.z_threshold * pooled_std_error(self.plain, self.antithetic)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "plain": self.plain.to_dict(),
            "antithetic": self.antithetic.to_dict(),
            "variance_ratio": self.variance_ratio,
            "ratio_ci": list(self.ratio_ci) if self.ratio_ci else None,
            "confidence": self.confidence,
            "unbiased": self.unbiased,
        }


def _variance_ratio(plain, antithetic, axis=-1):
    return np.var(antithetic, ddof=1, axis=axis) / np.var(plain, ddof=1, axis=axis)


def antithetic_estimate(
    process,
    grid: TimeGrid,
    f: MonotoneFunctional,
    n_paths: int,
    seed: int,
    bootstrap_resamples: int = 200,
    confidence: float = 0.99,
    z_threshold: float = DEFAULT_Z,
    stream_offset: int = 0,
    workers: int = 1,
    chunk_size: int = 4096,
) -> AntitheticReport:
    """
    (F(X) + F(T(X))) / 2 with T the reflection W -> -W of the driving noise.

    The plain estimator uses F(X) on the same n_paths noise draws, so the variance ratio compares
    both estimators at equal noise budget. The bootstrap CI of the ratio resamples path indices.
    """
    if n_paths < 2:
        raise DomainError("the antithetic estimator needs at least 2 paths")

    def evaluate(paths, reflected):
        return np.column_stack([f.evaluate(paths, grid), f.evaluate(reflected, grid)])

    values = run_paths(process, grid, n_paths, seed, evaluate, coupled=True, stream_offset=stream_offset,
                       workers=workers, chunk_size=chunk_size)
    _check_finite(values[:, 0], f)
    _check_finite(values[:, 1], f)
    plain_samples = values[:, 0]
    anti_samples = 0.5 * (values[:, 0] + values[:, 1])
    plain = MCEstimate.from_samples(plain_samples, f.name)
    antithetic = MCEstimate.from_samples(anti_samples, f.name)
    ratio = antithetic.variance / plain.variance if plain.variance > 0 else float("nan")
    ci = None
    if plain.variance > 0 and bootstrap_resamples > 0:
        result = stats.bootstrap((plain_samples, anti_samples), _variance_ratio, paired=True, vectorized=True,
                                 n_resamples=bootstrap_resamples, batch=20, confidence_level=confidence,
                                 method="percentile", random_state=np.random.Generator(np.random.Philox(seed)))
        ci = (float(result.confidence_interval.low), float(result.confidence_interval.high))
    name = f"{getattr(process, 'name', 'process')}:{f.name}"
    logger.info("%s: antithetic variance ratio %.4g", name, ratio)
    return AntitheticReport(name, plain, antithetic, ratio, ci, confidence, z_threshold)


@dataclass(frozen=True)
class ConditionalEstimate:
    """P(sup X >= y | X_T >= x) estimated on the paths that satisfy the conditioning event."""
    x: float
    probability: float
    std_error: float
    n_conditioned: int
    verdict: Verdict


@dataclass(frozen=True)
class ExtremaReport:
    level: float
    unconditional: MCEstimate
    conditionals: List[ConditionalEstimate] = field(default_factory=list)

    @property
    def minimum(self) -> Optional[ConditionalEstimate]:
        usable = [c for c in self.conditionals if c.verdict is not Verdict.INCONCLUSIVE]
        return min(usable, key=lambda c: c.probability) if usable else None

    @property
    def gap(self) -> Optional[float]:
        best = self.minimum
        return None if best is None else best.probability - self.unconditional.mean

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "unconditional": self.unconditional.to_dict(),
            "conditionals": [
                {"x": c.x, "probability": c.probability, "std_error": c.std_error,
                 "n_conditioned": c.n_conditioned, "verdict": c.verdict.value}
                for c in self.conditionals
            ],
            "gap": self.gap,
        }


def running_extrema_conditional(
    process,
    grid: TimeGrid,
    level: float,
    x_list: Sequence[float],
    n_paths: int,
    seed: int,
    z_threshold: float = DEFAULT_Z,
    stream_offset: int = 0,
    workers: int = 1,
    chunk_size: int = 4096,
) -> ExtremaReport:
    """
    P(sup X >= y) against P(sup X >= y | X_T >= x) for each x <= y.

    By co-monotony of sup and X_T every conditional probability dominates the unconditional one;
    a conditional estimate below unconditional - z * pooled stderr is a violation.
    """
    xs = [float(x) for x in x_list]
    if any(x > level for x in xs):
        raise DomainError(f"every conditioning level must be <= {level}")
    top = running_max()

    def evaluate(paths):
        return np.column_stack([top.evaluate(paths, grid), paths[:, -1]])

    values = run_paths(process, grid, n_paths, seed, evaluate, stream_offset=stream_offset,
                       workers=workers, chunk_size=chunk_size)
    hit = (values[:, 0] >= level).astype(np.float64)
    unconditional = MCEstimate.from_samples(hit, "running maximum indicator")
    conditionals = []
    for x in xs:
        mask = values[:, 1] >= x
        n_cond = int(mask.sum())
        if n_cond < 2:
            conditionals.append(ConditionalEstimate(x, float("nan"), float("nan"), n_cond, Verdict.INCONCLUSIVE))
            continue
        p = float(hit[mask].mean())
        se = float(np.sqrt(p * (1.0 - p) / n_cond))
        pooled = np.hypot(se, unconditional.std_error)
        verdict = Verdict.VIOLATION if p < unconditional.mean - z_threshold * pooled else Verdict.CONSISTENT
        conditionals.append(ConditionalEstimate(x, p, se, n_cond, verdict))
    return ExtremaReport(float(level), unconditional, conditionals)


def verdict_counts(reports: Sequence[CovTestReport]) -> Dict[str, int]:
    counts = {v.value: 0 for v in Verdict}
    for r in reports:
        counts[r.verdict.value] += 1
    return counts
