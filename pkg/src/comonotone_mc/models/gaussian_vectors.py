"""Finite-dimensional Gaussian vectors - Pitt's criterion and nonnegative factorization witnesses"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple
import logging

import numpy as np
from scipy import linalg

from ..errors import DomainError, FactorizationError
from .rng import RngStream, standard_normals, stream_range

logger = logging.getLogger(__name__)

PSD_TOLERANCE = 1e-10
WITNESS_FOUND = "witness found"
NO_WITNESS = "no witness found"


@dataclass(frozen=True, eq=False)
class CovMatrix:
    """
    Symmetric positive semidefinite matrix.

    PSD is checked within tolerance: min eigenvalue >= -1e-10 * max eigenvalue. The entries are
    kept exactly as given, so pitt_check compares inputs and not computed values.
    """
    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise DomainError(f"covariance must be a non-empty square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DomainError("covariance entries must be finite")
        scale = max(float(np.max(np.abs(m))), 1.0)
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * scale):
            raise DomainError("covariance must be symmetric")
        eig = np.linalg.eigvalsh(m)
        if eig[0] < -PSD_TOLERANCE * max(eig[-1], 0.0):
            raise FactorizationError(f"covariance is not positive semidefinite (min eigenvalue {eig[0]:.3e})",
                                     min_eigenvalue=float(eig[0]))
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @classmethod
    def bivariate(cls, rho: float, var0: float = 1.0, var1: float = 1.0) -> "CovMatrix":
        off = rho * np.sqrt(var0 * var1)
        return cls(np.array([[var0, off], [off, var1]]))

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def numerical_rank(self, rel_tol: float = PSD_TOLERANCE) -> int:
        s = np.linalg.svd(self.entries, compute_uv=False)
        return int(np.sum(s > rel_tol * s[0])) if s[0] > 0 else 0

    def factor(self) -> np.ndarray:
        """B with B B* = Sigma from the eigen-decomposition, negative eigenvalues clipped to 0."""
        w, u = np.linalg.eigh(self.entries)
        return u * np.sqrt(np.clip(w, 0.0, None))[None, :]

    def to_list(self) -> List[List[float]]:
        return self.entries.tolist()


def pitt_check(cov: CovMatrix) -> bool:
    """Every entry >= 0: the Gaussian vector is componentwise co-monotone."""
    return bool(np.all(cov.entries >= 0))


def horn_matrix() -> CovMatrix:
    """Nonnegative, PSD of rank 4, and not of the form A A* with A >= 0."""
    return CovMatrix(np.array([
        [1.0, 0.0, 0.0, 0.5, 0.5],
        [0.0, 1.0, 0.75, 0.0, 0.5],
        [0.0, 0.75, 1.0, 0.5, 0.0],
        [0.5, 0.0, 0.5, 1.0, 0.0],
        [0.5, 0.5, 0.0, 0.0, 1.0],
    ]))


def random_nonnegative_cov(d: int, rng: RngStream) -> CovMatrix:
    """Sigma = A A* with A uniform on [0, 1)^(d x d): nonnegative entries and PSD."""
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    a = rng.generator().random((d, d))
    m = a @ a.T
    return CovMatrix(0.5 * (m + m.T))


def gaussian_sample(cov: CovMatrix, rng: RngStream) -> np.ndarray:
    return gaussian_samples(cov, 1, rng.seed, rng.stream_id)[0]


def gaussian_samples(cov: CovMatrix, n_samples: int, seed: int, stream_offset: int = 0) -> np.ndarray:
    """(n_samples, d) centered Gaussian draws; row i comes from stream stream_offset + i."""
    z = standard_normals(stream_range(seed, stream_offset, stream_offset + n_samples), cov.dimension)
    return z @ cov.factor().T


@dataclass(frozen=True)
class FactorizationResult:
    """Outcome of the nonnegative factorization search. Failure is evidence, never a proof."""
    success: bool
    residual: float
    rank: int
    factor: Optional[np.ndarray] = field(default=None, compare=False)
    restarts: int = 0
    ranks_tried: Tuple[int, ...] = ()

    @property
    def label(self) -> str:
        return WITNESS_FOUND if self.success else NO_WITNESS

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "label": self.label,
            "residual": self.residual,
            "rank": self.rank,
            "restarts": self.restarts,
            "ranks_tried": list(self.ranks_tried),
        }


def _residual(sigma: np.ndarray, a: np.ndarray) -> float:
    return float(np.linalg.norm(sigma - a @ a.T, "fro"))


def _pad(a: np.ndarray, r: int) -> Optional[np.ndarray]:
    if a.shape[1] > r:
        return None
    return np.hstack([a, np.zeros((a.shape[0], r - a.shape[1]))])


def _exact_witness(cov: CovMatrix, r: int, tol: float) -> Optional[np.ndarray]:
    """Closed-form candidates: diagonal, nonnegative Cholesky factor, sign-fixed eigen factor."""
    sigma = cov.entries
    candidates = []
    if np.count_nonzero(sigma - np.diag(np.diag(sigma))) == 0:
        candidates.append(np.diag(np.sqrt(np.diag(sigma))))
    try:
        candidates.append(linalg.cholesky(sigma, lower=True))
    except linalg.LinAlgError:
        pass
    w, u = np.linalg.eigh(sigma)
    keep = w > PSD_TOLERANCE * max(w[-1], 0.0)
    b = u[:, keep] * np.sqrt(w[keep])[None, :]
    b = b * np.where(b.sum(axis=0) < 0, -1.0, 1.0)[None, :]
    candidates.append(b)
    for a in candidates:
        if a.min() < -1e-14:
            continue
        a = _pad(np.clip(a, 0.0, None), r)
        if a is not None and _residual(sigma, a) <= tol:
            return a
    return None


def _symmetric_nmf(sigma: np.ndarray, r: int, gen: np.random.Generator, tol: float,
                   max_iter: int) -> Tuple[np.ndarray, float]:
    """Multiplicative updates A <- A * (1/2 + (Sigma A) / (2 A A* A)) from a random start."""
    scale = np.sqrt(max(float(sigma.mean()), 1e-12) / r)
    a = gen.uniform(1e-8, scale, size=(sigma.shape[0], r))
    best = _residual(sigma, a)
    best_a = a.copy()
    stall = 0
    for _ in range(max_iter):
        denom = a @ (a.T @ a) + 1e-16
        a = a * np.maximum(0.5 + 0.5 * (sigma @ a) / denom, 0.0)
        res = _residual(sigma, a)
        if res < best * (1.0 - 1e-12):
            best, best_a, stall = res, a.copy(), 0
        else:
            stall += 1
        if best <= tol or stall >= 200:
            break
    return best_a, best


def nonneg_factorization(
    cov: CovMatrix,
    r: Optional[int] = None,
    tol: float = 1e-8,
    max_iter: int = 5000,
    restarts: int = 20,
    seed: int = 0,
    workers: int = 1,
) -> FactorizationResult:
    """
    Search for A (d x r, A >= 0) with ||Sigma - A A*||_F <= tol.

    With r unset the rank sweeps d..2d until a witness is found. Each restart draws its start from
    its own stream, so the result does not depend on `workers`.
    """
    d = cov.dimension
    if r is not None and r < 1:
        raise DomainError(f"factorization rank must be >= 1, got {r}")
    ranks = [r] if r is not None else list(range(d, 2 * d + 1))
    sigma = cov.entries
    if not pitt_check(cov):
        logger.info("covariance has negative entries; no nonnegative factor can exist")
    best_a, best_res, best_rank = None, np.inf, ranks[0]
    for rank in ranks:
        exact = _exact_witness(cov, rank, tol)
        if exact is not None:
            tried = tuple(ranks[:ranks.index(rank) + 1])
            return FactorizationResult(True, _residual(sigma, exact), rank, exact, 0, tried)

        def attempt(restart: int) -> Tuple[np.ndarray, float]:
            gen = RngStream(seed, rank * restarts + restart).generator()
            return _symmetric_nmf(sigma, rank, gen, tol, max_iter)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(attempt, range(restarts)))
        else:
            outcomes = [attempt(i) for i in range(restarts)]
        for a, res in outcomes:
            if res < best_res:
                best_a, best_res, best_rank = a, res, rank
        logger.info("nonnegative factorization r=%d: best residual %.3e over %d restarts", rank, best_res, restarts)
        if best_res <= tol:
            return FactorizationResult(True, best_res, best_rank, best_a, restarts,
                                       tuple(ranks[:ranks.index(rank) + 1]))
    return FactorizationResult(False, best_res, best_rank, best_a, restarts, tuple(ranks))
