"""Gaussian process samplers - Brownian motion, series BM, bridge, fBm, Liouville, parametric Wiener integrals"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, ClassVar, List, Optional, Tuple
import logging

import numpy as np
from scipy import integrate, linalg

from ..errors import DomainError, FactorizationError, StructuralError
from ..models.gaussian_vectors import CovMatrix
from ..models.grid import Path, TimeGrid
from ..models.rng import RngStream, standard_normals
from .base import ProcessSpec, check_kernel_values, evaluate_kernel, reflect_sign

logger = logging.getLogger(__name__)

MAX_CHOLESKY_NODES = 2000
DEFAULT_TAIL_FACTOR = 50.0
DEFAULT_QUAD_FACTOR = 4
_TAIL_CELLS = 64
_ORIGIN_REFINEMENT = 16
_PSD_TOL = 1e-10


def _check_hurst(hurst: float, allow_one: bool = True) -> float:
    upper_ok = hurst <= 1.0 if allow_one else hurst < 1.0
    if not (0.0 < hurst and upper_ok):
        bound = "(0, 1]" if allow_one else "(0, 1)"
        raise DomainError(f"Hurst exponent must lie in {bound}, got {hurst}")
    return float(hurst)


def _fine_cells(grid: TimeGrid, quad_steps: Optional[int],
                quad_factor: int = DEFAULT_QUAD_FACTOR) -> Tuple[int, float]:
    """Subdivision factor q (quad_steps, default quad_factor * n, rounded up to a multiple of n) and fine step."""
    steps = quad_steps if quad_steps is not None else quad_factor * grid.n_steps
    if steps < grid.n_steps:
        raise DomainError(f"quad_steps={steps} is coarser than the grid ({grid.n_steps} steps)")
    q = int(np.ceil(steps / grid.n_steps))
    return q, grid.step / q


def _tail_breakpoints(start: float, cutoff: float) -> np.ndarray:
    if cutoff <= start:
        return np.array([start])
    return np.geomspace(start, cutoff, _TAIL_CELLS + 1)


class GaussianSpec(ProcessSpec):
    """Centered Gaussian process driven linearly by standard normals."""
    reflectable: ClassVar[bool] = True

    def mean(self, grid: TimeGrid) -> np.ndarray:
        return np.zeros(grid.size)

    def covariance(self, grid: TimeGrid) -> np.ndarray:
        """Closed-form or quadrature covariance matrix on the grid nodes."""
        raise NotImplementedError


@dataclass(frozen=True)
class BrownianMotion(GaussianSpec):
    name: ClassVar[str] = "brownian_motion"

    def sample(self, grid: TimeGrid, streams: List[RngStream], reflect: bool = False) -> np.ndarray:
        z = standard_normals(streams, grid.n_steps)
        increments = reflect_sign(reflect) * np.sqrt(grid.step) * z
        out = np.zeros((len(streams), grid.size))
        np.cumsum(increments, axis=1, out=out[:, 1:])
        return out

    def covariance(self, grid: TimeGrid) -> np.ndarray:
        t = grid.points
        return np.minimum.outer(t, t)


def bm_series_basis(grid: TimeGrid, n_terms: int) -> np.ndarray:
    """(n_terms, n+1) matrix of sqrt(2T)(1 - cos(pi n t / T)) / (pi n); every entry is >= 0."""
    if n_terms < 1:
        raise DomainError(f"n_terms must be >= 1, got {n_terms}")
    T = grid.horizon
    k = np.arange(1, n_terms + 1, dtype=np.float64)[:, None]
    return np.sqrt(2.0 * T) * (1.0 - np.cos(np.pi * k * grid.points[None, :] / T)) / (np.pi * k)


def bm_series_covariance(s: float, t: float, horizon: float, n_terms: int) -> float:
    """Exact covariance of the series truncated after n_terms; tends to min(s, t)."""
    k = np.arange(1, n_terms + 1, dtype=np.float64)
    a = np.pi * k / horizon
    return float(2.0 * horizon * np.sum((1 - np.cos(a * s)) * (1 - np.cos(a * t)) / (np.pi * k) ** 2))


@dataclass(frozen=True)
class BrownianSeries(GaussianSpec):
    """Brownian motion as a random series with nonnegative coefficient functions."""
    name: ClassVar[str] = "brownian_series"
    n_terms: int = 1000

    def __post_init__(self):
        if self.n_terms < 1:
            raise DomainError(f"n_terms must be >= 1, got {self.n_terms}")

    def sample(self, grid: TimeGrid, streams: List[RngStream], reflect: bool = False) -> np.ndarray:
        xi = standard_normals(streams, self.n_terms)
        return reflect_sign(reflect) * (xi @ _series_basis(grid, self.n_terms))

    def covariance(self, grid: TimeGrid) -> np.ndarray:
        basis = _series_basis(grid, self.n_terms)
        return basis.T @ basis

    def describe(self) -> dict:
        return {"name": self.name, "n_terms": self.n_terms}


@lru_cache(maxsize=32)
def _series_basis(grid: TimeGrid, n_terms: int) -> np.ndarray:
    return bm_series_basis(grid, n_terms)


@dataclass(frozen=True)
class BrownianBridge(GaussianSpec):
    """X_t = W_t - (t/T) W_T over the grid horizon; pinned at 0 at both ends."""
    name: ClassVar[str] = "brownian_bridge"

    def sample(self, grid: TimeGrid, streams: List[RngStream], reflect: bool = False) -> np.ndarray:
        w = BrownianMotion().sample(grid, streams, reflect=reflect)
        ratio = grid.points / grid.horizon
        return w - ratio[None, :] * w[:, -1:]

    def covariance(self, grid: TimeGrid) -> np.ndarray:
        t = grid.points
        return np.minimum.outer(t, t) - np.outer(t, t) / grid.horizon


def fbm_covariance(s, t, hurst: float):
    """C^H(s,t) = (t^{2H} + s^{2H} - |t - s|^{2H}) / 2."""
    hurst = _check_hurst(hurst)
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if np.any(s < 0) or np.any(t < 0):
        raise DomainError("fBm covariance is defined for non-negative times")
    two_h = 2.0 * hurst
    value = 0.5 * (t ** two_h + s ** two_h - np.abs(t - s) ** two_h)
    return float(value) if value.ndim == 0 else value


def fbm_covariance_matrix(grid: TimeGrid, hurst: float) -> np.ndarray:
    t = grid.points
    return fbm_covariance(t[:, None], t[None, :], hurst)


@lru_cache(maxsize=32)
def _fbm_factor(grid: TimeGrid, hurst: float) -> np.ndarray:
    """Lower factor L with L L^T = [C^H(t_j, t_k)]_{j,k>=1}."""
    if grid.size > MAX_CHOLESKY_NODES:
        raise DomainError(f"dense factorization limited to {MAX_CHOLESKY_NODES} nodes, grid has {grid.size}")
    cov = fbm_covariance_matrix(grid, hurst)[1:, 1:]
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        eigvals, eigvecs = linalg.eigh(cov)
        min_eig = float(eigvals.min())
        if min_eig < -_PSD_TOL * max(float(eigvals.max()), 1.0):
            raise FactorizationError(
                f"fBm covariance (H={hurst}) is not positive semidefinite: min eigenvalue {min_eig:.3e}",
                min_eigenvalue=min_eig)
        logger.debug("Cholesky failed for H=%s; using the eigen factor", hurst)
        return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


@lru_cache(maxsize=8)
def mandelbrot_van_ness_constant(hurst: float) -> float:
    """sqrt of int_0^inf ((1+s)^{H-1/2} - s^{H-1/2})^2 ds + 1/(2H), so that the sum has variance t^{2H}."""
    hurst = _check_hurst(hurst, allow_one=False)
    a = hurst - 0.5

    def integrand(s):
        return ((1.0 + s) ** a - s ** a) ** 2

    head, _ = integrate.quad(integrand, 0.0, 1.0, limit=200)
    tail, _ = integrate.quad(integrand, 1.0, np.inf, limit=200)
    return float(np.sqrt(head + tail + 1.0 / (2.0 * hurst)))


@lru_cache(maxsize=16)
def _mvn_design(grid: TimeGrid, hurst: float, tail_cutoff: float, q: int):
    """Weight matrices (nodes x cells) for the two Wiener integrals plus the tail column."""
    a = hurst - 0.5
    T = grid.horizon
    h_fine = grid.step / q
    # first integral: refined cells at the origin, uniform cells on [0, T], geometric tail
    origin = h_fine * np.geomspace(2.0 ** -_ORIGIN_REFINEMENT, 1.0, _ORIGIN_REFINEMENT + 1)
    uniform = np.arange(1, grid.n_steps * q + 1) * h_fine
    breaks = np.unique(np.concatenate([[0.0], origin, uniform, _tail_breakpoints(T, tail_cutoff)]))
    breaks = breaks[breaks <= max(tail_cutoff, T)]
    widths = np.diff(breaks)
    mids = breaks[:-1] + widths / 2
    t = grid.points[:, None]
    with np.errstate(divide="ignore"):
        k1 = (t + mids[None, :]) ** a - mids[None, :] ** a
    w1 = k1 * np.sqrt(widths)[None, :]
    # asymptotic kernel a t s^{a-1} carries the mass beyond the cutoff in one extra normal
    c = breaks[-1]
    tail = a * grid.points * np.sqrt(c ** (2 * a - 1) / (1 - 2 * a))
    # second integral: midpoint rule on the fine grid of [0, t]
    fine_mids = (np.arange(grid.n_steps * q) + 0.5) * h_fine
    u = t - fine_mids[None, :]
    w2 = np.zeros_like(u)
    mask = u > 0
    w2[mask] = u[mask] ** a * np.sqrt(h_fine)
    norm = mandelbrot_van_ness_constant(hurst)
    return w1 / norm, tail / norm, w2 / norm


@dataclass(frozen=True)
class FractionalBM(GaussianSpec):
    """
    Fractional Brownian motion with Hurst exponent H.

    method="cholesky" samples the exact Gaussian vector on the nodes; method="mvn" discretizes the
    Mandelbrot-Van Ness representation (two independent Wiener integrals).
    """
    name: ClassVar[str] = "fbm"
    hurst: float = 0.5
    method: str = "cholesky"
    tail_cutoff: Optional[float] = None
    quad_steps: Optional[int] = None
    tail_factor: float = DEFAULT_TAIL_FACTOR
    quad_factor: int = DEFAULT_QUAD_FACTOR

    def __post_init__(self):
        _check_hurst(self.hurst, allow_one=self.method != "mvn")
        if self.method not in ("cholesky", "mvn"):
            raise DomainError(f"unknown fBm method {self.method!r}")
        if self.tail_cutoff is not None and self.tail_cutoff <= 0:
            raise DomainError("tail_cutoff must be positive")

    def sample(self, grid: TimeGrid, streams: List[RngStream], reflect: bool = False) -> np.ndarray:
        if self.method == "cholesky":
            factor = _fbm_factor(grid, float(self.hurst))
            z = standard_normals(streams, factor.shape[1])
            out = np.zeros((len(streams), grid.size))
            out[:, 1:] = z @ factor.T
            return reflect_sign(reflect) * out
        cutoff = self.tail_cutoff if self.tail_cutoff is not None else self.tail_factor * grid.horizon
        q, _ = _fine_cells(grid, self.quad_steps, self.quad_factor)
        w1, tail, w2 = _mvn_design(grid, float(self.hurst), float(cutoff), q)
        n1, n2 = w1.shape[1], w2.shape[1]
        z = standard_normals(streams, n1 + 1 + n2)
        out = z[:, :n1] @ w1.T + z[:, n1:n1 + 1] * tail[None, :] + z[:, n1 + 1:] @ w2.T
        return reflect_sign(reflect) * out

    def covariance(self, grid: TimeGrid) -> np.ndarray:
        return fbm_covariance_matrix(grid, self.hurst)

    def describe(self) -> dict:
        return {"name": self.name, "hurst": self.hurst, "method": self.method}


def _convolution_weights(grid: TimeGrid, kernel: Callable, q: int, rule: str, label: str) -> np.ndarray:
    h_fine = grid.step / q
    offset = 0.5 if rule == "midpoint" else 0.0
    s = (np.arange(grid.n_steps * q) + offset) * h_fine
    u = grid.points[:, None] - s[None, :]
    # only cells lying entirely before t_k contribute
    cell_end = (np.arange(grid.n_steps * q) + 1) * h_fine
    mask = cell_end[None, :] <= grid.points[:, None] + 1e-12 * grid.horizon
    weights = np.zeros_like(u)
    values = evaluate_kernel(kernel, u[mask])
    check_kernel_values(values, label)
    weights[mask] = values * np.sqrt(h_fine)
    return weights


@dataclass(frozen=True)
class Liouville(GaussianSpec):
    """
    X_t = int_0^t f(t - s) dW_s as a discrete convolution on a refined subgrid.

    rule="midpoint" evaluates f at the cell midpoint (the last cell sees u = h/2, which keeps
    kernels singular at 0 finite); rule="left" is the literal left-point sum of f(t_k - s_j) dW_j.
    """
    name: ClassVar[str] = "liouville"
    kernel: Callable = lambda u: 1.0
    quad_steps: Optional[int] = None
    rule: str = "midpoint"
    label: str = "kernel"
    quad_factor: int = DEFAULT_QUAD_FACTOR

    def __post_init__(self):
        if self.rule not in ("midpoint", "left"):
            raise DomainError(f"unknown quadrature rule {self.rule!r}")

    def weights(self, grid: TimeGrid) -> np.ndarray:
        q, _ = _fine_cells(grid, self.quad_steps, self.quad_factor)
        return _convolution_weights(grid, self.kernel, q, self.rule, f"Liouville {self.label}")

    def sample(self, grid: TimeGrid, streams: List[RngStream], reflect: bool = False) -> np.ndarray:
        w = self.weights(grid)
        z = standard_normals(streams, w.shape[1])
        return reflect_sign(reflect) * (z @ w.T)

    def covariance(self, grid: TimeGrid) -> np.ndarray:
        """int_0^{s ^ t} f(t - u) f(s - u) du by adaptive quadrature."""
        t = grid.points
        cov = np.zeros((grid.size, grid.size))
        f = self.kernel
        for i in range(1, grid.size):
            for j in range(i, grid.size):
                lo = t[i]
                value, _ = integrate.quad(lambda v: float(f(t[j] - v)) * float(f(t[i] - v)),
                                          0.0, lo, limit=200)
                cov[i, j] = cov[j, i] = value
        return cov

    def describe(self) -> dict:
        return {"name": self.name, "kernel": self.label, "rule": self.rule}


@dataclass(frozen=True)
class ParamWiener(GaussianSpec):
    """X_t = int_0^inf f(t, s) dW_s, truncated at tail_cutoff, with noise shared across t."""
    name: ClassVar[str] = "param_wiener"
    kernel: Callable = lambda t, s: 1.0 * (s <= t)
    tail_cutoff: Optional[float] = None
    quad_steps: Optional[int] = None
    label: str = "kernel"
    tail_factor: float = DEFAULT_TAIL_FACTOR
    quad_factor: int = DEFAULT_QUAD_FACTOR

    def _cells(self, grid: TimeGrid) -> Tuple[np.ndarray, np.ndarray]:
        q, h_fine = _fine_cells(grid, self.quad_steps, self.quad_factor)
        cutoff = self.tail_cutoff if self.tail_cutoff is not None else self.tail_factor * grid.horizon
        uniform = np.arange(grid.n_steps * q + 1) * h_fine
        uniform[-1] = grid.horizon
        breaks = np.unique(np.concatenate([uniform, _tail_breakpoints(grid.horizon, cutoff)]))
        return breaks[:-1], np.diff(breaks)

    def weights(self, grid: TimeGrid) -> np.ndarray:
        starts, widths = self._cells(grid)
        mids = starts + widths / 2
        values = evaluate_kernel(self.kernel, grid.points[:, None], mids[None, :])
        check_kernel_values(values, f"parametric Wiener {self.label}")
        return values * np.sqrt(widths)[None, :]

    def sample(self, grid: TimeGrid, streams: List[RngStream], reflect: bool = False) -> np.ndarray:
        w = self.weights(grid)
        z = standard_normals(streams, w.shape[1])
        return reflect_sign(reflect) * (z @ w.T)

    def covariance(self, grid: TimeGrid) -> np.ndarray:
        """int_0^cutoff f(s, u) f(t, u) du by adaptive quadrature over the sampler's support."""
        starts, widths = self._cells(grid)
        upper = float(starts[-1] + widths[-1])
        t = grid.points
        f = self.kernel
        cov = np.zeros((grid.size, grid.size))
        for i in range(grid.size):
            for j in range(i, grid.size):
                kinks = [p for p in (t[i], t[j]) if 0.0 < p < upper]
                value, _ = integrate.quad(lambda v: float(f(t[i], v)) * float(f(t[j], v)),
                                          0.0, upper, points=kinks or None, limit=400)
                cov[i, j] = cov[j, i] = value
        return cov

    def describe(self) -> dict:
        return {"name": self.name, "kernel": self.label}


def power_kernel(hurst: float) -> Callable:
    """u -> u^{H - 1/2}, the pseudo-fractional Liouville kernel."""
    a = _check_hurst(hurst) - 0.5
    return lambda u: np.power(u, a)


def mvn_first_kernel(hurst: float) -> Callable:
    """(t, s) -> (t + s)^{H - 1/2} - s^{H - 1/2}."""
    a = _check_hurst(hurst) - 0.5
    return lambda t, s: np.power(t + s, a) - np.power(s, a)


@dataclass(frozen=True)
class GaussianVector(GaussianSpec):
    """A d-dimensional centered Gaussian vector laid out as the node values of a (d-1)-step grid."""
    name: ClassVar[str] = "gaussian_vector"
    cov: CovMatrix = None

    def __post_init__(self):
        if not isinstance(self.cov, CovMatrix):
            object.__setattr__(self, "cov", CovMatrix(np.asarray(self.cov, dtype=np.float64)))
        if self.cov.dimension < 2:
            raise DomainError("a Gaussian vector path needs at least 2 coordinates")

    def _check_grid(self, grid: TimeGrid) -> None:
        if grid.size != self.cov.dimension:
            raise StructuralError(f"grid has {grid.size} nodes, the vector has {self.cov.dimension} coordinates")

    def sample(self, grid: TimeGrid, streams: List[RngStream], reflect: bool = False) -> np.ndarray:
        self._check_grid(grid)
        z = reflect_sign(reflect) * standard_normals(streams, self.cov.dimension)
        return z @ _vector_factor(self.cov).T

    def covariance(self, grid: TimeGrid) -> np.ndarray:
        self._check_grid(grid)
        return np.array(self.cov.entries)

    def grid(self) -> TimeGrid:
        return TimeGrid(1.0, self.cov.dimension - 1)

    def describe(self) -> dict:
        return {"name": self.name, "cov": self.cov.to_list()}


@lru_cache(maxsize=32)
def _vector_factor(cov: CovMatrix) -> np.ndarray:
    return cov.factor()


def _single_path(spec: ProcessSpec, grid: TimeGrid, rng: RngStream) -> Path:
    return Path(grid, spec.sample(grid, [rng])[0], spec.interpretation)


def simulate_bm(grid: TimeGrid, rng: RngStream) -> Path:
    return _single_path(BrownianMotion(), grid, rng)


def simulate_bm_series(grid: TimeGrid, n_terms: int, rng: RngStream) -> Path:
    return _single_path(BrownianSeries(n_terms), grid, rng)


def simulate_bridge(grid: TimeGrid, rng: RngStream) -> Path:
    return _single_path(BrownianBridge(), grid, rng)


def simulate_fbm_cholesky(grid: TimeGrid, hurst: float, rng: RngStream) -> Path:
    return _single_path(FractionalBM(hurst, method="cholesky"), grid, rng)


def simulate_fbm_mvn(grid: TimeGrid, hurst: float, rng: RngStream,
                     tail_cutoff: Optional[float] = None, quad_steps: Optional[int] = None) -> Path:
    return _single_path(FractionalBM(hurst, "mvn", tail_cutoff, quad_steps), grid, rng)


def simulate_liouville(grid: TimeGrid, kernel: Callable, rng: RngStream,
                       quad_steps: Optional[int] = None, rule: str = "midpoint") -> Path:
    return _single_path(Liouville(kernel, quad_steps, rule), grid, rng)


def simulate_wiener_param(grid: TimeGrid, kernel: Callable, rng: RngStream,
                          tail_cutoff: Optional[float] = None, quad_steps: Optional[int] = None) -> Path:
    return _single_path(ParamWiener(kernel, tail_cutoff, quad_steps), grid, rng)
