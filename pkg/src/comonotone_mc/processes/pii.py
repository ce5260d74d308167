"""Processes with independent increments - drift, time-changed BM, compound Poisson and fixed-time jumps"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, ClassVar, List, Optional, Tuple
import logging

import numpy as np

from ..errors import DomainError
from ..models.grid import Interpretation, Path, TimeGrid
from ..models.rng import RngStream
from .base import ProcessSpec, evaluate_kernel

logger = logging.getLogger(__name__)


class JumpLaw(ABC):
    """Law of a jump size: a sampler plus its scalar log-Laplace transform u -> log E e^{uJ}."""
    name: ClassVar[str] = "jump"

    @abstractmethod
    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        ...

    @abstractmethod
    def log_laplace(self, u: float) -> float:
        """May return +inf where the transform diverges."""

    @property
    @abstractmethod
    def mean(self) -> float:
        ...

    @property
    def nonnegative(self) -> bool:
        return False


@dataclass(frozen=True)
class ConstantJump(JumpLaw):
    name: ClassVar[str] = "constant"
    value: float = 1.0

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, float(self.value))

    def log_laplace(self, u: float) -> float:
        return u * self.value

    @property
    def mean(self) -> float:
        return float(self.value)

    @property
    def nonnegative(self) -> bool:
        return self.value >= 0


@dataclass(frozen=True)
class ExponentialJump(JumpLaw):
    """Exponential jump sizes with the given rate (mean 1/rate)."""
    name: ClassVar[str] = "exponential"
    rate: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError(f"exponential jump rate must be positive, got {self.rate}")

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        return gen.exponential(1.0 / self.rate, size)

    def log_laplace(self, u: float) -> float:
        if u >= self.rate:
            return np.inf
        return float(-np.log1p(-u / self.rate))

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    @property
    def nonnegative(self) -> bool:
        return True


@dataclass(frozen=True)
class NormalJump(JumpLaw):
    name: ClassVar[str] = "normal"
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.scale < 0:
            raise DomainError("normal jump scale must be non-negative")

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        return gen.normal(self.loc, self.scale, size)

    def log_laplace(self, u: float) -> float:
        return u * self.loc + 0.5 * (u * self.scale) ** 2

    @property
    def mean(self) -> float:
        return float(self.loc)

    @property
    def nonnegative(self) -> bool:
        return self.scale == 0 and self.loc >= 0


@dataclass(frozen=True)
class FixedJump:
    """A jump U at the deterministic time t."""
    time: float
    law: JumpLaw

    def __post_init__(self):
        if self.time < 0:
            raise DomainError(f"fixed jump time must be non-negative, got {self.time}")


@dataclass(frozen=True)
class PIISpec(ProcessSpec):
    """
    X_t = b(t) + W_{c(t)} + sum_{k <= N_t} J_k + sum_{t_i <= t} U_i.

    Only finite-activity jump parts are represented: a compound Poisson process with intensity
    `intensity` and jump law `jump_law`, plus jumps at the deterministic times of `fixed_jumps`.
    Jumps falling between grid nodes are attached to the next node.
    """
    name: ClassVar[str] = "pii"
    interpretation: ClassVar[Interpretation] = Interpretation.CADLAG
    drift: Callable = lambda t: 0.0 * t
    time_change: Callable = lambda t: 1.0 * t
    intensity: float = 0.0
    jump_law: Optional[JumpLaw] = None
    fixed_jumps: Tuple[FixedJump, ...] = ()
    label: str = "pii"

    def __post_init__(self):
        if not self.intensity >= 0:
            raise DomainError(f"jump intensity must be non-negative, got {self.intensity}")
        if self.intensity > 0 and self.jump_law is None:
            raise DomainError("a positive jump intensity needs a jump law")
        object.__setattr__(self, "fixed_jumps", tuple(self.fixed_jumps))

    @classmethod
    def brownian(cls) -> "PIISpec":
        return cls(label="brownian_motion")

    def _check_grid(self, grid: TimeGrid) -> Tuple[np.ndarray, np.ndarray]:
        c = evaluate_kernel(self.time_change, grid.points)
        if abs(c[0]) > 0:
            raise DomainError(f"{self.label}: time change must vanish at 0, got c(0)={c[0]}")
        if np.any(np.diff(c) < 0):
            raise DomainError(f"{self.label}: time change must be non-decreasing")
        for jump in self.fixed_jumps:
            grid.check_time(jump.time)
        b = evaluate_kernel(self.drift, grid.points)
        return b, c

    def sample(self, grid: TimeGrid, streams: List[RngStream], reflect: bool = False) -> np.ndarray:
        b, c = self._check_grid(grid)
        scale = np.sqrt(np.diff(c))
        T, h = grid.horizon, grid.step
        fixed_nodes = [grid.ceil_index(j.time) for j in self.fixed_jumps]
        out = np.empty((len(streams), grid.size))
        for i, stream in enumerate(streams):
            gen = stream.generator()
            increments = np.zeros(grid.size)
            increments[1:] = scale * gen.standard_normal(grid.n_steps)
            if self.intensity > 0:
                count = gen.poisson(self.intensity * T)
                times = gen.uniform(0.0, T, count)
                sizes = self.jump_law.sample(gen, count)
                nodes = np.clip(np.ceil(times / h - 1e-12).astype(int), 1, grid.n_steps)
                increments += np.bincount(nodes, weights=sizes, minlength=grid.size)
            for jump, node in zip(self.fixed_jumps, fixed_nodes):
                increments[node] += jump.law.sample(gen, 1)[0]
            out[i] = b + np.cumsum(increments)
        return out

    def log_laplace(self, u: float, t) -> np.ndarray:
        """Psi(u, t) = log E exp(u X_t) for scalar u and scalar or array t."""
        t = np.asarray(t, dtype=np.float64)
        psi = u * evaluate_kernel(self.drift, t) + 0.5 * u ** 2 * evaluate_kernel(self.time_change, t)
        if self.intensity > 0:
            jump_psi = self.jump_law.log_laplace(u)
            if not np.isfinite(jump_psi):
                raise DomainError(f"{self.label}: jump Laplace transform is infinite at u={u}")
            psi = psi + self.intensity * t * np.expm1(jump_psi)
        tol = 1e-12 * max(float(np.max(t, initial=0.0)), 1.0)
        for jump in self.fixed_jumps:
            jump_psi = jump.law.log_laplace(u)
            if not np.isfinite(jump_psi):
                raise DomainError(f"{self.label}: Laplace transform of the jump at t={jump.time} "
                                  f"is infinite at u={u}")
            psi = psi + jump_psi * (jump.time <= t + tol)
        if not np.all(np.isfinite(psi)):
            raise DomainError(f"{self.label}: log-Laplace transform is not finite at u={u}")
        return psi

    def mean(self, grid: TimeGrid) -> np.ndarray:
        m = evaluate_kernel(self.drift, grid.points).copy()
        if self.intensity > 0:
            m += self.intensity * grid.points * self.jump_law.mean
        for jump in self.fixed_jumps:
            m[grid.ceil_index(jump.time):] += jump.law.mean
        return m

    @property
    def has_nonnegative_jumps(self) -> bool:
        laws = [j.law for j in self.fixed_jumps]
        if self.intensity > 0:
            laws.append(self.jump_law)
        return all(law.nonnegative for law in laws)

    def fixed_jump_at(self, t: float, grid: TimeGrid) -> bool:
        node = grid.nearest_index(t)
        return any(grid.ceil_index(j.time) == node for j in self.fixed_jumps)

    def describe(self) -> dict:
        return {"name": self.name, "label": self.label, "intensity": self.intensity,
                "jump_law": self.jump_law.name if self.jump_law else None,
                "fixed_jumps": [j.time for j in self.fixed_jumps]}


@dataclass(frozen=True)
class ExpPII(ProcessSpec):
    """S_t = s0 exp(X_t - Psi(1, t)): the martingale exponential of a PII."""
    name: ClassVar[str] = "exp_pii"
    interpretation: ClassVar[Interpretation] = Interpretation.CADLAG
    pii: PIISpec = field(default_factory=PIISpec)
    s0: float = 100.0

    def __post_init__(self):
        if not self.s0 > 0:
            raise DomainError(f"s0 must be positive, got {self.s0}")

    def initial_value(self) -> float:
        return float(self.s0)

    def mean(self, grid: TimeGrid) -> np.ndarray:
        return np.full(grid.size, float(self.s0))

    def sample(self, grid: TimeGrid, streams: List[RngStream], reflect: bool = False) -> np.ndarray:
        x = self.pii.sample(grid, streams)
        psi = self.pii.log_laplace(1.0, grid.points)
        return self.s0 * np.exp(x - psi[None, :])

    def describe(self) -> dict:
        return {"name": self.name, "s0": self.s0, "pii": self.pii.describe()}


def simulate_pii(spec: PIISpec, grid: TimeGrid, rng: RngStream) -> Path:
    return Path(grid, spec.sample(grid, [rng])[0], Interpretation.CADLAG)


def log_laplace_pii(spec: PIISpec, u: float, t: float) -> float:
    return float(spec.log_laplace(u, t))
