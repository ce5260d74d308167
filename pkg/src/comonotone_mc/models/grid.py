"""Time grids, path containers and the two canonical path approximation operators."""

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from ..errors import DomainError, StructuralError

# Relative slack used when mapping a time onto a node index.
_NODE_TOL = 1e-12


class Interpretation(Enum):
    CONTINUOUS = "continuous"  # piecewise-linear between nodes
    CADLAG = "cadlag"          # stepwise, value of t_k held on [t_k, t_{k+1})


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = kT/n, k = 0..n, on [0, T]."""
    horizon: float
    n_steps: int

    def __post_init__(self):
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise DomainError(f"horizon must be positive, got {self.horizon}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps}")
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def step(self) -> float:
        return self.horizon / self.n_steps

    @property
    def size(self) -> int:
        return self.n_steps + 1

    @cached_property
    def points(self) -> np.ndarray:
        pts = np.arange(self.size, dtype=np.float64) * self.step
        pts[-1] = self.horizon
        pts.setflags(write=False)
        return pts

    def check_time(self, t: float) -> float:
        if not (0.0 <= t <= self.horizon):
            raise DomainError(f"t={t} lies outside [0, {self.horizon}]")
        return float(t)

    def floor_index(self, t: float) -> int:
        """Largest k with t_k <= t."""
        t = self.check_time(t)
        k = int(np.floor(t / self.step + _NODE_TOL))
        return min(k, self.n_steps)

    def ceil_index(self, t: float) -> int:
        """Smallest k with t_k >= t (the node a jump at time t is attached to)."""
        t = self.check_time(t)
        k = int(np.ceil(t / self.step - _NODE_TOL))
        return max(0, min(k, self.n_steps))

    def nearest_index(self, t: float) -> int:
        t = self.check_time(t)
        return int(np.rint(t / self.step))

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "n_steps": self.n_steps}


@dataclass(frozen=True, eq=False)
class Path:
    """Node values of a trajectory on a grid, with the rule used between nodes."""
    grid: TimeGrid
    values: np.ndarray
    interpretation: Interpretation = Interpretation.CONTINUOUS

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1 or values.shape[0] != self.grid.size:
            raise StructuralError(
                f"path has {values.shape} values, grid needs {self.grid.size}")
        if not np.all(np.isfinite(values)):
            raise DomainError("path values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]

    def value_at(self, t: float) -> float:
        if self.interpretation is Interpretation.CADLAG:
            return float(self.values[self.grid.floor_index(t)])
        return linear_interpolate(self, t)

    def with_values(self, values: np.ndarray) -> "Path":
        return Path(self.grid, values, self.interpretation)


def linear_interpolate(path: Path, t: float) -> float:
    """Piecewise-linear interpolant of the node values at time t."""
    t = path.grid.check_time(t)
    return float(np.interp(t, path.grid.points, path.values))


def stepwise_approximation(path: Path, m: int) -> Path:
    """
    Stepwise constant approximation on the coarse grid kT/m, sampled back onto the path's grid.

    The coarse value on [t^m_{k-1}, t^m_k) is the path evaluated at t^m_{k-1} (with the path's own
    interpretation between its nodes); the value at T is kept.
    """
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    grid = path.grid
    coarse = TimeGrid(grid.horizon, int(m))
    coarse_values = np.array([path.value_at(t) for t in coarse.points])
    cell = np.floor(grid.points / coarse.step + _NODE_TOL).astype(int)
    cell = np.minimum(cell, coarse.n_steps)
    sampled = coarse_values[cell]
    sampled[-1] = path.values[-1]
    return Path(grid, sampled, Interpretation.CADLAG)


def pointwise_leq(a: Path, b: Path) -> bool:
    """Pointwise order on node values: a <= b iff a(t_k) <= b(t_k) for every k."""
    if a.grid != b.grid:
        raise StructuralError("paths live on different grids")
    return bool(np.all(a.values <= b.values))
