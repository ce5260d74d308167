"""Process spec base class and helpers shared by the samplers."""

from abc import ABC, abstractmethod
from typing import Callable, ClassVar, List, Optional
import logging

import numpy as np

from ..errors import DomainError
from ..models.grid import Interpretation, Path, TimeGrid
from ..models.rng import RngStream

logger = logging.getLogger(__name__)


class ProcessSpec(ABC):
    """
    A parameterized process that can be sampled on a grid.

    `sample` is a pure function of (spec, grid, streams): row i depends only on streams[i]. With
    `reflect=True` the same draws are used with the Gaussian driving noise negated (W -> -W).
    """
    name: ClassVar[str] = "process"
    reflectable: ClassVar[bool] = False
    interpretation: ClassVar[Interpretation] = Interpretation.CONTINUOUS

    @abstractmethod
    def sample(self, grid: TimeGrid, streams: List[RngStream], reflect: bool = False) -> np.ndarray:
        """(len(streams), grid.size) array of node values."""

    def initial_value(self) -> float:
        return 0.0

    def mean(self, grid: TimeGrid) -> Optional[np.ndarray]:
        """Closed-form E X_{t_k}, or None when unknown."""
        return None

    def paths(self, grid: TimeGrid, streams: List[RngStream], reflect: bool = False) -> List[Path]:
        values = self.sample(grid, streams, reflect=reflect)
        return [Path(grid, row, self.interpretation) for row in values]

    def describe(self) -> dict:
        return {"name": self.name}


def evaluate_kernel(f: Callable, *args: np.ndarray) -> np.ndarray:
    """Evaluate a user kernel on broadcast arrays, falling back to element-wise calls."""
    shape = np.broadcast_shapes(*(np.shape(a) for a in args))
    try:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.asarray(f(*args), dtype=np.float64)
        if out.shape != shape:
            out = np.broadcast_to(out, shape).astype(np.float64)
    except (TypeError, ValueError):
        out = np.vectorize(f, otypes=[np.float64])(*args)
    return out


def check_kernel_values(values: np.ndarray, label: str) -> None:
    if not np.all(np.isfinite(values)):
        raise DomainError(f"{label} is not finite at every evaluation point")
    if np.any(values < 0):
        logger.warning("%s takes negative values on the grid; co-monotony is not guaranteed", label)


def reflect_sign(reflect: bool) -> float:
    return -1.0 if reflect else 1.0
