"""Brownian diffusions - Euler scheme with antithetic coupling, exact Black-Scholes paths"""

from dataclasses import dataclass
from typing import Callable, ClassVar, List, Optional, Tuple, Union
import logging
import threading

import numpy as np

from ..errors import DomainError, SimulationError
from ..models.grid import Path, TimeGrid
from ..models.rng import RngStream, standard_normals
from .base import ProcessSpec, evaluate_kernel, reflect_sign

logger = logging.getLogger(__name__)

_warned_steps = set()
_warned_lock = threading.Lock()


@dataclass(frozen=True)
class DiffusionSpec(ProcessSpec):
    """
    dX_t = b(t, X_t) dt + sigma(t, X_t) dW_t, X_0 = x0, simulated by its Euler scheme.

    `drift_lipschitz` is the user's bound on the Lipschitz constant of b in x; with it the scheme
    can be checked to be monotony preserving (h < 1 / Lip(b)).
    """
    name: ClassVar[str] = "diffusion"
    reflectable: ClassVar[bool] = True
    drift: Callable = lambda t, x: 0.0 * x
    vol: Callable = lambda t, x: 1.0 + 0.0 * x
    x0: float = 0.0
    drift_lipschitz: Optional[float] = None
    deterministic_vol: bool = False
    label: str = "diffusion"

    def __post_init__(self):
        if not np.isfinite(self.x0):
            raise DomainError("x0 must be finite")
        if self.drift_lipschitz is not None and self.drift_lipschitz < 0:
            raise DomainError("drift_lipschitz must be non-negative")

    def initial_value(self) -> float:
        return float(self.x0)

    def check_step(self, grid: TimeGrid) -> Optional[bool]:
        ok = euler_preserves_monotony(self, grid)
        key = (self.label, self.drift_lipschitz, grid)
        with _warned_lock:
            if key in _warned_steps:
                return ok
            _warned_steps.add(key)
        if ok is None:
            logger.warning("%s: no Lipschitz bound for the drift; Euler monotony preservation unchecked",
                           self.label)
        elif not ok:
            logger.warning("%s: step %.4g is not below 1/Lip(b) = %.4g; Euler transitions may not "
                           "preserve monotony", self.label, grid.step, 1.0 / self.drift_lipschitz)
        return ok

    def sample(self, grid: TimeGrid, streams: List[RngStream], reflect: bool = False) -> np.ndarray:
        self.check_step(grid)
        z = reflect_sign(reflect) * standard_normals(streams, grid.n_steps)
        h = grid.step
        sqrt_h = np.sqrt(h)
        out = np.empty((len(streams), grid.size))
        x = np.full(len(streams), float(self.x0))
        out[:, 0] = x
        for k in range(grid.n_steps):
            t = grid.points[k]
            sigma = evaluate_kernel(self.vol, np.float64(t), x)
            if np.any(sigma < 0):
                raise DomainError(f"{self.label}: negative volatility at step {k} (t={t:.6g})")
            x = x + h * evaluate_kernel(self.drift, np.float64(t), x) + sigma * sqrt_h * z[:, k]
            if not np.all(np.isfinite(x)):
                raise SimulationError(f"{self.label}: non-finite Euler state at step {k + 1} "
                                      f"(t={grid.points[k + 1]:.6g})")
            out[:, k + 1] = x
        return out

    def describe(self) -> dict:
        return {"name": self.name, "label": self.label, "x0": self.x0,
                "drift_lipschitz": self.drift_lipschitz}


def euler_preserves_monotony(spec: DiffusionSpec, grid: TimeGrid) -> Optional[bool]:
    """x -> x + h b(t, x) is non-decreasing when h < 1 / Lip(b); None without a Lipschitz bound."""
    if spec.drift_lipschitz is None:
        return None
    return spec.drift_lipschitz == 0 or grid.step < 1.0 / spec.drift_lipschitz


@dataclass(frozen=True)
class GBMSpec(ProcessSpec):
    """Black-Scholes model S_t = s0 exp(sigma W_t + (r - sigma^2/2) t)."""
    name: ClassVar[str] = "gbm"
    reflectable: ClassVar[bool] = True
    s0: float = 100.0
    rate: float = 0.0
    vol: float = 0.2

    def __post_init__(self):
        if not self.s0 > 0:
            raise DomainError(f"s0 must be positive, got {self.s0}")
        if not self.vol > 0:
            raise DomainError(f"vol must be positive, got {self.vol}")

    def initial_value(self) -> float:
        return float(self.s0)

    def mean(self, grid: TimeGrid) -> np.ndarray:
        return self.s0 * np.exp(self.rate * grid.points)

    def sample(self, grid: TimeGrid, streams: List[RngStream], reflect: bool = False) -> np.ndarray:
        z = reflect_sign(reflect) * standard_normals(streams, grid.n_steps)
        w = np.zeros((len(streams), grid.size))
        np.cumsum(np.sqrt(grid.step) * z, axis=1, out=w[:, 1:])
        drift = (self.rate - 0.5 * self.vol ** 2) * grid.points
        return self.s0 * np.exp(self.vol * w + drift[None, :])

    def as_diffusion(self) -> DiffusionSpec:
        r, sigma = self.rate, self.vol
        return DiffusionSpec(drift=lambda t, x: r * x, vol=lambda t, x: sigma * x, x0=self.s0,
                             drift_lipschitz=abs(r), label="gbm_euler")

    def describe(self) -> dict:
        return {"name": self.name, "s0": self.s0, "rate": self.rate, "vol": self.vol}


def simulate_euler(spec: DiffusionSpec, grid: TimeGrid, rng: RngStream,
                   antithetic: bool = False) -> Union[Path, Tuple[Path, Path]]:
    path = Path(grid, spec.sample(grid, [rng])[0])
    if not antithetic:
        return path
    return path, Path(grid, spec.sample(grid, [rng], reflect=True)[0])


def simulate_gbm_exact(spec: GBMSpec, grid: TimeGrid, rng: RngStream) -> Path:
    return Path(grid, spec.sample(grid, [rng])[0])
