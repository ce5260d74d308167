"""Path functionals with declared monotonicity, and the weighting measures they integrate against."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from ..errors import DomainError, StructuralError
from .grid import Path, TimeGrid


class Monotonicity(Enum):
    NON_DECREASING = "non_decreasing"
    NON_INCREASING = "non_increasing"
    NONE = "none"

    def flipped(self) -> "Monotonicity":
        if self is Monotonicity.NON_DECREASING:
            return Monotonicity.NON_INCREASING
        if self is Monotonicity.NON_INCREASING:
            return Monotonicity.NON_DECREASING
        return Monotonicity.NONE

    def compose(self, inner: "Monotonicity") -> "Monotonicity":
        """Monotonicity of g o F given g's (self) and F's (inner)."""
        if Monotonicity.NONE in (self, inner):
            return Monotonicity.NONE
        return inner if self is Monotonicity.NON_DECREASING else inner.flipped()


@dataclass(frozen=True)
class WeightMeasure:
    """
    Nonnegative finite measure on [0, T]: atoms plus an optional density.

    The density is integrated with the left-point rule on the grid cells, so the density weight of
    node k covers the cell [t_k, t_{k+1}).
    """
    atoms: Tuple[Tuple[float, float], ...] = ()
    density: Optional[Callable] = None
    label: str = "measure"

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple((float(t), float(w)) for t, w in self.atoms))
        if any(w < 0 for _, w in self.atoms):
            raise DomainError(f"{self.label}: atom weights must be non-negative")
        if any(t < 0 for t, _ in self.atoms):
            raise DomainError(f"{self.label}: atoms must lie in [0, T]")
        if not self.atoms and self.density is None:
            raise DomainError(f"{self.label}: measure has no mass")

    @classmethod
    def dirac(cls, t: float) -> "WeightMeasure":
        return cls(atoms=((t, 1.0),), label=f"dirac({t:g})")

    @classmethod
    def terminal(cls) -> "WeightMeasure":
        """delta_T for whatever grid the measure is used on."""
        return cls(atoms=((np.inf, 1.0),), label="dirac(T)")

    @classmethod
    def lebesgue(cls, normalized: bool = True) -> "WeightMeasure":
        if normalized:
            return cls(density=_normalized_lebesgue, label="lebesgue/T")
        return cls(density=_lebesgue, label="lebesgue")

    @classmethod
    def exponential(cls, rate: float) -> "WeightMeasure":
        """e^{rt} (1/T) dt."""
        return cls(density=lambda t, horizon: np.exp(rate * t) / horizon, label=f"exp({rate:g})/T")

    def node_weights(self, grid: TimeGrid, until_index: Optional[int] = None) -> np.ndarray:
        """
        Node weights of the measure restricted to [0, t_j], j = until_index (default n).

        Density cells strictly before t_j and atoms at nodes up to and including j contribute.
        """
        j = grid.n_steps if until_index is None else int(until_index)
        weights = np.zeros(grid.size)
        if self.density is not None:
            values = np.asarray(self.density(grid.points[:j], grid.horizon), dtype=np.float64)
            values = np.broadcast_to(values, (j,))
            if np.any(values < 0) or not np.all(np.isfinite(values)):
                raise DomainError(f"{self.label}: density must be finite and non-negative")
            weights[:j] = values * grid.step
        for t, w in self.atoms:
            node = grid.n_steps if np.isinf(t) else grid.ceil_index(t)
            if node <= j:
                weights[node] += w
        if until_index is None and not weights.sum() > 0:
            raise DomainError(f"{self.label}: total mass must be positive")
        return weights

    def total_mass(self, grid: TimeGrid) -> float:
        return float(self.node_weights(grid).sum())


def _normalized_lebesgue(t, horizon):
    return np.full(np.shape(t), 1.0 / horizon)


def _lebesgue(t, horizon):
    return np.ones(np.shape(t))


PathEvaluator = Callable[[np.ndarray, TimeGrid], np.ndarray]


@dataclass(frozen=True)
class MonotoneFunctional:
    """
    A map from paths to reals with declared monotonicity for the pointwise order.

    `evaluator` works on a batch: ndarray (N, n+1) of node values -> ndarray (N,).
    """
    name: str
    evaluator: PathEvaluator
    monotonicity: Monotonicity
    continuity_verified: bool = True
    parameters: Dict[str, float] = field(default_factory=dict, hash=False, compare=False)

    def evaluate(self, paths: np.ndarray, grid: TimeGrid) -> np.ndarray:
        paths = np.atleast_2d(paths)
        if paths.shape[1] != grid.size:
            raise StructuralError(f"{self.name}: paths have {paths.shape[1]} nodes, grid has {grid.size}")
        return np.asarray(self.evaluator(paths, grid), dtype=np.float64)

    def __call__(self, path: Path) -> float:
        return float(self.evaluate(path.values[None, :], path.grid)[0])

    def to_dict(self) -> dict:
        return {"name": self.name, "monotonicity": self.monotonicity.value,
                "continuity_verified": self.continuity_verified, "parameters": dict(self.parameters)}


@dataclass(frozen=True)
class ScalarMap:
    """A real function g with its declared monotonicity, for compose()."""
    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    monotonicity: Monotonicity


IDENTITY = ScalarMap("identity", lambda x: x, Monotonicity.NON_DECREASING)
EXP = ScalarMap("exp", np.exp, Monotonicity.NON_DECREASING)
NEGATION = ScalarMap("negation", np.negative, Monotonicity.NON_INCREASING)
TANH = ScalarMap("tanh", np.tanh, Monotonicity.NON_DECREASING)
CUBE = ScalarMap("cube", lambda x: x ** 3, Monotonicity.NON_DECREASING)
SQUARE = ScalarMap("square", np.square, Monotonicity.NONE)

SCALAR_MAPS = {m.name: m for m in (IDENTITY, EXP, NEGATION, TANH, CUBE, SQUARE)}


def _window_end(grid: TimeGrid, monitor_until: Optional[float]) -> int:
    if monitor_until is None:
        return grid.size
    return grid.floor_index(min(monitor_until, grid.horizon)) + 1


def terminal() -> MonotoneFunctional:
    return MonotoneFunctional("terminal", lambda p, g: p[:, -1], Monotonicity.NON_DECREASING)


def coordinate(k: int) -> MonotoneFunctional:
    return MonotoneFunctional(f"coordinate({k})", lambda p, g: p[:, k], Monotonicity.NON_DECREASING,
                              parameters={"k": k})


def running_max(monitor_until: Optional[float] = None) -> MonotoneFunctional:
    def evaluate(p, g):
        return p[:, :_window_end(g, monitor_until)].max(axis=1)
    return MonotoneFunctional("running_max", evaluate, Monotonicity.NON_DECREASING)


def running_min(monitor_until: Optional[float] = None) -> MonotoneFunctional:
    def evaluate(p, g):
        return p[:, :_window_end(g, monitor_until)].min(axis=1)
    return MonotoneFunctional("running_min", evaluate, Monotonicity.NON_DECREASING)


def integral(measure: WeightMeasure) -> MonotoneFunctional:
    def evaluate(p, g):
        return p @ measure.node_weights(g)
    return MonotoneFunctional(f"integral[{measure.label}]", evaluate, Monotonicity.NON_DECREASING)


def call_payoff(strike: float) -> MonotoneFunctional:
    if not strike > 0:
        raise DomainError(f"strike must be positive, got {strike}")
    return MonotoneFunctional(f"call({strike:g})", lambda p, g: np.maximum(p[:, -1] - strike, 0.0),
                              Monotonicity.NON_DECREASING, parameters={"K": strike})


def _check_level(level: float, eps: Optional[float] = None) -> None:
    if not level > 0:
        raise DomainError(f"barrier level must be positive, got {level}")
    if eps is not None and not eps > 0:
        raise DomainError(f"smoothing width must be positive, got {eps}")


def smoothed_down_indicator(level: float, eps: float,
                            monitor_until: Optional[float] = None) -> MonotoneFunctional:
    """(1 - (min - L)/eps)_+ ^ 1: equals 1 when min <= L, 0 when min >= L + eps."""
    _check_level(level, eps)
    inner = running_min(monitor_until)

    def evaluate(p, g):
        return np.clip(1.0 - (inner.evaluator(p, g) - level) / eps, 0.0, 1.0)
    return MonotoneFunctional(f"smoothed_down({level:g},{eps:g})", evaluate, Monotonicity.NON_INCREASING,
                              parameters={"L": level, "eps": eps})


def smoothed_up_indicator(level: float, eps: float,
                          monitor_until: Optional[float] = None) -> MonotoneFunctional:
    """(1 - (L - max)/eps)_+ ^ 1: equals 1 when max >= L, 0 when max <= L - eps."""
    _check_level(level, eps)
    inner = running_max(monitor_until)

    def evaluate(p, g):
        return np.clip(1.0 - (level - inner.evaluator(p, g)) / eps, 0.0, 1.0)
    return MonotoneFunctional(f"smoothed_up({level:g},{eps:g})", evaluate, Monotonicity.NON_DECREASING,
                              parameters={"L": level, "eps": eps})


def down_indicator(level: float, monitor_until: Optional[float] = None) -> MonotoneFunctional:
    """1{min <= L}; sup-norm continuity at the atoms of the running minimum is not checked."""
    _check_level(level)
    inner = running_min(monitor_until)
    return MonotoneFunctional(f"down_indicator({level:g})",
                              lambda p, g: (inner.evaluator(p, g) <= level).astype(np.float64),
                              Monotonicity.NON_INCREASING, continuity_verified=False,
                              parameters={"L": level})


def up_indicator(level: float, monitor_until: Optional[float] = None) -> MonotoneFunctional:
    """1{max > L}; continuity unverified, as for down_indicator."""
    _check_level(level)
    inner = running_max(monitor_until)
    return MonotoneFunctional(f"up_indicator({level:g})",
                              lambda p, g: (inner.evaluator(p, g) > level).astype(np.float64),
                              Monotonicity.NON_DECREASING, continuity_verified=False,
                              parameters={"L": level})


def compose(g: ScalarMap, inner: MonotoneFunctional) -> MonotoneFunctional:
    return MonotoneFunctional(f"{g.name}({inner.name})",
                              lambda p, grid: g.fn(inner.evaluator(p, grid)),
                              g.monotonicity.compose(inner.monotonicity),
                              continuity_verified=inner.continuity_verified,
                              parameters=dict(inner.parameters))


def negate(inner: MonotoneFunctional) -> MonotoneFunctional:
    return compose(NEGATION, inner)
