"""Experiment Config - JSON experiment files, validation and command-line overrides"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional
import json
import logging

from ..errors import ConfigError, DomainError
from ..models.grid import TimeGrid
from .registry import check_keys

logger = logging.getLogger(__name__)

EXPERIMENT_KINDS = ("simulate", "comonotony", "antithetic", "peacock", "barrier", "pitt")

TOP_LEVEL_KEYS = {"name", "description", "kind", "seed", "n_paths", "grid", "process", "output", "z_threshold",
                  "workers", "chunk_size"}

# Keys accepted inside each kind's block; nested items are checked where they are built.
BLOCK_KEYS: Dict[str, set] = {
    "simulate": {"oracle", "z_threshold", "truncation_deficit"},
    "comonotony": {"cases", "functionals", "pairs", "negative_control", "running_extrema", "kurtosis_limit"},
    "antithetic": {"functionals", "bootstrap_resamples", "confidence"},
    "peacock": {"curves"},
    "barrier": {"strike", "level", "up_level", "kinds", "discount", "monitor_until", "smoothing", "ladder"},
    "pitt": {"matrix", "rank", "tol", "max_iter", "restarts", "expect", "statistical", "negative_control"},
}

PROCESS_FREE_KINDS = ("pitt", "peacock")


@dataclass(frozen=True)
class ExperimentConfig:
    """One validated experiment: what to run, on which grid, with which seed and path budget."""
    name: str
    kind: str
    seed: int
    n_paths: int
    grid: TimeGrid
    process: Optional[Dict[str, Any]] = None
    block: Dict[str, Any] = field(default_factory=dict)
    output: Optional[str] = None
    z_threshold: Optional[float] = None
    workers: Optional[int] = None
    chunk_size: Optional[int] = None
    description: str = ""
    source: Optional[str] = None

    def to_dict(self) -> dict:
        data = {
            "name": self.name,
            "description": self.description,
            "kind": self.kind,
            "seed": self.seed,
            "n_paths": self.n_paths,
            "grid": self.grid.to_dict(),
            "process": self.process,
            self.kind: self.block,
            "output": self.output,
        }
        return {k: v for k, v in data.items() if v is not None}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], source: Optional[str] = None) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("an experiment config must be a JSON object")
        kind = data.get("kind")
        if kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {kind!r}; known: {', '.join(EXPERIMENT_KINDS)}", "kind")
        check_keys(data, TOP_LEVEL_KEYS | {kind}, "")
        block = data.get(kind, {})
        check_keys(block, BLOCK_KEYS[kind], kind)

        if "seed" not in data:
            raise ConfigError("seed is mandatory", "seed")
        seed = _integer(data["seed"], "seed", minimum=0)
        n_paths = _integer(data.get("n_paths", 100000), "n_paths", minimum=2)

        grid_block = data.get("grid", {"horizon": 1.0, "n_steps": 256})
        check_keys(grid_block, {"horizon", "n_steps"}, "grid")
        try:
            grid = TimeGrid(float(grid_block.get("horizon", 1.0)), _integer(grid_block.get("n_steps", 256),
                                                                             "grid.n_steps", minimum=1))
        except DomainError as e:
            raise ConfigError(str(e), "grid") from e

        process = data.get("process")
        if process is None and kind not in PROCESS_FREE_KINDS and not (kind == "comonotony" and "cases" in block):
            raise ConfigError("missing process block", "process")

        z = data.get("z_threshold")
        return cls(
            name=str(data.get("name") or (Path(source).stem if source else kind)),
            kind=kind,
            seed=seed,
            n_paths=n_paths,
            grid=grid,
            process=process,
            block=block,
            output=data.get("output"),
            z_threshold=float(z) if z is not None else None,
            workers=_integer(data["workers"], "workers", minimum=1) if "workers" in data else None,
            chunk_size=_integer(data["chunk_size"], "chunk_size", minimum=1) if "chunk_size" in data else None,
            description=str(data.get("description", "")),
            source=source,
        )

    def with_overrides(self, n_paths: Optional[int] = None, seed: Optional[int] = None,
                       output: Optional[str] = None, workers: Optional[int] = None) -> "ExperimentConfig":
        """Command-line values win over the file; None leaves a field untouched."""
        changes = {}
        if n_paths is not None:
            changes["n_paths"] = _integer(n_paths, "--paths", minimum=2)
        if seed is not None:
            changes["seed"] = _integer(seed, "--seed", minimum=0)
        if output is not None:
            changes["output"] = str(output)
        if workers is not None:
            changes["workers"] = _integer(workers, "--workers", minimum=1)
        return replace(self, **changes)


def _integer(value: Any, location: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"expected an integer, got {value!r}", location)
    value = int(value)
    if value < minimum:
        raise ConfigError(f"must be >= {minimum}, got {value}", location)
    return value


def load_experiment(path: str) -> ExperimentConfig:
    """Read and validate an experiment file."""
    config_path = Path(path)
    if not config_path.exists():
        raise FileNotFoundError(f"experiment config not found: {config_path}")
    with open(config_path, "r") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e.msg} (line {e.lineno})", str(config_path)) from e
    config = ExperimentConfig.from_dict(data, source=str(config_path))
    logger.debug("loaded experiment %s (%s) from %s", config.name, config.kind, config_path)
    return config
