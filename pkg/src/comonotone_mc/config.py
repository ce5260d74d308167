"""Application settings loaded from config/config.json."""

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional
import json
import logging

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parents[2] / "config" / "config.json"


@dataclass(frozen=True)
class Settings:
    """Defaults for the labs and the CLI. Experiment configs override the per-run ones."""
    z_threshold: float = 4.0
    workers: int = 1
    chunk_size: int = 4096
    output_dir: str = "output"
    kurtosis_limit: float = 100.0
    bootstrap_resamples: int = 200
    bootstrap_confidence: float = 0.99
    factorization_restarts: int = 20
    factorization_max_iter: int = 5000
    fbm_tail_factor: float = 50.0
    quad_factor: int = 4
    finite_difference_step: float = 1e-3
    mean_prepass_factor: int = 10
    parity_tolerance: float = 1e-12

    def with_overrides(self, **overrides) -> "Settings":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_settings(path: Optional[str] = None) -> Settings:
    """Read settings from a JSON file; a missing file yields the built-in defaults."""
    config_path = Path(path) if path else DEFAULT_CONFIG_PATH
    if not config_path.exists():
        return Settings()
    with open(config_path, "r") as f:
        data = json.load(f).get("lab_settings", {})
    known = {f.name for f in fields(Settings)}
    unknown = sorted(set(data) - known)
    if unknown:
        logger.warning("Ignoring unknown settings in %s: %s", config_path, ", ".join(unknown))
    return Settings(**{k: v for k, v in data.items() if k in known})
