"""Error types shared by the simulation, analysis and CLI layers."""

from typing import Optional


class ComonotoneError(Exception):
    """Base class for every error raised by comonotone_mc."""


class DomainError(ComonotoneError, ValueError):
    """An argument lies outside the domain of the operation (t outside [0,T], H outside (0,1], ...)."""


class StructuralError(ComonotoneError, ValueError):
    """Shapes or grids do not match, or a coupling the process cannot provide was requested."""


class SimulationError(ComonotoneError, RuntimeError):
    """A simulated state or a functional value became non-finite."""


class FactorizationError(ComonotoneError, ArithmeticError):
    """A matrix that must be positive semidefinite is not, within tolerance."""

    def __init__(self, message: str, min_eigenvalue: Optional[float] = None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class ConfigError(ComonotoneError, ValueError):
    """An experiment config is malformed; `location` is the dotted key path."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location
