"""Numerical laboratory for the radial (degree-one) Faddeev model in 2+1 and 4+1 dimensions."""
from .config import ExperimentConfig, load_config, parse_config
from .errors import BandError, ConfigError, DomainError, EvaluationError, LabError, ResolutionError

__version__ = "0.1.0"

__all__ = [
    "BandError", "ConfigError", "DomainError", "EvaluationError", "ExperimentConfig", "LabError",
    "ResolutionError", "__version__", "load_config", "parse_config",
]
