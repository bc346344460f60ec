"""Application-aware LTE downlink resource-block scheduling and power control."""

from .utility import Logarithmic, Sigmoidal, evaluate, derivative, marginal_ratio
from .scenario import ScenarioConfig, paper_preset, load_config, dump_config

__all__ = [
    "Logarithmic",
    "Sigmoidal",
    "evaluate",
    "derivative",
    "marginal_ratio",
    "ScenarioConfig",
    "paper_preset",
    "load_config",
    "dump_config",
]

__version__ = "0.1.0"
