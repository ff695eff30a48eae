"""JSON-configured experiment runner and command-line interface."""
from .config import load_config, validate_config
from .report import Metric, Report, emit
from .runner import run

__all__ = ["load_config", "validate_config", "Metric", "Report", "emit", "run"]
