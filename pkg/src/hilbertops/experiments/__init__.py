"""Configurable, reproducible experiments and their command line interface."""

from .config import EXPERIMENTS, ConfigError, ExperimentConfig, load, validate
from .runner import ExperimentReport, run

__all__ = ["EXPERIMENTS", "ConfigError", "ExperimentConfig", "ExperimentReport", "load",
           "run", "validate"]
