"""Experiment harness: configs, generators, noise, sweeps and the CLI."""

from .config import ConfigError, ExperimentConfig, parse_config, parse_config_string
from .io import make_noise
from .runner import run

__all__ = ["ConfigError", "ExperimentConfig", "make_noise", "parse_config", "parse_config_string", "run"]
