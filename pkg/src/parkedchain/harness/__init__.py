"""Experiment orchestration: config, scenario runners, CLI."""

from .config import ConfigError, ConsensusBlock, ExperimentConfig, config_digest, validate_config
from .scenarios import SCENARIOS, ResultTable, run_scenario

__all__ = [
    "ConfigError",
    "ConsensusBlock",
    "ExperimentConfig",
    "config_digest",
    "validate_config",
    "SCENARIOS",
    "ResultTable",
    "run_scenario",
]
