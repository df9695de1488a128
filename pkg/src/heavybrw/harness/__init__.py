"""Config-driven experiments comparing finite-generation simulations with their limits."""
from .config import ConfigError, ExperimentConfig
from .experiments import EXPERIMENT_FUNCS, Outcome, run_experiment, sample_limit, write_outcome
from .stats import Comparison, ComparisonReport

__all__ = ["ConfigError", "ExperimentConfig", "EXPERIMENT_FUNCS", "Outcome", "run_experiment",
           "sample_limit", "write_outcome", "Comparison", "ComparisonReport"]
