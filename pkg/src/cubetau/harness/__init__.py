"""Experiment configs, convergence sweeps, the finite-difference oracle and the CLI."""

from .config import ConfigError, ExperimentConfig, ReferenceMode, bundled_configs, load_config, parse_config
from .experiment import ExperimentResult, SolverFailure, run_eig, run_experiment, solve_config
from .expr import Expression, ExpressionError, expression_eval
from .fd import fd_oracle_poisson_2d
from .report import ConvergenceReport, ConvergenceRow

__all__ = [
    "ConfigError",
    "ConvergenceReport",
    "ConvergenceRow",
    "ExperimentConfig",
    "ExperimentResult",
    "Expression",
    "ExpressionError",
    "ReferenceMode",
    "SolverFailure",
    "bundled_configs",
    "expression_eval",
    "fd_oracle_poisson_2d",
    "load_config",
    "parse_config",
    "run_eig",
    "run_experiment",
    "solve_config",
]
